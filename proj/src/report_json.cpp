#include "kpf/report_json.hpp"

#include <cmath>
#include <limits>

#include "kpf/matrix_io.hpp"

namespace kpf {

using nlohmann::json;

json number_json(double x) {
  if (std::isfinite(x)) return x;
  return io::format_double(x);
}

double json_number(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  throw InputError("expected a number in JSON, got " + j.dump());
}

namespace {

json numbers_json(std::span<const double> v) {
  json a = json::array();
  for (double x : v) a.push_back(number_json(x));
  return a;
}

std::vector<double> json_numbers(const json& j) {
  std::vector<double> v;
  for (const auto& e : j) v.push_back(json_number(e));
  return v;
}

json dims_json(const Dims& d) {
  return {{"p1", d.p1}, {"p2", d.p2}, {"q1", d.q1}, {"q2", d.q2}, {"n", d.n}};
}

}  // namespace

json matrix_json(const Mat& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) rows.push_back(numbers_json(m.row(i)));
  return rows;
}

Mat json_matrix(const json& j) {
  if (!j.is_array() || j.empty()) throw InputError("expected a nonempty matrix in JSON");
  const std::size_t rows = j.size(), cols = j[0].size();
  Mat m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    if (j[i].size() != cols) throw InputError("ragged matrix in JSON");
    for (std::size_t c = 0; c < cols; ++c) m(i, c) = json_number(j[i][c]);
  }
  return m;
}

json fit_report_json(const FitReport& fit) {
  json factors = json::array();
  for (const auto& t : fit.coefficients.factors)
    factors.push_back({{"beta1", matrix_json(t.beta1)}, {"beta2", matrix_json(t.beta2)}});
  return {{"dims", dims_json(fit.coefficients.dims)},
          {"d_bar", fit.d_bar},
          {"d_selected", fit.d_selected},
          {"randomized_svd", fit.randomized_svd},
          {"sigma", numbers_json(fit.coefficients.sigma)},
          {"singular_values", numbers_json(fit.singular_values_all)},
          {"selection_ratios", numbers_json(fit.selection_ratios)},
          {"factors", factors}};
}

FitReport fit_report_from_json(const json& j) {
  try {
    FitReport fit;
    const auto& d = j.at("dims");
    fit.coefficients.dims = Dims{d.at("p1").get<std::size_t>(), d.at("p2").get<std::size_t>(),
                                 d.at("q1").get<std::size_t>(), d.at("q2").get<std::size_t>(),
                                 d.at("n").get<std::size_t>()};
    fit.d_bar = j.at("d_bar").get<std::size_t>();
    fit.d_selected = j.at("d_selected").get<std::size_t>();
    fit.randomized_svd = j.at("randomized_svd").get<bool>();
    fit.coefficients.sigma = json_numbers(j.at("sigma"));
    fit.singular_values_all = json_numbers(j.at("singular_values"));
    fit.selection_ratios = json_numbers(j.at("selection_ratios"));
    for (const auto& f : j.at("factors"))
      fit.coefficients.factors.push_back({json_matrix(f.at("beta1")), json_matrix(f.at("beta2"))});
    return fit;
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed fit summary: ") + e.what());
  }
}

json mle_state_json(const MleState& s) {
  return {{"loglik", number_json(s.loglik)},
          {"iterations", s.iterations},
          {"converged", s.converged},
          {"pinv_fallback", s.pinv_fallback},
          {"jitter_applied", s.jitter_applied},
          {"loglik_trace", numbers_json(s.loglik_trace)},
          {"beta1", matrix_json(s.beta1)},
          {"beta2", matrix_json(s.beta2)},
          {"Sigma1", matrix_json(s.Sigma1)},
          {"Sigma2", matrix_json(s.Sigma2)}};
}

json run_report_json(const RunReport& report) {
  json cfg = json::object();
  for (const auto& [k, v] : config_to_map(report.config)) cfg[k] = v;

  json cells = json::array();
  for (const auto& c : report.cells)
    cells.push_back({{"method", c.method.label()},
                     {"n", c.n},
                     {"mean_rel_error_percent", number_json(100.0 * c.mean)},
                     {"standard_error_percent", number_json(100.0 * c.standard_error)},
                     {"count", c.count},
                     {"failures", c.failures}});

  json failures = json::array();
  for (const auto& r : report.records)
    if (!r.failure.empty())
      failures.push_back({{"method", r.method.label()},
                          {"n", r.n},
                          {"replicate", r.replicate},
                          {"message", r.failure}});

  json out = {{"tool", "kroprofac"},
              {"version", report.version},
              {"wall_seconds", report.wall_seconds},
              {"config", cfg},
              {"cells", cells},
              {"failures", failures}};

  if (!report.spectra.empty()) {
    json spec = json::array();
    for (std::size_t n : report.config.n_grid) {
      std::vector<double> a, b;
      for (const auto& s : report.spectra)
        if (s.n == n) {
          a.push_back(s.f1_rearranged);
          b.push_back(s.f1_raw);
        }
      if (a.empty()) continue;
      double sa = 0, sb = 0;
      for (std::size_t i = 0; i < a.size(); ++i) {
        sa += a[i];
        sb += b[i];
      }
      spec.push_back({{"n", n},
                      {"mean_f1_rearranged", sa / a.size()},
                      {"mean_f1_raw", sb / b.size()},
                      {"count", a.size()}});
    }
    out["spectrum"] = spec;
  }
  return out;
}

}  // namespace kpf
