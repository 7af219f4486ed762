#include "kpf/experiment.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include "kpf/estimator.hpp"
#include "kpf/matrix_io.hpp"
#include "kpf/metrics.hpp"
#include "kpf/mle.hpp"
#include "kpf/report_json.hpp"
#include "kpf/simgen.hpp"
#include "kpf/tensor_core.hpp"

namespace kpf {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct TaskOutput {
  std::vector<ReplicateRecord> records;  // one per method, config order
  std::optional<SpectrumRecord> spectrum;
};

std::vector<double> singular_values(const Mat& m) { return svd_full(m).S; }

/// Feeds one replicate's rows into the cross products of the plain data and
/// of each rank-alpha truncated response.
struct Accumulators {
  CrossProducts plain;
  std::vector<std::size_t> alphas;
  std::vector<CrossProducts> truncated;
  std::vector<double> scratch;

  Accumulators(const Dims& dims, std::vector<std::size_t> alpha_list)
      : plain(dims.q(), dims.p()), alphas(std::move(alpha_list)), scratch(dims.p()) {
    for (std::size_t i = 0; i < alphas.size(); ++i) truncated.emplace_back(dims.q(), dims.p());
  }

  void add(const Dims& dims, std::span<const double> x, std::span<const double> y) {
    plain.add_row(x, y);
    for (std::size_t i = 0; i < alphas.size(); ++i) {
      std::copy(y.begin(), y.end(), scratch.begin());
      truncate_response_row(scratch, dims, alphas[i]);
      truncated[i].add_row(x, scratch);
    }
  }
};

std::vector<Mat> split_rows(const Mat& stacked, std::size_t rows, std::size_t cols) {
  std::vector<Mat> out;
  out.reserve(stacked.rows());
  for (std::size_t i = 0; i < stacked.rows(); ++i) out.push_back(vec_inv(stacked.row(i), rows, cols));
  return out;
}

void dump_replicate(const std::filesystem::path& dir, const Dataset& data, std::size_t n,
                    std::size_t r, const KpfOptions& kopts) {
  const std::string stem = "n" + std::to_string(n) + "_r" + std::to_string(r);
  io::write_kst(dir / (stem + "_X.kst"), split_rows(data.X, data.dims.q1, data.dims.q2));
  io::write_kst(dir / (stem + "_Y.kst"), split_rows(data.Y, data.dims.p1, data.dims.p2));
  nlohmann::json j;
  try {
    j = fit_report_json(kro_pro_fac(data, kopts));
  } catch (const Error& e) {
    j = {{"error", e.what()}};
  }
  std::ofstream out(dir / (stem + "_fit.json"));
  if (!out) throw InputError("cannot write " + (dir / (stem + "_fit.json")).string());
  out << j.dump(2) << '\n';
}

TaskOutput run_task(const ExperimentConfig& cfg, const KroneckerCoefficients& coeffs,
                    const Mat& nu_true, std::size_t n, std::size_t r, const RunOptions& opts) {
  Dims dims = cfg.dims;
  dims.n = n;
  const SeedTuple seeds = replicate_seeds(cfg.seed_base, r);
  const std::uint64_t rep_seed = cfg.seed_base ^ static_cast<std::uint64_t>(r);

  std::vector<std::size_t> alphas;
  bool need_mle = false;
  for (const auto& m : cfg.methods) {
    if (m.kind == MethodKind::KpfAlpha &&
        std::find(alphas.begin(), alphas.end(), m.param) == alphas.end())
      alphas.push_back(m.param);
    if (m.kind == MethodKind::Mle) need_mle = true;
  }

  KpfOptions kopts;
  kopts.d_bar = cfg.d_bar;
  kopts.d_fixed = cfg.d_fit;

  TaskOutput out;
  auto failed_all = [&](const std::string& why) {
    for (const auto& m : cfg.methods)
      out.records.push_back({m, n, r, rep_seed, kNaN, 0, why});
    return out;
  };

  // Data: streamed row by row unless some consumer needs it in memory.
  Accumulators acc(dims, alphas);
  std::optional<Dataset> data;
  try {
    if (need_mle || opts.dump_dir) {
      data = gen_dataset(coeffs, n, cfg.noise, seeds.design, seeds.noise);
      data->dims.n = n;
      for (std::size_t i = 0; i < n; ++i) acc.add(dims, data->X.row(i), data->Y.row(i));
      if (opts.dump_dir) dump_replicate(*opts.dump_dir, *data, n, r, kopts);
    } else {
      ReplicateStream stream(coeffs, cfg.noise, seeds.design, seeds.noise);
      std::vector<double> x(dims.q()), y(dims.p());
      for (std::size_t i = 0; i < n; ++i) {
        stream.next(x, y);
        acc.add(dims, x, y);
      }
    }
  } catch (const InputError&) {
    throw;
  } catch (const Error& e) {
    return failed_all(e.what());
  }

  std::optional<Mat> nu_tilde;
  std::string ols_failure;
  try {
    nu_tilde = acc.plain.solve().transpose();
  } catch (const Error& e) {
    ols_failure = e.what();
  }

  if (cfg.record_spectrum && nu_tilde) {
    const auto s_rearranged = singular_values(rearrange(*nu_tilde, dims));
    const auto s_raw = singular_values(*nu_tilde);
    out.spectrum = SpectrumRecord{n, r, cumulative_singular_fraction(s_rearranged, 1),
                                  cumulative_singular_fraction(s_raw, 1)};
  }

  for (const auto& m : cfg.methods) {
    ReplicateRecord rec{m, n, r, rep_seed, kNaN, 0, ""};
    try {
      switch (m.kind) {
        case MethodKind::Kpf: {
          if (!nu_tilde) throw NumericError(ols_failure);
          const FitReport fit = factorize_nu(*nu_tilde, dims, kopts);
          rec.rel_error = relative_error(fit.coefficients.nu(), nu_true);
          rec.d_selected = fit.d_selected;
          break;
        }
        case MethodKind::KpfAlpha: {
          const auto idx = static_cast<std::size_t>(
              std::find(alphas.begin(), alphas.end(), m.param) - alphas.begin());
          const Mat nu_alpha = acc.truncated[idx].solve().transpose();
          const FitReport fit = factorize_nu(nu_alpha, dims, kopts);
          rec.rel_error = relative_error(fit.coefficients.nu(), nu_true);
          rec.d_selected = fit.d_selected;
          break;
        }
        case MethodKind::RduRank: {
          if (!nu_tilde) throw NumericError(ols_failure);
          const FitReport fit =
              factorize_nu(variant_reduced_rank_ols(*nu_tilde, m.param), dims, kopts);
          rec.rel_error = relative_error(fit.coefficients.nu(), nu_true);
          rec.d_selected = fit.d_selected;
          break;
        }
        case MethodKind::Mle: {
          MleOptions mopts;
          mopts.max_iter = cfg.mle_max_iter;
          mopts.tol = cfg.mle_tol;
          const MleState state = mle_fit(*data, std::nullopt, mopts);
          rec.rel_error = relative_error(state.nu(), nu_true);
          rec.d_selected = 1;
          break;
        }
      }
    } catch (const Error& e) {
      rec.rel_error = kNaN;
      rec.failure = e.what();
    }
    out.records.push_back(std::move(rec));
  }
  return out;
}

}  // namespace

std::size_t default_thread_count() {
  if (const char* env = std::getenv("KROPROFAC_THREADS")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
    throw ConfigError(std::string("KROPROFAC_THREADS must be a positive integer, got '") + env +
                      "'");
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

RunReport run_experiment(const ExperimentConfig& cfg, const RunOptions& opts) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  if (opts.dump_dir) std::filesystem::create_directories(*opts.dump_dir);

  const KroneckerCoefficients coeffs =
      gen_coefficients(cfg.dims, cfg.d_true, replicate_seeds(cfg.seed_base, 0).coefficients);
  const Mat nu_true = coeffs.nu();

  const std::size_t n_tasks = cfg.n_grid.size() * cfg.replicates;
  std::vector<TaskOutput> results(n_tasks);
  std::vector<std::exception_ptr> errors(n_tasks);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (;;) {
      const std::size_t t = next.fetch_add(1);
      if (t >= n_tasks) return;
      const std::size_t ni = t / cfg.replicates, r = t % cfg.replicates;
      try {
        results[t] = run_task(cfg, coeffs, nu_true, cfg.n_grid[ni], r, opts);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    }
  };
  const std::size_t n_threads = std::max<std::size_t>(1, std::min(opts.threads, n_tasks));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  RunReport report;
  report.config = cfg;
  for (std::size_t ni = 0; ni < cfg.n_grid.size(); ++ni) {
    for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
      std::vector<double> ok;
      CellSummary cell{cfg.methods[mi], cfg.n_grid[ni], kNaN, kNaN, 0, 0};
      for (std::size_t r = 0; r < cfg.replicates; ++r) {
        const ReplicateRecord& rec = results[ni * cfg.replicates + r].records[mi];
        report.records.push_back(rec);
        if (rec.failure.empty() && std::isfinite(rec.rel_error))
          ok.push_back(rec.rel_error);
        else
          ++cell.failures;
      }
      cell.count = ok.size();
      if (!ok.empty()) {
        cell.mean = mean(ok);
        cell.standard_error = standard_error(ok);
      }
      report.cells.push_back(cell);
    }
    for (std::size_t r = 0; r < cfg.replicates; ++r)
      if (const auto& s = results[ni * cfg.replicates + r].spectrum) report.spectra.push_back(*s);
  }
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

std::string records_csv(const RunReport& report) {
  std::ostringstream os;
  os << "method,n,replicate,rel_error,seed\n";
  for (const auto& r : report.records)
    os << r.method.label() << ',' << r.n << ',' << r.replicate << ','
       << io::format_double(r.rel_error) << ',' << r.seed << '\n';
  return os.str();
}

std::string spectrum_csv(const RunReport& report) {
  std::ostringstream os;
  os << "n,replicate,f1_rearranged,f1_raw\n";
  for (const auto& s : report.spectra)
    os << s.n << ',' << s.replicate << ',' << io::format_double(s.f1_rearranged) << ','
       << io::format_double(s.f1_raw) << '\n';
  return os.str();
}

}  // namespace kpf
