#include "kpf/commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "kpf/config.hpp"
#include "kpf/estimator.hpp"
#include "kpf/experiment.hpp"
#include "kpf/matrix_io.hpp"
#include "kpf/metrics.hpp"
#include "kpf/mle.hpp"
#include "kpf/report_json.hpp"
#include "kpf/tensor_core.hpp"

namespace kpf {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<Mat> load_samples(const fs::path& path, std::size_t rows, std::size_t cols) {
  std::vector<Mat> mats = io::read_stack(path);
  if (mats.size() == 1) {
    const Mat& m = mats.front();
    const bool sample_shape = m.rows() == rows && m.cols() == cols;
    if (!sample_shape && m.cols() == rows * cols) {
      std::vector<Mat> out;
      out.reserve(m.rows());
      for (std::size_t i = 0; i < m.rows(); ++i) out.push_back(vec_inv(m.row(i), rows, cols));
      return out;
    }
  }
  for (std::size_t i = 0; i < mats.size(); ++i)
    if (mats[i].rows() != rows || mats[i].cols() != cols)
      throw DimensionError(path.string() + ": sample " + std::to_string(i) + " is " +
                           std::to_string(mats[i].rows()) + "x" + std::to_string(mats[i].cols()) +
                           ", expected " + std::to_string(rows) + "x" + std::to_string(cols));
  return mats;
}

Dataset assemble_dataset(const Dims& dims, const std::vector<Mat>& xs, const std::vector<Mat>& ys) {
  if (xs.size() != ys.size())
    throw DimensionError("X has " + std::to_string(xs.size()) + " samples but Y has " +
                         std::to_string(ys.size()));
  Dataset data;
  data.dims = dims;
  data.dims.n = xs.size();
  data.X = Mat(xs.size(), dims.q());
  data.Y = Mat(ys.size(), dims.p());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const auto vx = vec(xs[i]);
    const auto vy = vec(ys[i]);
    std::copy(vx.begin(), vx.end(), data.X.row(i).begin());
    std::copy(vy.begin(), vy.end(), data.Y.row(i).begin());
  }
  data.validate();
  return data;
}

GroupData load_group(const fs::path& dir, const std::string& label) {
  if (!fs::is_directory(dir)) throw InputError(dir.string() + " is not a directory");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const auto ext = e.path().extension().string();
    if (ext == ".csv" || ext == ".kmx" || ext == ".kst") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  GroupData g;
  g.label = label;
  for (const auto& f : files) {
    for (auto& m : io::read_stack(f)) {
      if (!g.samples.empty() && (m.rows() != g.rows() || m.cols() != g.cols()))
        throw InputError(f.string() + ": sample is " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()) + " but " + label + " samples are " +
                         std::to_string(g.rows()) + "x" + std::to_string(g.cols()));
      g.samples.push_back(std::move(m));
    }
  }
  if (g.samples.size() < 2)
    throw InputError(dir.string() + ": need at least 2 sample matrices, found " +
                     std::to_string(g.samples.size()));
  return g;
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
  if (!out) throw InputError("write failed: " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

struct DimFlags {
  std::size_t p1 = 0, p2 = 0, q1 = 0, q2 = 0;

  void add(CLI::App* app, bool with_q) {
    app->add_option("--p1", p1, "rows of each response matrix")->required();
    app->add_option("--p2", p2, "columns of each response matrix")->required();
    if (with_q) {
      app->add_option("--q1", q1, "rows of each covariate matrix")->required();
      app->add_option("--q2", q2, "columns of each covariate matrix")->required();
    }
  }
  Dims dims() const { return Dims{p1, p2, q1, q2, 0}; }
};

// simulate ------------------------------------------------------------------

struct SimulateArgs {
  std::string config_path;
  std::map<std::string, std::string> overrides;
  bool record_spectrum = false;
  bool dump = false;
  std::optional<std::size_t> threads;
};

void setup_simulate(CLI::App& app, SimulateArgs& a) {
  auto* sub = app.add_subcommand("simulate", "Monte Carlo benchmark from a config file");
  sub->add_option("--config", a.config_path, "key = value config file");
  for (const auto& key : config_keys()) {
    if (key == "record_spectrum" || key == "dump") continue;
    std::string flag = "--" + key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    sub->add_option_function<std::string>(
        flag, [&a, key](const std::string& v) { a.overrides[key] = v; },
        "overrides config key '" + key + "'");
  }
  sub->add_flag("--record-spectrum", a.record_spectrum,
                "record f_1 of R(nu_tilde) and nu_tilde per replicate");
  sub->add_flag("--dump", a.dump, "write each replicate's data and KRO-PRO-FAC fit");
  sub->add_option("--threads", a.threads, "worker threads (default: KROPROFAC_THREADS or all cores)");
}

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  auto kv = a.config_path.empty() ? std::map<std::string, std::string>{}
                                  : read_config_file(a.config_path);
  for (const auto& [k, v] : a.overrides) kv[k] = v;
  if (a.record_spectrum) kv["record_spectrum"] = "true";
  if (a.dump) kv["dump"] = "true";
  const ExperimentConfig cfg = config_from_map(kv);

  RunOptions opts;
  opts.threads = a.threads ? *a.threads : default_thread_count();
  if (opts.threads == 0) throw ConfigError("--threads must be >= 1");
  if (cfg.dump) opts.dump_dir = fs::path(cfg.output + "_dump");

  const RunReport report = run_experiment(cfg, opts);
  write_text(cfg.output + ".csv", records_csv(report));
  write_json(cfg.output + ".json", run_report_json(report));
  if (cfg.record_spectrum) write_text(cfg.output + "_spectrum.csv", spectrum_csv(report));

  out << std::left << std::setw(16) << "method" << std::setw(8) << "n" << std::setw(14)
      << "mean err (%)" << std::setw(12) << "SE (%)" << "failures\n";
  for (const auto& c : report.cells) {
    std::ostringstream m, se;
    m << std::fixed << std::setprecision(4) << 100.0 * c.mean;
    se << std::fixed << std::setprecision(4) << 100.0 * c.standard_error;
    out << std::setw(16) << c.method.label() << std::setw(8) << c.n << std::setw(14) << m.str()
        << std::setw(12) << se.str() << c.failures << '\n';
  }
  out << "wrote " << cfg.output << ".csv and " << cfg.output << ".json\n";
  return kExitOk;
}

// fit -----------------------------------------------------------------------

struct FitArgs {
  std::string x_path, y_path, out_dir = "fit";
  DimFlags dims;
  std::optional<std::size_t> d_bar, d, alpha, gamma;
  std::string method = "kpf";
  std::string engine = "auto";
  std::size_t max_iter = 100;
  double tol = 1e-6;
};

void setup_fit(CLI::App& app, FitArgs& a) {
  auto* sub = app.add_subcommand("fit", "Fit one dataset");
  sub->add_option("--x", a.x_path, "covariates: KST stack or n x q1q2 matrix")->required();
  sub->add_option("--y", a.y_path, "responses: KST stack or n x p1p2 matrix")->required();
  a.dims.add(sub, true);
  sub->add_option("--dbar", a.d_bar, "largest rank considered by the ratio criterion");
  sub->add_option("--d", a.d, "fixed number of Kronecker terms (skips rank selection)");
  sub->add_option("--alpha", a.alpha, "truncate each Y_i to rank alpha first");
  sub->add_option("--gamma", a.gamma, "truncate the OLS estimate to rank gamma first");
  sub->add_option("--method", a.method, "kpf | mle")->check(CLI::IsMember({"kpf", "mle"}));
  sub->add_option("--engine", a.engine, "auto | full | randomized")
      ->check(CLI::IsMember({"auto", "full", "randomized"}));
  sub->add_option("--max-iter", a.max_iter, "mle: iteration cap");
  sub->add_option("--tol", a.tol, "mle: relative log-likelihood tolerance");
  sub->add_option("--out", a.out_dir, "output directory");
}

Dataset load_dataset(const std::string& x_path, const std::string& y_path, const Dims& dims) {
  dims.validate();
  const auto xs = load_samples(x_path, dims.q1, dims.q2);
  const auto ys = load_samples(y_path, dims.p1, dims.p2);
  if (xs.size() != ys.size())
    throw DimensionError(x_path + " holds " + std::to_string(xs.size()) + " samples but " +
                         y_path + " holds " + std::to_string(ys.size()));
  return assemble_dataset(dims, xs, ys);
}

std::string spectrum_table(const FitReport& fit) {
  std::ostringstream os;
  os << "k,sigma,ratio\n";
  for (std::size_t k = 0; k < fit.singular_values_all.size(); ++k) {
    os << k + 1 << ',' << io::format_double(fit.singular_values_all[k]) << ',';
    if (k < fit.selection_ratios.size()) os << io::format_double(fit.selection_ratios[k]);
    os << '\n';
  }
  return os.str();
}

int cmd_fit(const FitArgs& a, std::ostream& out) {
  const Dataset data = load_dataset(a.x_path, a.y_path, a.dims.dims());
  const fs::path dir(a.out_dir);
  fs::create_directories(dir);

  if (a.method == "mle") {
    if (a.alpha || a.gamma || a.d)
      throw ArgumentError("--alpha, --gamma and --d apply to --method kpf only");
    MleOptions mopts;
    mopts.max_iter = a.max_iter;
    mopts.tol = a.tol;
    const MleState s = mle_fit(data, std::nullopt, mopts);
    io::write_csv(dir / "beta1.csv", s.beta1);
    io::write_csv(dir / "beta2.csv", s.beta2);
    io::write_csv(dir / "sigma1.csv", s.Sigma1);
    io::write_csv(dir / "sigma2.csv", s.Sigma2);
    write_json(dir / "summary.json", {{"method", "mle"}, {"n", data.n()}, {"mle", mle_state_json(s)}});
    out << "mle: " << s.iterations << " iterations, loglik " << io::format_double(s.loglik)
        << (s.converged ? " (converged)" : " (iteration cap reached)") << '\n';
    return kExitOk;
  }

  if (a.alpha && a.gamma) throw ArgumentError("--alpha and --gamma are mutually exclusive");
  KpfOptions kopts;
  kopts.d_bar = a.d_bar;
  kopts.d_fixed = a.d;
  kopts.engine = a.engine == "full"         ? SvdEngine::Full
                 : a.engine == "randomized" ? SvdEngine::Randomized
                                            : SvdEngine::Auto;
  FitReport fit;
  std::string variant = "kpf";
  if (a.alpha) {
    fit = kro_pro_fac(variant_low_rank_response(data, *a.alpha), kopts);
    variant = "kpf_alpha(" + std::to_string(*a.alpha) + ")";
  } else if (a.gamma) {
    fit = factorize_nu(variant_reduced_rank_ols(fit_ols_nu(data), *a.gamma), data.dims, kopts);
    variant = "rdu_rank(" + std::to_string(*a.gamma) + ")";
  } else {
    fit = kro_pro_fac(data, kopts);
  }

  for (std::size_t k = 0; k < fit.coefficients.d(); ++k) {
    io::write_csv(dir / ("beta1_" + std::to_string(k + 1) + ".csv"), fit.coefficients.factors[k].beta1);
    io::write_csv(dir / ("beta2_" + std::to_string(k + 1) + ".csv"), fit.coefficients.factors[k].beta2);
  }
  write_text(dir / "spectrum.csv", spectrum_table(fit));
  write_json(dir / "summary.json",
             {{"method", variant}, {"n", data.n()}, {"fit", fit_report_json(fit)}});
  out << variant << ": d_selected = " << fit.d_selected << " (d_bar " << fit.d_bar << "), sigma =";
  for (double s : fit.coefficients.sigma) out << ' ' << io::format_double(s);
  out << "\nwrote " << dir.string() << '\n';
  return kExitOk;
}

// predict -------------------------------------------------------------------

struct PredictArgs {
  std::string summary, x_path, out_path = "prediction.csv";
};

void setup_predict(CLI::App& app, PredictArgs& a) {
  auto* sub = app.add_subcommand("predict", "Predict responses from a fit summary");
  sub->add_option("--summary", a.summary, "summary.json written by fit")->required();
  sub->add_option("--x", a.x_path, "covariate matrix (q1 x q2), KST stack or n x q1q2 matrix")
      ->required();
  sub->add_option("--out", a.out_path, "output: a matrix file, or .kst for several samples");
}

KroneckerCoefficients coefficients_from_summary(const json& j) {
  if (j.contains("fit")) return fit_report_from_json(j.at("fit")).coefficients;
  if (j.contains("mle")) {
    KroneckerCoefficients c;
    const Mat b1 = json_matrix(j.at("mle").at("beta1"));
    const Mat b2 = json_matrix(j.at("mle").at("beta2"));
    c.dims = Dims{b1.rows(), b2.rows(), b1.cols(), b2.cols(), 0};
    c.factors.push_back({b1, b2});
    c.sigma.push_back(frobenius_norm(b1) * frobenius_norm(b2));
    return c;
  }
  throw InputError("summary has neither a 'fit' nor an 'mle' section");
}

int cmd_predict(const PredictArgs& a, std::ostream& out) {
  const KroneckerCoefficients c = coefficients_from_summary(read_json(a.summary));
  const auto xs = load_samples(a.x_path, c.dims.q1, c.dims.q2);
  std::vector<Mat> ys;
  ys.reserve(xs.size());
  for (const auto& x : xs) ys.push_back(predict(c, x));
  const fs::path path(a.out_path);
  if (path.extension() == ".kst")
    io::write_kst(path, ys);
  else if (ys.size() == 1)
    io::write_matrix(path, ys.front());
  else
    throw InputError("several samples to predict: use a .kst output path");
  out << "predicted " << ys.size() << " sample(s) into " << path.string() << '\n';
  return kExitOk;
}

// spectrum ------------------------------------------------------------------

struct SpectrumArgs {
  std::string m_path, out_path;
  DimFlags dims;
  std::optional<std::size_t> k_max;
};

void setup_spectrum(CLI::App& app, SpectrumArgs& a) {
  auto* sub = app.add_subcommand("spectrum", "Cumulative singular fractions of M and R(M)");
  sub->add_option("--m", a.m_path, "p1p2 x q1q2 coefficient matrix")->required();
  a.dims.add(sub, true);
  sub->add_option("--k-max", a.k_max, "largest k (default: all)");
  sub->add_option("--out", a.out_path, "CSV output (default: stdout)");
}

double clamped_fraction(const std::vector<double>& s, std::size_t k) {
  return k >= s.size() ? 1.0 : cumulative_singular_fraction(s, k);
}

int cmd_spectrum(const SpectrumArgs& a, std::ostream& out) {
  const Dims dims = a.dims.dims();
  dims.validate();
  const Mat m = io::read_matrix(a.m_path);
  if (m.rows() != dims.p() || m.cols() != dims.q())
    throw DimensionError(a.m_path + " is " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()) + ", expected " + std::to_string(dims.p()) +
                         "x" + std::to_string(dims.q()));
  const auto s_m = svd_full(m).S;
  const auto s_r = svd_full(rearrange(m, dims)).S;
  const std::size_t k_all = std::max(s_m.size(), s_r.size());
  const std::size_t k_max = a.k_max.value_or(k_all);
  if (k_max < 1) throw ArgumentError("--k-max must be >= 1");
  std::ostringstream os;
  os << "k,f_k(M),f_k(R(M))\n";
  for (std::size_t k = 1; k <= k_max; ++k)
    os << k << ',' << io::format_double(clamped_fraction(s_m, k)) << ','
       << io::format_double(clamped_fraction(s_r, k)) << '\n';
  if (a.out_path.empty())
    out << os.str();
  else
    write_text(a.out_path, os.str());
  return kExitOk;
}

// twogroup ------------------------------------------------------------------

struct TwoGroupArgs {
  std::string g1, g2, out_prefix = "twogroup";
  std::optional<std::size_t> p1, p2, d1, d2, d_bar;
  double alpha = 0.05;
  bool ols_baseline = false;
};

void setup_twogroup(CLI::App& app, TwoGroupArgs& a) {
  auto* sub = app.add_subcommand("twogroup", "Two-group channel-effect analysis");
  sub->add_option("--group1", a.g1, "directory of group-1 sample matrices")->required();
  sub->add_option("--group2", a.g2, "directory of group-2 sample matrices")->required();
  sub->add_option("--p1", a.p1, "expected rows per sample");
  sub->add_option("--p2", a.p2, "expected columns (channels) per sample");
  sub->add_option("--d1", a.d1, "fixed Kronecker rank for group 1");
  sub->add_option("--d2", a.d2, "fixed Kronecker rank for group 2");
  sub->add_option("--dbar", a.d_bar, "largest rank considered by the ratio criterion");
  sub->add_option("--alpha-level", a.alpha, "rejection level for adjusted p-values")
      ->check(CLI::Range(0.0, 1.0));
  sub->add_flag("--ols-baseline", a.ols_baseline, "use raw group means instead of Kronecker fits");
  sub->add_option("--out", a.out_prefix, "output prefix for .csv and .json");
}

int cmd_twogroup(const TwoGroupArgs& a, std::ostream& out) {
  const GroupData g1 = load_group(a.g1, "group1");
  const GroupData g2 = load_group(a.g2, "group2");
  if (g1.rows() != g2.rows() || g1.cols() != g2.cols())
    throw InputError(a.g2 + ": samples are " + std::to_string(g2.rows()) + "x" +
                     std::to_string(g2.cols()) + " but " + a.g1 + " holds " +
                     std::to_string(g1.rows()) + "x" + std::to_string(g1.cols()));
  if ((a.p1 && *a.p1 != g1.rows()) || (a.p2 && *a.p2 != g1.cols()))
    throw InputError(a.g1 + ": samples are " + std::to_string(g1.rows()) + "x" +
                     std::to_string(g1.cols()) + ", which disagrees with --p1/--p2");

  TwoGroupOptions opts;
  opts.d1 = a.d1;
  opts.d2 = a.d2;
  opts.d_bar = a.d_bar;
  opts.alpha = a.alpha;
  opts.ols_baseline = a.ols_baseline;
  const ChannelTestResult r = two_group_analysis(g1, g2, opts);

  std::ostringstream csv;
  csv << "channel,theta_hat,t,p,p_BY,reject\n";
  json neglog = json::array();
  std::size_t rejections = 0;
  for (std::size_t c = 0; c < r.theta_hat.size(); ++c) {
    csv << c + 1 << ',' << io::format_double(r.theta_hat[c]) << ','
        << io::format_double(r.t_stats[c]) << ',' << io::format_double(r.p_values[c]) << ','
        << io::format_double(r.p_adjusted[c]) << ',' << (r.rejected[c] ? 1 : 0) << '\n';
    neglog.push_back(number_json(-std::log10(r.p_adjusted[c])));
    rejections += r.rejected[c] ? 1 : 0;
  }
  write_text(a.out_prefix + ".csv", csv.str());

  json degenerate = json::array();
  for (std::size_t c = 0; c < r.degenerate.size(); ++c)
    if (r.degenerate[c]) degenerate.push_back(c + 1);
  write_json(a.out_prefix + ".json",
             {{"mode", a.ols_baseline ? "ols_baseline" : "kro_pro_fac"},
              {"subjects", {g1.samples.size(), g2.samples.size()}},
              {"dims", {g1.rows(), g1.cols()}},
              {"d_selected", {r.d_selected.first, r.d_selected.second}},
              {"alpha_level", a.alpha},
              {"rejections", rejections},
              {"degenerate_channels", degenerate},
              {"neg_log10_p_adjusted", neglog}});
  out << rejections << " of " << r.theta_hat.size() << " channels rejected at level "
      << io::format_double(a.alpha) << " (d = " << r.d_selected.first << ", "
      << r.d_selected.second << ")\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Kronecker product factorization for matrix-response regression", "kroprofac"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  SimulateArgs sim;
  FitArgs fit;
  PredictArgs pred;
  SpectrumArgs spec;
  TwoGroupArgs two;
  setup_simulate(app, sim);
  setup_fit(app, fit);
  setup_predict(app, pred);
  setup_spectrum(app, spec);
  setup_twogroup(app, two);

  std::vector<std::string> rev(args.rbegin(), args.rend());
  if (!rev.empty()) rev.pop_back();  // program name
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (app.got_subcommand("simulate")) return cmd_simulate(sim, out);
    if (app.got_subcommand("fit")) return cmd_fit(fit, out);
    if (app.got_subcommand("predict")) return cmd_predict(pred, out);
    if (app.got_subcommand("spectrum")) return cmd_spectrum(spec, out);
    if (app.got_subcommand("twogroup")) return cmd_twogroup(two, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ArgumentError& e) {
    err << "invalid argument: " << e.what() << '\n';
    return kExitConfig;
  } catch (const InputError& e) {
    err << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const DimensionError& e) {
    err << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const InternalError& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const fs::filesystem_error& e) {
    err << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    err << "unexpected error: " << e.what() << '\n';
    return kExitUnexpected;
  }
  return kExitUnexpected;
}

}  // namespace kpf
