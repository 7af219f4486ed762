// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit when any
// criterion fails. Tolerances and budgets are fixed constants below.
#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "by_oracle.hpp"
#include "kpf/analysis.hpp"
#include "kpf/estimator.hpp"
#include "kpf/experiment.hpp"
#include "kpf/linalg.hpp"
#include "kpf/metrics.hpp"
#include "kpf/mle.hpp"
#include "kpf/simgen.hpp"
#include "kpf/tensor_core.hpp"
#include "test_util.hpp"

using namespace kpf;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::size_t worker_threads() {
  try {
    return std::max<std::size_t>(1, default_thread_count());
  } catch (const std::exception&) {
    return 1;
  }
}

ExperimentConfig desk_config(std::size_t p, std::size_t q, std::vector<std::size_t> ns,
                             std::size_t reps, std::uint64_t seed) {
  ExperimentConfig c;
  c.dims = Dims{p, p, q, q, 0};
  c.d_true = 1;
  c.n_grid = std::move(ns);
  c.replicates = reps;
  c.seed_base = seed;
  c.noise = NoiseModelSpec{};
  c.noise->structure_seed = default_structure_seed(seed);
  return c;
}

const CellSummary& cell(const RunReport& r, const Method& m, std::size_t n) {
  for (const auto& c : r.cells)
    if (c.method == m && c.n == n) return c;
  throw std::runtime_error("missing cell " + m.label());
}

std::vector<double> errors_of(const RunReport& r, const Method& m, std::size_t n) {
  std::vector<double> out;
  for (const auto& rec : r.records)
    if (rec.method == m && rec.n == n) out.push_back(rec.rel_error);
  return out;
}

bool all_finite(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

// ---------------------------------------------------------------------------

constexpr double kRearrangeTol = 1e-12;
constexpr double kRearrangeBudget = 1.0;

Outcome rearrangement_identity() {
  const auto t0 = Clock::now();
  std::mt19937_64 g(20240601);
  std::uniform_int_distribution<std::size_t> p1d(1, 7), p2d(1, 5), q1d(1, 3), q2d(1, 4);
  double worst = 0.0;
  bool exact_inverse = true;
  int cases = 0;
  for (std::size_t d = 1; d <= 4; ++d) {
    for (int rep = 0; rep < 50; ++rep) {
      const Dims dims{p1d(g), p2d(g), q1d(g), q2d(g), 0};
      Mat sum_kron(dims.p(), dims.q());
      Mat sum_outer(dims.p2 * dims.q2, dims.p1 * dims.q1);
      for (std::size_t k = 0; k < d; ++k) {
        const Mat b1 = test::random_mat(g, dims.p1, dims.q1);
        const Mat b2 = test::random_mat(g, dims.p2, dims.q2);
        const Mat kr = test::index_kron(b2, b1);
        const Mat ou = test::outer_product(test::colmajor(b2), test::colmajor(b1));
        for (std::size_t i = 0; i < kr.rows(); ++i)
          for (std::size_t j = 0; j < kr.cols(); ++j) sum_kron(i, j) += kr(i, j);
        for (std::size_t i = 0; i < ou.rows(); ++i)
          for (std::size_t j = 0; j < ou.cols(); ++j) sum_outer(i, j) += ou(i, j);
      }
      const Mat r = rearrange(sum_kron, dims);
      worst = std::max(worst, test::max_abs_diff(r, sum_outer));
      exact_inverse = exact_inverse && rearrange_inv(r, dims) == sum_kron &&
                      rearrange(rearrange_inv(sum_outer, dims), dims) == sum_outer;
      ++cases;
    }
  }
  const double secs = seconds_since(t0);
  return {worst <= kRearrangeTol && exact_inverse && secs < kRearrangeBudget,
          fmt("%d cases, max |R(sum kron) - sum outer| = %.3g (tol %.0e), inverse exact: %s, %.2fs "
              "(budget %.0fs)",
              cases, worst, kRearrangeTol, exact_inverse ? "yes" : "no", secs, kRearrangeBudget)};
}

constexpr double kNoiselessTol = 1e-8;
constexpr double kNoiselessBudget = 5.0;

Outcome noiseless_recovery() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  bool ranks_ok = true;
  int fits = 0;
  for (std::size_t d = 1; d <= 2; ++d) {
    for (std::uint64_t s = 1; s <= 3; ++s) {
      const Dims dims{50, 50, 2, 2, 0};
      const auto [data, truth] = gen_dataset(dims, d, 40, std::nullopt, replicate_seeds(s * 97, 0));
      const FitReport fit = kro_pro_fac(data);
      worst = std::max(worst, relative_error(fit.coefficients.nu(), truth.nu()));
      ranks_ok = ranks_ok && fit.d_selected == d;
      ++fits;
    }
  }
  const double secs = seconds_since(t0);
  return {worst <= kNoiselessTol && ranks_ok && secs < kNoiselessBudget,
          fmt("p1=p2=50, q1=q2=2, d in {1,2}, %d fits: max rel error %.3g (tol %.0e), d_hat = d: "
              "%s, %.2fs (budget %.0fs)",
              fits, worst, kNoiselessTol, ranks_ok ? "yes" : "no", secs, kNoiselessBudget)};
}

constexpr double kF1RearrangedLo = 0.82, kF1RearrangedHi = 0.92;
constexpr double kF1RawLo = 0.02, kF1RawHi = 0.09;
constexpr double kSpectrumBudget = 120.0;

Outcome spectrum_reproduction() {
  ExperimentConfig c = desk_config(10, 10, {3000}, 100, 3);
  c.record_spectrum = true;
  const RunReport r = run_experiment(c, RunOptions{worker_threads(), std::nullopt});
  std::vector<double> fr, fw;
  for (const auto& s : r.spectra) {
    fr.push_back(s.f1_rearranged);
    fw.push_back(s.f1_raw);
  }
  const double mr = mean(fr), mw = mean(fw);
  const bool ok = fr.size() == 100 && mr >= kF1RearrangedLo && mr <= kF1RearrangedHi &&
                  mw >= kF1RawLo && mw <= kF1RawHi && r.wall_seconds < kSpectrumBudget;
  return {ok, fmt("p1=p2=q1=q2=10, n=3000, 100 reps: mean f1(R(nu~)) = %.4f in [%.2f, %.2f], "
                  "mean f1(nu~) = %.4f in [%.2f, %.2f], %.1fs (budget %.0fs)",
                  mr, kF1RearrangedLo, kF1RearrangedHi, mw, kF1RawLo, kF1RawHi, r.wall_seconds,
                  kSpectrumBudget)};
}

constexpr double kLargeN200Lo = 0.25e-2, kLargeN200Hi = 0.45e-2;
constexpr double kLargeN3000Lo = 0.065e-2, kLargeN3000Hi = 0.11e-2;
constexpr double kLargeRatioLo = 3.3, kLargeRatioHi = 4.5;
constexpr double kLargeBudget = 1800.0;

Outcome large_scale_spot() {
  const ExperimentConfig c = desk_config(500, 2, {200, 3000}, 10, 4);
  const RunReport r = run_experiment(c, RunOptions{worker_threads(), std::nullopt});
  const Method kpf{};
  const CellSummary& a = cell(r, kpf, 200);
  const CellSummary& b = cell(r, kpf, 3000);
  const double ratio = a.mean / b.mean;
  const bool ok = a.count == 10 && b.count == 10 && a.mean >= kLargeN200Lo &&
                  a.mean <= kLargeN200Hi && b.mean >= kLargeN3000Lo && b.mean <= kLargeN3000Hi &&
                  ratio >= kLargeRatioLo && ratio <= kLargeRatioHi && r.wall_seconds < kLargeBudget;
  return {ok, fmt("p1=p2=500, q1=q2=2, 10 reps: n=200 %.4f%% in [0.25, 0.45], n=3000 %.4f%% in "
                  "[0.065, 0.11], ratio %.3f in [%.1f, %.1f], %.0fs (budget %.0fs)",
                  100 * a.mean, 100 * b.mean, ratio, kLargeRatioLo, kLargeRatioHi, r.wall_seconds,
                  kLargeBudget)};
}

constexpr double kSlopeTarget = -0.5, kSlopeTol = 0.12;
constexpr double kScalingBudget = 300.0;

Outcome scaling_law() {
  const auto t0 = Clock::now();
  const std::vector<double> ps{20, 40, 80};
  std::vector<double> med_p;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const auto p = static_cast<std::size_t>(ps[i]);
    const RunReport r =
        run_experiment(desk_config(p, 2, {400}, 30, 50 + i), RunOptions{worker_threads(), std::nullopt});
    med_p.push_back(median(errors_of(r, Method{}, 400)));
  }
  const std::vector<double> ns{200, 800, 3200};
  const RunReport rn =
      run_experiment(desk_config(40, 2, {200, 800, 3200}, 30, 60), RunOptions{worker_threads(), std::nullopt});
  std::vector<double> med_n;
  for (double n : ns) med_n.push_back(median(errors_of(rn, Method{}, static_cast<std::size_t>(n))));
  const double sp = log_log_slope(ps, med_p), sn = log_log_slope(ns, med_n);
  const double secs = seconds_since(t0);
  const bool ok = std::abs(sp - kSlopeTarget) <= kSlopeTol &&
                  std::abs(sn - kSlopeTarget) <= kSlopeTol && secs < kScalingBudget;
  return {ok, fmt("slope vs p = %.3f, slope vs n = %.3f (target %.1f +/- %.2f), %.1fs (budget %.0fs)",
                  sp, sn, kSlopeTarget, kSlopeTol, secs, kScalingBudget)};
}

constexpr double kVariantGap = 10.0;

Outcome variant_ordering() {
  ExperimentConfig c = desk_config(60, 2, {200, 1000}, 30, 6);
  c.noise->kind = NoiseKind::Banded;
  c.noise->bandwidth = 5;
  const Method kpf{}, alpha{MethodKind::KpfAlpha, 2}, rdu{MethodKind::RduRank, 2};
  c.methods = {kpf, alpha, rdu};
  const RunReport r = run_experiment(c, RunOptions{worker_threads(), std::nullopt});
  bool ok = true;
  std::string detail = "p1=p2=60, banded b=5, 30 reps:";
  for (std::size_t n : c.n_grid) {
    const double e0 = cell(r, kpf, n).mean, e1 = cell(r, alpha, n).mean, e2 = cell(r, rdu, n).mean;
    const bool counts = cell(r, kpf, n).count == 30 && cell(r, alpha, n).count == 30 &&
                        cell(r, rdu, n).count == 30;
    ok = ok && counts && e0 <= e1 && e1 <= e2 && e2 >= kVariantGap * e0;
    detail += fmt(" n=%zu kpf %.3f%% <= kpf_alpha(2) %.3f%% <= rdu_rank(2) %.3f%% (gap %.1fx, need "
                  ">= %.0fx);",
                  n, 100 * e0, 100 * e1, 100 * e2, e2 / e0, kVariantGap);
  }
  detail += fmt(" %.1fs", r.wall_seconds);
  return {ok, detail};
}

constexpr double kMonotoneSlack = 1e-8;

Outcome mle_baseline() {
  const auto t0 = Clock::now();
  const Dims dims{20, 20, 2, 2, 0};
  NoiseModelSpec ar1;
  ar1.kind = NoiseKind::Ar1;
  ar1.rho = 0.9;
  std::vector<double> e_kpf, e_mle;
  bool monotone = true;
  std::size_t failures = 0;
  const std::uint64_t seed_base = 7;
  for (std::uint64_t r = 0; r < 20; ++r) {
    const auto [data, truth] = gen_dataset(dims, 1, 200, ar1, replicate_seeds(seed_base, r));
    const Mat nu = truth.nu();
    e_kpf.push_back(relative_error(kro_pro_fac(data).coefficients.nu(), nu));
    try {
      const MleState s = mle_fit(data);
      for (std::size_t t = 1; t < s.loglik_trace.size(); ++t)
        if (s.loglik_trace[t] < s.loglik_trace[t - 1] - kMonotoneSlack * std::abs(s.loglik_trace[t - 1]))
          monotone = false;
      e_mle.push_back(relative_error(s.nu(), nu));
    } catch (const std::exception&) {
      ++failures;
    }
  }
  const double mk = median(e_kpf);
  const double mm = e_mle.empty() ? INFINITY : median(e_mle);
  const bool ok = failures == 0 && monotone && mm <= mk;
  return {ok, fmt("p1=p2=20, q1=q2=2, AR(1) rho=0.9, n=200, 20 reps: median mle %.4f%% <= median kpf "
                  "%.4f%%, loglik monotone (slack %.0e rel): %s, failed fits %zu, %.1fs",
                  100 * mm, 100 * mk, kMonotoneSlack, monotone ? "yes" : "no", failures,
                  seconds_since(t0))};
}

constexpr double kRsvdTol = 1e-6;
constexpr double kRsvdBudget = 10.0;

Outcome randomized_svd_equivalence() {
  const auto t0 = Clock::now();
  std::mt19937_64 g(8);
  std::uniform_int_distribution<std::size_t> rows_d(40, 120), cols_d(40, 120), d_d(1, 6);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  double worst = 0.0;
  for (int inst = 0; inst < 100; ++inst) {
    const std::size_t m = rows_d(g), n = cols_d(g), d = d_d(g);
    const std::size_t k = std::min(m, n);
    const Mat U = gram_schmidt(test::random_mat(g, m, k), true);
    const Mat V = gram_schmidt(test::random_mat(g, n, k), true);
    std::vector<double> s(k);
    for (std::size_t j = 0; j < d; ++j) s[j] = 10.0 + 90.0 * u01(g);
    std::sort(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(d), std::greater<>());
    // tail capped at a tenth of sigma_d
    for (std::size_t j = d; j < k; ++j) s[j] = s[d - 1] / 10.0 * u01(g);
    std::sort(s.begin() + static_cast<std::ptrdiff_t>(d), s.end(), std::greater<>());
    Mat us(m, k);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < k; ++j) us(i, j) = U(i, j) * s[j];
    const Mat mat = test::naive_matmul(us, test::naive_transpose(V));
    const SvdFactors full = svd_full(mat);
    const SvdFactors rnd = svd_randomized(mat, d, RandomizedSvdOptions{10, 2, 1000u + inst});
    for (std::size_t j = 0; j < d; ++j)
      worst = std::max(worst, std::abs(rnd.S[j] - full.S[j]) / full.S[j]);
  }
  const double secs = seconds_since(t0);
  return {worst <= kRsvdTol && secs < kRsvdBudget,
          fmt("100 instances, gap >= 10: max relative deviation %.3g (tol %.0e), %.2fs (budget %.0fs)",
              worst, kRsvdTol, secs, kRsvdBudget)};
}

Outcome by_enumeration() {
  const std::vector<double> grid{0.001, 0.01, 0.05, 0.2, 1.0};
  std::size_t vectors = 0, mismatches = 0;
  for (std::size_t len = 1; len <= 5; ++len) {
    std::vector<std::size_t> idx(len, 0);
    while (true) {
      std::vector<double> p(len);
      for (std::size_t i = 0; i < len; ++i) p[i] = grid[idx[i]];
      if (by_adjust(p) != test::by_enumerate(p)) ++mismatches;
      ++vectors;
      std::size_t pos = 0;
      while (pos < len && ++idx[pos] == grid.size()) idx[pos++] = 0;
      if (pos == len) break;
    }
  }
  return {mismatches == 0,
          fmt("%zu p-vectors of length 1..5, %zu mismatches against step-up enumeration", vectors,
              mismatches)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  const fs::path dir = fs::temp_directory_path() / "kpf_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ofstream(dir / "exp.conf") << "p1 = 8\np2 = 6\nq1 = 2\nq2 = 3\nd = 2\nn = 100, 300\n"
                                  << "methods = kpf, kpf_alpha(2), rdu_rank(2), mle\n"
                                  << "noise = banded\nbandwidth = 3\nreplicates = 12\n"
                                  << "seed_base = 2024\nrecord_spectrum = true\n";
  const char* env = std::getenv("KROPROFAC_BIN");
  const std::string bin = env ? env : KROPROFAC_BIN;
  auto run = [&](int threads) {
    const std::string cmd = "cd '" + dir.string() + "' && '" + bin +
                            "' simulate --config exp.conf --output t" + std::to_string(threads) +
                            " --threads " + std::to_string(threads) + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  };
  const int s1 = run(1), s8 = run(8);
  const std::string a = slurp(dir / "t1.csv"), b = slurp(dir / "t8.csv");
  const bool ok = s1 == 0 && s8 == 0 && !a.empty() && a == b &&
                  slurp(dir / "t1_spectrum.csv") == slurp(dir / "t8_spectrum.csv");
  return {ok, fmt("exit codes %d/%d, %zu-byte CSV identical under --threads 1 and 8: %s", s1, s8,
                  a.size(), a == b ? "yes" : "no")};
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "rearrangement identity", rearrangement_identity},
      {2, "noiseless exact recovery", noiseless_recovery},
      {3, "singular-fraction spectrum", spectrum_reproduction},
      {4, "large-scale identity-noise errors", large_scale_spot},
      {5, "error scaling law", scaling_law},
      {6, "variant ordering under banded noise", variant_ordering},
      {7, "maximum-likelihood baseline", mle_baseline},
      {8, "randomized SVD equivalence", randomized_svd_equivalence},
      {9, "BY adjustment enumeration", by_enumeration},
      {10, "thread-count determinism", determinism},
  };
  // Optional arguments select a subset of criteria by number.
  std::vector<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.push_back(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : criteria) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.id) == wanted.end()) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
