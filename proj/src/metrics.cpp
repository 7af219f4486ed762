#include "kpf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "kpf/tensor_core.hpp"

namespace kpf {

double relative_error(const Mat& nu_hat, const Mat& nu) {
  require_same_shape(nu_hat, nu, "relative_error");
  const double denom = frobenius_norm(nu);
  if (denom == 0.0) throw ArgumentError("relative_error: true coefficient has zero norm");
  return frobenius_norm(nu_hat - nu) / denom;
}

double cumulative_singular_fraction(std::span<const double> sigmas, std::size_t k) {
  if (k < 1 || k > sigmas.size())
    throw ArgumentError("cumulative_singular_fraction: k=" + std::to_string(k) +
                        " outside [1, " + std::to_string(sigmas.size()) + "]");
  const double total = std::accumulate(sigmas.begin(), sigmas.end(), 0.0);
  if (total == 0.0) throw ArgumentError("cumulative_singular_fraction: zero matrix");
  if (k == sigmas.size()) return 1.0;
  return std::accumulate(sigmas.begin(), sigmas.begin() + static_cast<std::ptrdiff_t>(k), 0.0) /
         total;
}

double cumulative_singular_fraction(const Mat& m, std::size_t k) {
  const std::size_t kmax = std::min(m.rows(), m.cols());
  if (k < 1 || k > kmax)
    throw ArgumentError("cumulative_singular_fraction: k=" + std::to_string(k) +
                        " outside [1, " + std::to_string(kmax) + "]");
  return cumulative_singular_fraction(svd_full(m).S, k);
}

std::vector<double> cumulative_singular_curve(std::span<const double> sigmas) {
  std::vector<double> f(sigmas.size());
  const double total = std::accumulate(sigmas.begin(), sigmas.end(), 0.0);
  if (total == 0.0) throw ArgumentError("cumulative_singular_curve: zero matrix");
  double run = 0.0;
  for (std::size_t k = 0; k < sigmas.size(); ++k) {
    run += sigmas[k];
    f[k] = k + 1 == sigmas.size() ? 1.0 : run / total;
  }
  return f;
}

namespace {

// Columns vec(beta2_k) (left) or vec(beta1_k) (right), orthonormalized.
Mat factor_basis(const KroneckerCoefficients& c, bool left) {
  const std::size_t len = left ? c.dims.p2 * c.dims.q2 : c.dims.p1 * c.dims.q1;
  Mat cols(len, c.d());
  for (std::size_t k = 0; k < c.d(); ++k)
    cols.set_col(k, vec(left ? c.factors[k].beta2 : c.factors[k].beta1));
  return gram_schmidt(cols, true);
}

}  // namespace

ErrorReport subspace_errors(const FitReport& fit, const KroneckerCoefficients& truth) {
  const auto& est = fit.coefficients;
  if (est.d() != truth.d())
    throw ArgumentError("subspace_errors: fitted d=" + std::to_string(est.d()) +
                        " differs from true d=" + std::to_string(truth.d()));
  if (!(est.dims.p1 == truth.dims.p1 && est.dims.p2 == truth.dims.p2 &&
        est.dims.q1 == truth.dims.q1 && est.dims.q2 == truth.dims.q2))
    throw ArgumentError("subspace_errors: dimension mismatch");

  ErrorReport rep;
  rep.rel_frobenius = relative_error(est.nu(), truth.nu());
  rep.sin_theta_U = sin_theta(factor_basis(truth, true), factor_basis(est, true));
  rep.sin_theta_V = sin_theta(factor_basis(truth, false), factor_basis(est, false));
  for (std::size_t k = 0; k < truth.d(); ++k) {
    const double s_true = frobenius_norm(truth.factors[k].beta1) *
                          frobenius_norm(truth.factors[k].beta2);
    rep.sigma_abs_errors.push_back(std::abs(est.sigma[k] - s_true));
  }
  return rep;
}

double log_log_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw ArgumentError("log_log_slope: need two or more paired points");
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

double median(std::vector<double> v) {
  if (v.empty()) throw ArgumentError("median of empty sample");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mean(std::span<const double> v) {
  if (v.empty()) throw ArgumentError("mean of empty sample");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double standard_error(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

}  // namespace kpf
