#pragma once

#include <span>
#include <vector>

#include "kpf/estimator.hpp"

namespace kpf {

struct ErrorReport {
  double rel_frobenius = 0.0;
  double sin_theta_U = 0.0;
  double sin_theta_V = 0.0;
  std::vector<double> sigma_abs_errors;
};

/// ||nu_hat - nu||_F / ||nu||_F. ArgumentError when nu is zero.
double relative_error(const Mat& nu_hat, const Mat& nu);

/// (sigma_1 + ... + sigma_k) / ||M||_*.
double cumulative_singular_fraction(const Mat& m, std::size_t k);
/// Same, from a precomputed descending spectrum.
double cumulative_singular_fraction(std::span<const double> sigmas, std::size_t k);
/// f_k for k = 1..sigmas.size().
std::vector<double> cumulative_singular_curve(std::span<const double> sigmas);

/// Column bases of the true and fitted Kronecker factors, compared by
/// sin-theta, plus |sigma_hat_k - sigma_k| and the relative error of nu_hat.
ErrorReport subspace_errors(const FitReport& fit, const KroneckerCoefficients& truth);

/// Least-squares slope of log(y) against log(x).
double log_log_slope(std::span<const double> x, std::span<const double> y);

double median(std::vector<double> v);
double mean(std::span<const double> v);
/// Sample standard deviation / sqrt(n); 0 for n < 2.
double standard_error(std::span<const double> v);

}  // namespace kpf
