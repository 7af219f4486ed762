#pragma once

// Two-group comparison of matrix-valued samples: an intercept-only
// Kronecker fit per group, per-column (channel) effects from the difference
// of the fitted means, Welch t-tests and Benjamini-Yekutieli adjustment.

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kpf/estimator.hpp"

namespace kpf {

struct GroupData {
  std::string label;
  std::vector<Mat> samples;  // each p1 x p2

  /// ArgumentError when empty or when samples disagree in shape.
  void validate() const;
  std::size_t rows() const { return samples.front().rows(); }
  std::size_t cols() const { return samples.front().cols(); }
};

struct WelchTests {
  std::vector<double> t_stats;
  std::vector<double> p_values;
  std::vector<double> df;
  std::vector<bool> degenerate;  // zero pooled standard error
};

struct ChannelTestResult {
  std::vector<double> theta_hat;
  std::vector<double> t_stats;
  std::vector<double> p_values;
  std::vector<double> p_adjusted;
  std::vector<bool> degenerate;
  std::vector<bool> rejected;
  std::pair<std::size_t, std::size_t> d_selected{0, 0};
};

/// Intercept-only KRO-PRO-FAC (X_i = 1): nu_tilde = vec(mean Y), rearranged to
/// mean(Y)^T and truncated.
FitReport fit_group_mean(const GroupData& group, std::optional<std::size_t> d_bar = std::nullopt,
                         std::optional<std::size_t> d_fixed = std::nullopt);

/// vec(mean Y), p1p2 x 1.
Mat group_sample_mean(const GroupData& group);

/// Column means of vec^-1(nu1 - nu2, p1, p2).
std::vector<double> channel_effects(const Mat& nu1, const Mat& nu2, std::size_t p1,
                                    std::size_t p2);
std::vector<double> channel_effects(const FitReport& fit1, const FitReport& fit2);

/// Welch t-test per channel. The standard error comes from per-subject
/// column-mean scores; theta_hat supplies the numerator.
WelchTests channel_t_tests(std::span<const double> theta_hat, const GroupData& g1,
                           const GroupData& g2);

/// Two-sided p-value of a t statistic with (possibly fractional) df.
double t_two_sided_p(double t, double df);

/// Benjamini-Yekutieli step-up adjustment with c(m) = sum_{j<=m} 1/j.
std::vector<double> by_adjust(std::span<const double> p_values);

struct TwoGroupOptions {
  std::optional<std::size_t> d1;
  std::optional<std::size_t> d2;
  std::optional<std::size_t> d_bar;
  double alpha = 0.05;
  /// Replace the Kronecker fits by the raw group means.
  bool ols_baseline = false;
};

ChannelTestResult two_group_analysis(const GroupData& g1, const GroupData& g2,
                                     const TwoGroupOptions& opts = {});

}  // namespace kpf
