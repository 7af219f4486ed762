#pragma once

// KRO-PRO-FAC: OLS, rearrangement, truncated SVD of the rearranged
// estimate, singular-value-ratio rank selection, factor extraction. Plus the
// two rank-regularized variants used as comparisons and prediction.

#include <optional>
#include <span>
#include <vector>

#include "kpf/linalg.hpp"
#include "kpf/model.hpp"

namespace kpf {

struct FitReport {
  KroneckerCoefficients coefficients;
  /// Spectrum of R(nu_tilde). Complete for the dense engine; only the
  /// leading components for the randomized engine.
  std::vector<double> singular_values_all;
  std::size_t d_bar = 0;
  std::size_t d_selected = 0;
  /// sigma_j / sigma_{j+1}, j = 1..d_bar (+inf past the zero guard).
  std::vector<double> selection_ratios;
  bool randomized_svd = false;
};

enum class SvdEngine { Auto, Full, Randomized };

struct KpfOptions {
  std::optional<std::size_t> d_bar;    // default: default_d_bar(dims)
  std::optional<std::size_t> d_fixed;  // bypasses rank selection
  SvdEngine engine = SvdEngine::Auto;
  RandomizedSvdOptions rsvd;
};

/// Above this min(p1q1, p2q2) the Auto engine switches to randomized SVD.
inline constexpr std::size_t kDenseSvdLimit = 512;
/// sigma_{j+1} <= kRankEps * sigma_1 counts as zero in rank selection.
inline constexpr double kRankEps = 1e-12;

/// min(10, min(p1q1, p2q2) - 1), at least 1.
std::size_t default_d_bar(const Dims& dims);

/// nu_tilde = [(X^T X)^{-1} X^T Y]^T, p1p2 x q1q2.
Mat fit_ols_nu(const Dataset& data);

/// Ratios used by select_rank.
std::vector<double> selection_ratios(std::span<const double> sigmas, std::size_t d_bar);

/// argmax_{1<=j<=d_bar} sigma_j / sigma_{j+1} (1-based; smallest j on ties).
std::size_t select_rank(std::span<const double> sigmas, std::size_t d_bar);

/// Steps after OLS: rearrange, SVD, select rank, split factors.
FitReport factorize_nu(const Mat& nu_tilde, const Dims& dims, const KpfOptions& opts = {});

FitReport kro_pro_fac(const Dataset& data, const KpfOptions& opts = {});
FitReport kro_pro_fac(const Dataset& data, std::size_t d_bar,
                      std::optional<std::size_t> d_fixed = std::nullopt);

/// Replace vec(Y_i) (one row, column-major p1 x p2) by its nearest rank-alpha
/// approximation, in place.
void truncate_response_row(std::span<double> y_row, const Dims& dims, std::size_t alpha);

/// Every Y_i replaced by its rank-alpha truncation; X untouched.
Dataset variant_low_rank_response(const Dataset& data, std::size_t alpha);

/// Nearest rank-gamma approximation of nu_tilde itself (before rearrangement).
Mat variant_reduced_rank_ols(const Mat& nu_tilde, std::size_t gamma);

/// sum_k beta1_k X beta2_k^T
Mat predict(const KroneckerCoefficients& coeffs, const Mat& x_new);

}  // namespace kpf
