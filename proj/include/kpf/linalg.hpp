#pragma once

// SVD engines, least squares and subspace distances.

#include <cstdint>
#include <span>
#include <vector>

#include "kpf/mat.hpp"

namespace kpf {

/// Thin SVD M ~ U diag(S) V^T. S is descending and nonnegative. Each left
/// singular vector is signed so its largest-magnitude entry (lowest index
/// on ties) is positive; the matching right vector is flipped with it.
struct SvdFactors {
  Mat U;
  std::vector<double> S;
  Mat V;

  std::size_t rank() const noexcept { return S.size(); }
};

/// k = min(rows, cols) components.
SvdFactors svd_full(const Mat& m);

/// Leading k triplets of svd_full. ArgumentError unless 1 <= k <= min(rows, cols).
SvdFactors svd_truncated(const Mat& m, std::size_t k);

struct RandomizedSvdOptions {
  std::size_t oversample = 10;
  std::size_t power_iters = 2;
  std::uint64_t seed = 0x4b5046u;
};

/// Randomized range finder with subspace (power) iteration, re-orthonormalized
/// after every product, followed by an exact SVD of the small projected
/// matrix. Deterministic for a given seed. Requires k + oversample <= min(rows, cols).
SvdFactors svd_randomized(const Mat& m, std::size_t k, std::size_t oversample,
                          std::size_t power_iters, std::uint64_t seed);
SvdFactors svd_randomized(const Mat& m, std::size_t k, const RandomizedSvdOptions& opts = {});

/// U diag(S) V^T
Mat reconstruct(const SvdFactors& f);

void apply_sign_convention(SvdFactors& f);

/// Running X^T X and X^T Y over rows (x_i, y_i). Lets least squares run on
/// data streams that are too large to hold in memory; the in-memory path uses
/// the same accumulation order so both agree bitwise.
class CrossProducts {
public:
  CrossProducts(std::size_t q, std::size_t p) : xtx_(q, q), xty_(q, p) {}

  void add_row(std::span<const double> x, std::span<const double> y);

  const Mat& xtx() const noexcept { return xtx_; }
  const Mat& xty() const noexcept { return xty_; }
  std::size_t count() const noexcept { return count_; }

  /// (X^T X)^{-1} X^T Y via Cholesky; q x p. Throws SingularDesignError when
  /// the reciprocal condition estimate falls below 1e-12.
  Mat solve() const;

private:
  Mat xtx_;
  Mat xty_;
  std::size_t count_ = 0;
};

inline constexpr double kSingularDesignRcond = 1e-12;

/// (X^T X)^{-1} X^T Yv, shape q x p.
Mat ols_solve(const Mat& x, const Mat& yv);

/// sin-theta distance between the column spaces of W1 and W2 (equal column
/// counts, orthonormal columns): sqrt(1 - sigma_min^2(W1^T W2)), evaluated as
/// ||(I - W1 W1^T) W2||_2 for accuracy near zero.
double sin_theta(const Mat& w1, const Mat& w2);

/// max |W^T W - I|
double orthonormality_defect(const Mat& w);

/// Modified Gram-Schmidt on columns, in order. With normalize=false each
/// column keeps the norm of its orthogonal residual.
Mat gram_schmidt(const Mat& columns, bool normalize);

/// Spectral norm (largest singular value).
double spectral_norm(const Mat& m);

/// Nearest rank-k matrix in Frobenius norm.
Mat low_rank_approx(const Mat& m, std::size_t k);

/// Inverse of a symmetric positive definite matrix via Cholesky, plus
/// log-determinant. NumericError when not PD.
struct SpdInverse {
  Mat inverse;
  double log_det;
};
SpdInverse spd_inverse(const Mat& s);

/// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue(const Mat& s);

/// Moore-Penrose pseudo-inverse.
Mat pseudo_inverse(const Mat& m);

}  // namespace kpf
