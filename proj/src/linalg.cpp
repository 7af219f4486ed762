#include "kpf/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "eigen_bridge.hpp"
#include "kpf/kernels.hpp"
#include "kpf/rng.hpp"

namespace kpf {

using detail::as_eigen;
using detail::from_eigen;

void apply_sign_convention(SvdFactors& f) {
  for (std::size_t k = 0; k < f.S.size(); ++k) {
    std::size_t best = 0;
    double best_abs = -1.0;
    for (std::size_t i = 0; i < f.U.rows(); ++i) {
      const double a = std::abs(f.U(i, k));
      if (a > best_abs) {
        best_abs = a;
        best = i;
      }
    }
    if (f.U.rows() > 0 && f.U(best, k) < 0.0) {
      for (std::size_t i = 0; i < f.U.rows(); ++i) f.U(i, k) = -f.U(i, k);
      for (std::size_t i = 0; i < f.V.rows(); ++i) f.V(i, k) = -f.V(i, k);
    }
  }
}

namespace {

SvdFactors from_eigen_svd(const Eigen::BDCSVD<detail::RowMajorMatrix>& svd, std::size_t k) {
  SvdFactors f;
  const auto& sv = svd.singularValues();
  f.S.assign(sv.data(), sv.data() + k);
  for (double& s : f.S) s = std::max(s, 0.0);
  f.U = from_eigen(svd.matrixU().leftCols(static_cast<Eigen::Index>(k)));
  f.V = from_eigen(svd.matrixV().leftCols(static_cast<Eigen::Index>(k)));
  apply_sign_convention(f);
  return f;
}

Eigen::BDCSVD<detail::RowMajorMatrix> eigen_svd(const Mat& m) {
  if (!all_finite(m)) throw NumericError("svd: matrix has non-finite entries");
  detail::RowMajorMatrix a = as_eigen(m);
  Eigen::BDCSVD<detail::RowMajorMatrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success)
    throw NumericError("svd: divide-and-conquer/Jacobi iteration did not converge on a " +
                       std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + " matrix");
  return svd;
}

}  // namespace

SvdFactors svd_full(const Mat& m) {
  if (m.empty()) throw DimensionError("svd_full: empty matrix");
  auto svd = eigen_svd(m);
  return from_eigen_svd(svd, std::min(m.rows(), m.cols()));
}

SvdFactors svd_truncated(const Mat& m, std::size_t k) {
  const std::size_t kmax = std::min(m.rows(), m.cols());
  if (k < 1 || k > kmax)
    throw ArgumentError("svd_truncated: k=" + std::to_string(k) + " outside [1, " +
                        std::to_string(kmax) + "]");
  auto svd = eigen_svd(m);
  return from_eigen_svd(svd, k);
}

namespace {

// Thin orthonormal basis for the column space of y (m x l, m >= l).
Mat orthonormal_basis(const Mat& y) {
  detail::RowMajorMatrix a = as_eigen(y);
  Eigen::HouseholderQR<detail::RowMajorMatrix> qr(a);
  detail::RowMajorMatrix q =
      qr.householderQ() * detail::RowMajorMatrix::Identity(a.rows(), a.cols());
  return from_eigen(q);
}

}  // namespace

SvdFactors svd_randomized(const Mat& m, std::size_t k, std::size_t oversample,
                          std::size_t power_iters, std::uint64_t seed) {
  const std::size_t kmax = std::min(m.rows(), m.cols());
  if (k < 1 || k + oversample > kmax)
    throw ArgumentError("svd_randomized: need 1 <= k and k + oversample <= " +
                        std::to_string(kmax) + " (k=" + std::to_string(k) +
                        ", oversample=" + std::to_string(oversample) + ")");
  if (!all_finite(m)) throw NumericError("svd_randomized: matrix has non-finite entries");

  const std::size_t l = k + oversample;
  NormalRng rng(seed);
  Mat omega(m.cols(), l);
  rng.fill_normal(omega.flat());

  Mat q = orthonormal_basis(matmul(m, omega));
  for (std::size_t it = 0; it < power_iters; ++it) {
    Mat z = orthonormal_basis(matmul_tn(m, q));
    q = orthonormal_basis(matmul(m, z));
  }

  Mat b = matmul_tn(q, m);  // l x cols
  auto small = eigen_svd(b);
  SvdFactors f;
  f.S.assign(small.singularValues().data(), small.singularValues().data() + k);
  for (double& s : f.S) s = std::max(s, 0.0);
  f.U = matmul(q, from_eigen(small.matrixU().leftCols(static_cast<Eigen::Index>(k))));
  f.V = from_eigen(small.matrixV().leftCols(static_cast<Eigen::Index>(k)));
  apply_sign_convention(f);
  return f;
}

SvdFactors svd_randomized(const Mat& m, std::size_t k, const RandomizedSvdOptions& opts) {
  return svd_randomized(m, k, opts.oversample, opts.power_iters, opts.seed);
}

Mat reconstruct(const SvdFactors& f) {
  Mat us = f.U;
  for (std::size_t i = 0; i < us.rows(); ++i)
    for (std::size_t k = 0; k < f.S.size(); ++k) us(i, k) *= f.S[k];
  return matmul_nt(us, f.V);
}

void CrossProducts::add_row(std::span<const double> x, std::span<const double> y) {
  const std::size_t q = xtx_.rows();
  if (x.size() != q || y.size() != xty_.cols())
    throw DimensionError("CrossProducts::add_row: row lengths do not match (" +
                         std::to_string(x.size()) + ", " + std::to_string(y.size()) + ")");
  for (std::size_t i = 0; i < q; ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    simd::axpy(xi, x.data(), xtx_.row(i).data(), q);
    simd::axpy(xi, y.data(), xty_.row(i).data(), y.size());
  }
  ++count_;
}

Mat CrossProducts::solve() const {
  detail::RowMajorMatrix g = as_eigen(xtx_);
  Eigen::LLT<detail::RowMajorMatrix> llt(g);
  const double rcond = llt.info() == Eigen::Success ? llt.rcond() : 0.0;
  if (!(rcond >= kSingularDesignRcond))
    throw SingularDesignError("singular design: reciprocal condition of X^T X is " +
                                  std::to_string(rcond) + " (threshold 1e-12)",
                              rcond);
  detail::RowMajorMatrix b = llt.solve(as_eigen(xty_));
  return from_eigen(b);
}

Mat ols_solve(const Mat& x, const Mat& yv) {
  if (x.rows() != yv.rows())
    throw DimensionError("ols_solve: X has " + std::to_string(x.rows()) + " rows, Y has " +
                         std::to_string(yv.rows()));
  if (x.rows() < x.cols())
    throw SingularDesignError("singular design: n=" + std::to_string(x.rows()) + " < q=" +
                                  std::to_string(x.cols()),
                              0.0);
  CrossProducts cp(x.cols(), yv.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) cp.add_row(x.row(i), yv.row(i));
  return cp.solve();
}

double orthonormality_defect(const Mat& w) {
  Mat g = matmul_tn(w, w);
  for (std::size_t i = 0; i < g.rows(); ++i) g(i, i) -= 1.0;
  return max_abs(g);
}

double sin_theta(const Mat& w1, const Mat& w2) {
  if (w1.rows() != w2.rows() || w1.cols() != w2.cols())
    throw ArgumentError("sin_theta: bases must have equal shapes");
  if (w1.cols() == 0) throw ArgumentError("sin_theta: empty basis");
  if (orthonormality_defect(w1) > 1e-6 || orthonormality_defect(w2) > 1e-6)
    throw ArgumentError("sin_theta: columns are not orthonormal");
  // (I - W1 W1^T) W2
  Mat resid = w2 - matmul(w1, matmul_tn(w1, w2));
  return std::min(1.0, spectral_norm(resid));
}

Mat gram_schmidt(const Mat& columns, bool normalize) {
  Mat out = columns.transpose();  // rows are the vectors
  const std::size_t len = out.cols();
  for (std::size_t k = 0; k < out.rows(); ++k) {
    double* vk = out.row(k).data();
    for (std::size_t j = 0; j < k; ++j) {
      const double* vj = out.row(j).data();
      const double nj = simd::sum_squares(vj, len);
      if (nj == 0.0) continue;
      simd::axpy(-simd::dot(vj, vk, len) / nj, vj, vk, len);
    }
    if (normalize) {
      const double nk = std::sqrt(simd::sum_squares(vk, len));
      if (nk == 0.0) throw NumericError("gram_schmidt: linearly dependent columns");
      simd::scale(1.0 / nk, vk, len);
    }
  }
  return out.transpose();
}

double spectral_norm(const Mat& m) {
  if (m.empty()) return 0.0;
  // Work with the smaller Gram matrix.
  const Mat g = m.rows() >= m.cols() ? matmul_tn(m, m) : matmul_nt(m, m);
  Eigen::SelfAdjointEigenSolver<detail::RowMajorMatrix> es(as_eigen(g),
                                                           Eigen::EigenvaluesOnly);
  const double lmax = es.eigenvalues().maxCoeff();
  return std::sqrt(std::max(lmax, 0.0));
}

Mat low_rank_approx(const Mat& m, std::size_t k) { return reconstruct(svd_truncated(m, k)); }

SpdInverse spd_inverse(const Mat& s) {
  if (s.rows() != s.cols()) throw DimensionError("spd_inverse: matrix is not square");
  detail::RowMajorMatrix a = as_eigen(s);
  Eigen::LLT<detail::RowMajorMatrix> llt(a);
  if (llt.info() != Eigen::Success)
    throw NumericError("spd_inverse: matrix is not positive definite");
  double log_det = 0.0;
  const auto& l = llt.matrixLLT();
  for (Eigen::Index i = 0; i < l.rows(); ++i) log_det += 2.0 * std::log(l(i, i));
  detail::RowMajorMatrix inv = llt.solve(detail::RowMajorMatrix::Identity(a.rows(), a.cols()));
  // Symmetrize against round-off.
  detail::RowMajorMatrix sym = 0.5 * (inv + inv.transpose());
  return {from_eigen(sym), log_det};
}

double min_eigenvalue(const Mat& s) {
  Eigen::SelfAdjointEigenSolver<detail::RowMajorMatrix> es(as_eigen(s), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

Mat pseudo_inverse(const Mat& m) {
  SvdFactors f = svd_full(m);
  const double tol = std::max(m.rows(), m.cols()) * 2.220446049250313e-16 *
                     (f.S.empty() ? 0.0 : f.S.front());
  // V diag(1/s) U^T
  Mat vs = f.V;
  for (std::size_t i = 0; i < vs.rows(); ++i)
    for (std::size_t k = 0; k < f.S.size(); ++k)
      vs(i, k) = f.S[k] > tol ? vs(i, k) / f.S[k] : 0.0;
  return matmul_nt(vs, f.U);
}

}  // namespace kpf
