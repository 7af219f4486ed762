#pragma once

// Shared helpers for the unit tests. Random inputs come from a plain
// std::mt19937_64 so that no test depends on the library's own generator.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>
#include <vector>

#include "kpf/mat.hpp"

namespace kpf::test {

inline Mat random_mat(std::mt19937_64& g, std::size_t r, std::size_t c) {
  std::normal_distribution<double> nd;
  Mat m(r, c);
  for (double& x : m.flat()) x = nd(g);
  return m;
}

inline std::vector<double> random_vec(std::mt19937_64& g, std::size_t n) {
  std::normal_distribution<double> nd;
  std::vector<double> v(n);
  for (double& x : v) x = nd(g);
  return v;
}

/// Triple-loop product, independent of the library's kernels.
inline Mat naive_matmul(const Mat& a, const Mat& b) {
  Mat c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      long double s = 0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += static_cast<long double>(a(i, k)) * b(k, j);
      c(i, j) = static_cast<double>(s);
    }
  return c;
}

inline Mat naive_transpose(const Mat& a) {
  Mat t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

inline double max_abs_diff(const Mat& a, const Mat& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::logic_error("max_abs_diff: shape mismatch");
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.flat()[i] - b.flat()[i]));
  return m;
}

inline double fro(const Mat& a) {
  long double s = 0;
  for (double x : a.flat()) s += static_cast<long double>(x) * x;
  return std::sqrt(static_cast<double>(s));
}

/// Entrywise Kronecker product by its index formula:
/// K(p1*i + k, q1*j + l) = A(i, j) * B(k, l).
inline Mat index_kron(const Mat& a, const Mat& b) {
  Mat k(a.rows() * b.rows(), a.cols() * b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      for (std::size_t r = 0; r < b.rows(); ++r)
        for (std::size_t c = 0; c < b.cols(); ++c)
          k(b.rows() * i + r, b.cols() * j + c) = a(i, j) * b(r, c);
  return k;
}

/// Block extraction: row j*p2 + i of the result is vec of block (i, j).
inline Mat block_rearrange(const Mat& m, std::size_t p1, std::size_t p2, std::size_t q1,
                           std::size_t q2) {
  Mat r(p2 * q2, p1 * q1);
  for (std::size_t j = 0; j < q2; ++j)
    for (std::size_t i = 0; i < p2; ++i) {
      std::size_t col = 0;
      for (std::size_t bc = 0; bc < q1; ++bc)
        for (std::size_t br = 0; br < p1; ++br) r(j * p2 + i, col++) = m(i * p1 + br, j * q1 + bc);
    }
  return r;
}

/// Column-major flattening.
inline std::vector<double> colmajor(const Mat& m) {
  std::vector<double> v;
  for (std::size_t j = 0; j < m.cols(); ++j)
    for (std::size_t i = 0; i < m.rows(); ++i) v.push_back(m(i, j));
  return v;
}

inline Mat outer_product(const std::vector<double>& u, const std::vector<double>& v) {
  Mat m(u.size(), v.size());
  for (std::size_t i = 0; i < u.size(); ++i)
    for (std::size_t j = 0; j < v.size(); ++j) m(i, j) = u[i] * v[j];
  return m;
}

/// Singular values via the Jacobi eigenvalue method on A^T A (small inputs).
inline std::vector<double> jacobi_singular_values(const Mat& a) {
  Mat g = naive_matmul(naive_transpose(a), a);
  const std::size_t n = g.rows();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += g(p, q) * g(p, q);
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(g(p, q)) < 1e-300) continue;
        const double theta = (g(q, q) - g(p, p)) / (2 * g(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1));
        const double c = 1 / std::sqrt(t * t + 1), s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double gkp = g(k, p), gkq = g(k, q);
          g(k, p) = c * gkp - s * gkq;
          g(k, q) = s * gkp + c * gkq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double gpk = g(p, k), gqk = g(q, k);
          g(p, k) = c * gpk - s * gqk;
          g(q, k) = s * gpk + c * gqk;
        }
      }
  }
  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i) s[i] = std::sqrt(std::max(0.0, g(i, i)));
  std::sort(s.begin(), s.end(), std::greater<>());
  return s;
}

}  // namespace kpf::test
