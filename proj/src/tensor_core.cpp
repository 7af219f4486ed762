#include "kpf/tensor_core.hpp"

#include <string>

namespace kpf {

std::vector<double> vec(const Mat& m) {
  std::vector<double> v(m.size());
  for (std::size_t j = 0; j < m.cols(); ++j)
    for (std::size_t i = 0; i < m.rows(); ++i) v[j * m.rows() + i] = m(i, j);
  return v;
}

Mat vec_inv(std::span<const double> v, std::size_t p, std::size_t q) {
  if (v.size() != p * q)
    throw DimensionError("vec_inv: length " + std::to_string(v.size()) + " != " +
                         std::to_string(p) + "*" + std::to_string(q));
  Mat m(p, q);
  for (std::size_t j = 0; j < q; ++j)
    for (std::size_t i = 0; i < p; ++i) m(i, j) = v[j * p + i];
  return m;
}

Mat kron(const Mat& a, const Mat& b) {
  const std::size_t p1 = b.rows(), q1 = b.cols();
  Mat out(a.rows() * p1, a.cols() * q1);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) {
      const double aij = a(i, j);
      for (std::size_t k = 0; k < p1; ++k)
        for (std::size_t l = 0; l < q1; ++l) out(i * p1 + k, j * q1 + l) = aij * b(k, l);
    }
  return out;
}

namespace {

void check_dims(const Mat& m, std::size_t rows, std::size_t cols, const char* what) {
  if (m.rows() != rows || m.cols() != cols)
    throw DimensionError(std::string(what) + ": expected " + std::to_string(rows) + "x" +
                         std::to_string(cols) + ", got " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()));
}

}  // namespace

Mat rearrange(const Mat& m, const Dims& dims) {
  dims.validate();
  const std::size_t p1 = dims.p1, p2 = dims.p2, q1 = dims.q1, q2 = dims.q2;
  check_dims(m, p1 * p2, q1 * q2, "rearrange");
  Mat r(p2 * q2, p1 * q1);
  for (std::size_t j = 0; j < q2; ++j)
    for (std::size_t i = 0; i < p2; ++i) {
      double* dst = r.row(j * p2 + i).data();
      for (std::size_t c = 0; c < q1; ++c) {
        const double* src = m.data() + (i * p1) * m.cols() + j * q1 + c;
        for (std::size_t k = 0; k < p1; ++k) dst[c * p1 + k] = src[k * m.cols()];
      }
    }
  return r;
}

Mat rearrange_inv(const Mat& r, const Dims& dims) {
  dims.validate();
  const std::size_t p1 = dims.p1, p2 = dims.p2, q1 = dims.q1, q2 = dims.q2;
  check_dims(r, p2 * q2, p1 * q1, "rearrange_inv");
  Mat m(p1 * p2, q1 * q2);
  for (std::size_t j = 0; j < q2; ++j)
    for (std::size_t i = 0; i < p2; ++i) {
      const double* src = r.row(j * p2 + i).data();
      for (std::size_t c = 0; c < q1; ++c) {
        double* dst = m.data() + (i * p1) * m.cols() + j * q1 + c;
        for (std::size_t k = 0; k < p1; ++k) dst[k * m.cols()] = src[c * p1 + k];
      }
    }
  return m;
}

Mat outer(std::span<const double> u, std::span<const double> v) {
  Mat m(u.size(), v.size());
  for (std::size_t i = 0; i < u.size(); ++i)
    for (std::size_t j = 0; j < v.size(); ++j) m(i, j) = u[i] * v[j];
  return m;
}

}  // namespace kpf
