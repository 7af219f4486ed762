#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "kpf/errors.hpp"

namespace kpf {

/// Problem dimensions: Y_i is p1 x p2, X_i is q1 x q2, n samples.
struct Dims {
  std::size_t p1 = 1;
  std::size_t p2 = 1;
  std::size_t q1 = 1;
  std::size_t q2 = 1;
  std::size_t n = 0;  // 0 where the sample size is irrelevant

  std::size_t p() const noexcept { return p1 * p2; }
  std::size_t q() const noexcept { return q1 * q2; }

  /// Throws ArgumentError unless every response/predictor dimension is >= 1.
  void validate() const;
  /// validate() plus n >= q1*q2.
  void validate_for_estimation() const;

  friend bool operator==(const Dims&, const Dims&) = default;
};

/// Dense real matrix, row-major storage.
class Mat {
public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Mat(std::size_t rows, std::size_t cols, std::vector<double> row_major);
  Mat(std::initializer_list<std::initializer_list<double>> rows);

  static Mat identity(std::size_t n);
  static Mat diag(std::span<const double> d);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }
  std::span<double> flat() noexcept { return data_; }
  std::span<const double> flat() const noexcept { return data_; }

  std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const noexcept {
    return {data_.data() + i * cols_, cols_};
  }

  std::vector<double> col(std::size_t j) const;
  void set_col(std::size_t j, std::span<const double> v);

  Mat transpose() const;
  /// Leading columns [0, k).
  Mat left_cols(std::size_t k) const;

  Mat& operator+=(const Mat& o);
  Mat& operator-=(const Mat& o);
  Mat& operator*=(double s);

  friend bool operator==(const Mat&, const Mat&) = default;

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Mat operator+(Mat a, const Mat& b);
Mat operator-(Mat a, const Mat& b);
Mat operator*(double s, Mat a);

/// C = A B
Mat matmul(const Mat& a, const Mat& b);
/// C = A^T B
Mat matmul_tn(const Mat& a, const Mat& b);
/// C = A B^T
Mat matmul_nt(const Mat& a, const Mat& b);

double frobenius_norm(const Mat& m);
double max_abs(const Mat& m);
double trace(const Mat& m);
bool all_finite(const Mat& m);

void require_same_shape(const Mat& a, const Mat& b, const char* what);

}  // namespace kpf
