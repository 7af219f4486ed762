#pragma once

#include <Eigen/Dense>

#include "kpf/mat.hpp"

namespace kpf::detail {

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatMap = Eigen::Map<const RowMajorMatrix>;

inline ConstMatMap as_eigen(const Mat& m) {
  return ConstMatMap(m.data(), static_cast<Eigen::Index>(m.rows()),
                     static_cast<Eigen::Index>(m.cols()));
}

template <typename Derived>
Mat from_eigen(const Eigen::MatrixBase<Derived>& e) {
  Mat m(static_cast<std::size_t>(e.rows()), static_cast<std::size_t>(e.cols()));
  Eigen::Map<RowMajorMatrix>(m.data(), e.rows(), e.cols()) = e;
  return m;
}

}  // namespace kpf::detail
