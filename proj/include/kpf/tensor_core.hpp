#pragma once

// Shape algebra: column-major vectorization, Kronecker products and the
// block rearrangement that maps Kronecker structure to low rank.

#include <span>
#include <vector>

#include "kpf/mat.hpp"

namespace kpf {

/// Column-major concatenation: out[j*rows + i] = M(i, j).
std::vector<double> vec(const Mat& m);

/// Inverse of vec. Throws DimensionError when v.size() != p*q.
Mat vec_inv(std::span<const double> v, std::size_t p, std::size_t q);

/// A (p2 x q2) (x) B (p1 x q1); block (i, j) is A(i, j) * B.
Mat kron(const Mat& a, const Mat& b);

/// Partition M (p1p2 x q1q2) into p1 x q1 blocks M_ij, i < p2, j < q2, and
/// stack vec(M_ij)^T as row j*p2 + i of a p2q2 x p1q1 matrix. A pure entry
/// permutation, so rearrange(kron(b2, b1)) == vec(b2) vec(b1)^T exactly.
Mat rearrange(const Mat& m, const Dims& dims);

/// Inverse permutation of rearrange: p2q2 x p1q1 -> p1p2 x q1q2.
Mat rearrange_inv(const Mat& r, const Dims& dims);

/// u v^T
Mat outer(std::span<const double> u, std::span<const double> v);

}  // namespace kpf
