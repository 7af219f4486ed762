#pragma once

// Domain types shared by the estimator, the generators and the CLI.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kpf/mat.hpp"

namespace kpf {

/// One Kronecker term beta2 (x) beta1 of the coefficient matrix.
struct KroneckerTerm {
  Mat beta1;  // p1 x q1
  Mat beta2;  // p2 x q2
};

/// nu = sum_k beta2_k (x) beta1_k, kept in factored form.
struct KroneckerCoefficients {
  Dims dims;
  std::vector<KroneckerTerm> factors;
  std::vector<double> sigma;  // one per term, descending

  std::size_t d() const noexcept { return factors.size(); }
  /// Dense p1p2 x q1q2 coefficient matrix.
  Mat nu() const;
};

enum class NoiseKind { Identity, Banded, Ar1, HeavyTailedT5 };

struct NoiseModelSpec {
  NoiseKind kind = NoiseKind::Identity;
  std::size_t bandwidth = 5;            // Banded
  double rho = 0.9;                     // Ar1
  unsigned df = 5;                      // HeavyTailedT5
  std::uint64_t structure_seed = 0;     // Banded: fixes L across replicates

  /// ArgumentError when the parameters are out of range.
  void validate() const;
};

std::string to_string(NoiseKind kind);
/// Accepts identity|banded|ar1|t5 (case-insensitive).
NoiseKind parse_noise_kind(const std::string& s);

struct SeedRecord {
  std::string generator;
  std::uint64_t coefficient_seed = 0;
  std::uint64_t design_seed = 0;
  std::uint64_t noise_seed = 0;
  std::optional<NoiseModelSpec> noise;  // absent for noiseless data
};

/// Stacked regression data. Row i of X is vec(X_i)^T, row i of Y is vec(Y_i)^T.
struct Dataset {
  Dims dims;
  Mat X;  // n x q1q2
  Mat Y;  // n x p1p2
  std::optional<SeedRecord> seed_record;

  std::size_t n() const noexcept { return X.rows(); }
  Mat x_sample(std::size_t i) const;
  Mat y_sample(std::size_t i) const;
  /// DimensionError on any shape inconsistency.
  void validate() const;
};

}  // namespace kpf
