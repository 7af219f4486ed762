#pragma once

// Seeded generators for coefficients, designs, the four noise models and
// complete datasets Y_i = sum_k beta1_k X_i beta2_k^T + E_i.

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "kpf/model.hpp"
#include "kpf/rng.hpp"

namespace kpf {

/// Standard-normal vec(beta1_k), vec(beta2_k). For d > 1 each family is
/// Gram-Schmidt orthogonalized and every pair rescaled to equal Frobenius
/// norms; terms are ordered by sigma_k = ||beta1_k|| ||beta2_k||, descending.
KroneckerCoefficients gen_coefficients(const Dims& dims, std::size_t d, std::uint64_t seed);

/// n x q1q2, iid N(0, 1).
Mat gen_design(std::size_t n, const Dims& dims, std::uint64_t seed);

/// Lower-triangular banded factor L (p x p, bandwidth b) of the banded noise
/// model: diagonal ~ N(3, 1), in-band off-diagonal ~ N(0, 1).
class BandedFactor {
public:
  BandedFactor(std::size_t p, std::size_t bandwidth, std::uint64_t seed);

  std::size_t size() const noexcept { return p_; }
  std::size_t bandwidth() const noexcept { return b_; }
  /// L(t, t - s) for 0 <= s <= min(b, t); zero elsewhere.
  double at(std::size_t t, std::size_t j) const noexcept;
  /// e = L z
  void apply(std::span<const double> z, std::span<double> e) const noexcept;
  /// diag(L L^T)
  std::vector<double> covariance_diagonal() const;

private:
  std::size_t p_;
  std::size_t b_;
  std::vector<double> band_;  // row t holds L(t, t), L(t, t-1), ..., L(t, t-b)
};

/// Draws noise rows vec(E_i)^T one at a time.
class NoiseSource {
public:
  NoiseSource(const NoiseModelSpec& spec, const Dims& dims, std::uint64_t seed);
  void next_row(std::span<double> out);

private:
  NoiseModelSpec spec_;
  std::size_t p_;
  NormalRng rng_;
  std::optional<BandedFactor> banded_;
  std::vector<double> scratch_;
};

/// n x p1p2 noise matrix.
Mat gen_noise(const NoiseModelSpec& spec, std::size_t n, const Dims& dims, std::uint64_t seed);

struct SeedTuple {
  std::uint64_t coefficients = 0;
  std::uint64_t design = 0;
  std::uint64_t noise = 0;
};

/// Seeds for replicate r of an experiment: (seed_base xor r) split into
/// independent design / noise streams. Coefficients use seed_base alone.
SeedTuple replicate_seeds(std::uint64_t seed_base, std::uint64_t replicate);
/// Default structure seed of the banded model for an experiment.
std::uint64_t default_structure_seed(std::uint64_t seed_base);

/// Row-by-row generator of (vec(X_i), vec(Y_i)) for fixed coefficients.
/// gen_dataset() materializes exactly this stream.
class ReplicateStream {
public:
  ReplicateStream(const KroneckerCoefficients& coeffs, std::optional<NoiseModelSpec> noise,
                  std::uint64_t design_seed, std::uint64_t noise_seed);

  void next(std::span<double> x_row, std::span<double> y_row);

private:
  Dims dims_;
  Mat nu_t_;  // q1q2 x p1p2
  NormalRng design_rng_;
  std::optional<NoiseSource> noise_;
};

/// Data for fixed coefficients (held constant across replicates).
Dataset gen_dataset(const KroneckerCoefficients& coeffs, std::size_t n,
                    const std::optional<NoiseModelSpec>& noise, std::uint64_t design_seed,
                    std::uint64_t noise_seed);

/// Coefficients and data in one go.
std::pair<Dataset, KroneckerCoefficients> gen_dataset(const Dims& dims, std::size_t d,
                                                      std::size_t n,
                                                      const std::optional<NoiseModelSpec>& noise,
                                                      const SeedTuple& seeds);

}  // namespace kpf
