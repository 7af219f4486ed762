#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace kpf {

/// Recorded in every seed record so a run can be reproduced bit-for-bit.
inline constexpr std::string_view kGeneratorName = "mt19937_64+marsaglia-polar/v1";

/// splitmix64 finalizer; maps (seed, stream) to a well-mixed child seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

/// Seeded normal / Student-t source. The bit stream of std::mt19937_64 is
/// fixed by the standard and the polar transform is implemented here, so
/// draws do not depend on the standard library's distribution classes.
class NormalRng {
public:
  explicit NormalRng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double normal() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  void fill_normal(std::span<double> out) noexcept {
    for (double& x : out) x = normal();
  }

  /// Student t with an integer number of degrees of freedom:
  /// Z / sqrt(chi2_df / df), chi2 built from df squared normals.
  double student_t(unsigned df) noexcept {
    const double z = normal();
    double chi2 = 0.0;
    for (unsigned k = 0; k < df; ++k) {
      const double g = normal();
      chi2 += g * g;
    }
    return z / std::sqrt(chi2 / static_cast<double>(df));
  }

private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace kpf
