#pragma once

// Inner-loop arithmetic used by the dense routines. Each kernel has a
// portable scalar reference implementation and, on x86-64, an AVX2/FMA
// variant. The active table is picked once at startup from CPUID and may be
// overridden with KROPROFAC_SIMD=scalar|avx2 or set_isa().
//
// The variants agree to rounding: reductions use a different summation
// order, axpy uses fused multiply-add. Results are deterministic for a
// fixed ISA.

#include <cstddef>
#include <string_view>

namespace kpf::simd {

enum class Isa { Scalar, Avx2 };

struct KernelTable {
  Isa isa;
  /// sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  /// y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  /// sum_i x[i]^2
  double (*sum_squares)(const double* x, std::size_t n);
  /// x[i] *= alpha
  void (*scale)(double alpha, double* x, std::size_t n);
  /// y[i] += alpha0*x0[i] + alpha1*x1[i] + alpha2*x2[i] + alpha3*x3[i]
  void (*axpy4)(const double* alpha, const double* const* x, double* y, std::size_t n);
};

const KernelTable& scalar_kernels() noexcept;
/// nullptr when the AVX2 translation unit is not built.
const KernelTable* avx2_kernels() noexcept;

/// True when this CPU can run the AVX2/FMA table.
bool cpu_has_avx2() noexcept;

/// The table every library routine calls through.
const KernelTable& active() noexcept;
/// Forces a table. Throws ArgumentError when the ISA is unavailable.
void set_isa(Isa isa);
std::string_view isa_name(Isa isa) noexcept;

inline double dot(const double* a, const double* b, std::size_t n) { return active().dot(a, b, n); }
inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
  active().axpy(alpha, x, y, n);
}
inline double sum_squares(const double* x, std::size_t n) { return active().sum_squares(x, n); }
inline void scale(double alpha, double* x, std::size_t n) { active().scale(alpha, x, n); }
inline void axpy4(const double* alpha, const double* const* x, double* y, std::size_t n) {
  active().axpy4(alpha, x, y, n);
}

}  // namespace kpf::simd
