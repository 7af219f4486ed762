#include <atomic>
#include <cstdlib>
#include <string>

#include "kpf/errors.hpp"
#include "kpf/kernels.hpp"

namespace kpf::simd {

bool cpu_has_avx2() noexcept {
#if defined(__x86_64__) || defined(__i386__)
  if (avx2_kernels() == nullptr) return false;
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

namespace {

const KernelTable* select_initial() noexcept {
  const char* env = std::getenv("KROPROFAC_SIMD");
  if (env != nullptr && std::string(env) == "scalar") return &scalar_kernels();
  if (cpu_has_avx2()) return avx2_kernels();
  return &scalar_kernels();
}

std::atomic<const KernelTable*>& slot() noexcept {
  static std::atomic<const KernelTable*> table{select_initial()};
  return table;
}

}  // namespace

const KernelTable& active() noexcept { return *slot().load(std::memory_order_relaxed); }

void set_isa(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      slot().store(&scalar_kernels());
      return;
    case Isa::Avx2:
      if (!cpu_has_avx2()) throw ArgumentError("AVX2/FMA kernels are not available on this CPU");
      slot().store(avx2_kernels());
      return;
  }
}

std::string_view isa_name(Isa isa) noexcept {
  return isa == Isa::Avx2 ? "avx2" : "scalar";
}

}  // namespace kpf::simd
