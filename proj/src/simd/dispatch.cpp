#include <stdexcept>
#include <string>

#include "occlqg/simd/kernels.hpp"

namespace occlqg::simd {

std::string_view to_string(Isa isa) {
  switch (isa) {
    case Isa::kScalar: return "scalar";
    case Isa::kAvx2: return "avx2";
    case Isa::kNeon: return "neon";
  }
  return "unknown";
}

bool available(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return true;
    case Isa::kAvx2:
#if defined(__x86_64__) || defined(_M_X64)
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
    case Isa::kNeon:
#if defined(__aarch64__)
      return true;
#else
      return false;
#endif
  }
  return false;
}

const LaneKernels& kernels(Isa isa) {
  if (!available(isa)) {
    throw std::runtime_error("SIMD variant '" + std::string(to_string(isa)) +
                             "' is not available on this machine");
  }
  switch (isa) {
#if defined(__x86_64__) || defined(_M_X64)
    case Isa::kAvx2: return detail::kAvx2Kernels;
#endif
#if defined(__aarch64__)
    case Isa::kNeon: return detail::kNeonKernels;
#endif
    default: return detail::kScalarKernels;
  }
}

Isa best_isa() {
  static const Isa isa = [] {
    if (available(Isa::kAvx2)) return Isa::kAvx2;
    if (available(Isa::kNeon)) return Isa::kNeon;
    return Isa::kScalar;
  }();
  return isa;
}

const LaneKernels& best_kernels() { return kernels(best_isa()); }

}  // namespace occlqg::simd
