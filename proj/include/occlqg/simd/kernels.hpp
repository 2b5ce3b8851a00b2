#pragma once

// Lane kernels for batched closed-loop rollouts.
//
// Data are laid out structure-of-arrays: component i of lane l lives at
// v[i * lanes + l]. Each kernel evaluates every lane with a fixed sequence of
// IEEE additions and multiplications (no fused multiply-add), so the scalar
// reference and the vector variants produce bit-identical results.

#include <string_view>

namespace occlqg::simd {

enum class Isa { kScalar, kAvx2, kNeon };

std::string_view to_string(Isa isa);

struct LaneKernels {
  Isa isa;

  /// out[r] = bias[r] + sum_c M[r * cols + c] * x[c], summed left to right
  /// from 0. bias may be null (treated as +0). out must not alias x.
  void (*affine)(const double* M, int rows, int cols, const double* x, const double* bias,
                 double* out, int lanes);

  /// acc[i] = acc[i] + w * v[i] for i < dim.
  void (*axpy)(double w, const double* v, int dim, double* acc, int lanes);

  /// acc[i * db + j] = acc[i * db + j] + w * (a[i] * b[j]).
  void (*outer_acc)(double w, const double* a, int da, const double* b, int db, double* acc,
                    int lanes);

  /// acc = acc + w * sum_i v[i] * (sum_j Q[i * dim + j] * v[j]).
  void (*quad_acc)(double w, const double* Q, int dim, const double* v, double* acc, int lanes);

  /// acc = acc + (|sum_i g[i] * v[i]| >= h ? w : 0).
  void (*band_acc)(double w, const double* g, int dim, double h, const double* v, double* acc,
                   int lanes);
};

/// True when the variant is compiled in and the CPU supports it.
bool available(Isa isa);

/// Throws std::runtime_error when the variant is unavailable.
const LaneKernels& kernels(Isa isa);

/// Widest available variant, probed once at runtime.
Isa best_isa();
const LaneKernels& best_kernels();

namespace detail {
extern const LaneKernels kScalarKernels;
#if defined(__x86_64__) || defined(_M_X64)
extern const LaneKernels kAvx2Kernels;
#endif
#if defined(__aarch64__)
extern const LaneKernels kNeonKernels;
#endif
}  // namespace detail

}  // namespace occlqg::simd
