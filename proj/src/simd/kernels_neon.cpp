// AArch64 only; Advanced SIMD is part of the base architecture there.
#if defined(__aarch64__)

#include <arm_neon.h>

#include <cmath>

#include "occlqg/simd/kernels.hpp"

namespace occlqg::simd {

namespace {

constexpr int kWidth = 2;

void affine(const double* M, int rows, int cols, const double* x, const double* bias,
            double* out, int lanes) {
  const int vec_end = lanes - lanes % kWidth;
  for (int r = 0; r < rows; ++r) {
    int l = 0;
    for (; l < vec_end; l += kWidth) {
      float64x2_t acc = vdupq_n_f64(0.0);
      for (int c = 0; c < cols; ++c) {
        acc = vaddq_f64(acc, vmulq_f64(vdupq_n_f64(M[r * cols + c]), vld1q_f64(x + c * lanes + l)));
      }
      if (bias) acc = vaddq_f64(acc, vld1q_f64(bias + r * lanes + l));
      vst1q_f64(out + r * lanes + l, acc);
    }
    for (; l < lanes; ++l) {
      double acc = 0.0;
      for (int c = 0; c < cols; ++c) acc = acc + M[r * cols + c] * x[c * lanes + l];
      out[r * lanes + l] = bias ? acc + bias[r * lanes + l] : acc;
    }
  }
}

void axpy(double w, const double* v, int dim, double* acc, int lanes) {
  const int total = dim * lanes;
  const int vec_end = total - total % kWidth;
  const float64x2_t wv = vdupq_n_f64(w);
  int i = 0;
  for (; i < vec_end; i += kWidth) {
    vst1q_f64(acc + i, vaddq_f64(vld1q_f64(acc + i), vmulq_f64(wv, vld1q_f64(v + i))));
  }
  for (; i < total; ++i) acc[i] = acc[i] + w * v[i];
}

void outer_acc(double w, const double* a, int da, const double* b, int db, double* acc,
               int lanes) {
  const int vec_end = lanes - lanes % kWidth;
  const float64x2_t wv = vdupq_n_f64(w);
  for (int i = 0; i < da; ++i) {
    for (int j = 0; j < db; ++j) {
      double* dst = acc + (i * db + j) * lanes;
      const double* ai = a + i * lanes;
      const double* bj = b + j * lanes;
      int l = 0;
      for (; l < vec_end; l += kWidth) {
        const float64x2_t prod = vmulq_f64(vld1q_f64(ai + l), vld1q_f64(bj + l));
        vst1q_f64(dst + l, vaddq_f64(vld1q_f64(dst + l), vmulq_f64(wv, prod)));
      }
      for (; l < lanes; ++l) dst[l] = dst[l] + w * (ai[l] * bj[l]);
    }
  }
}

void quad_acc(double w, const double* Q, int dim, const double* v, double* acc, int lanes) {
  const int vec_end = lanes - lanes % kWidth;
  const float64x2_t wv = vdupq_n_f64(w);
  int l = 0;
  for (; l < vec_end; l += kWidth) {
    float64x2_t total = vdupq_n_f64(0.0);
    for (int i = 0; i < dim; ++i) {
      float64x2_t row = vdupq_n_f64(0.0);
      for (int j = 0; j < dim; ++j) {
        row = vaddq_f64(row, vmulq_f64(vdupq_n_f64(Q[i * dim + j]), vld1q_f64(v + j * lanes + l)));
      }
      total = vaddq_f64(total, vmulq_f64(vld1q_f64(v + i * lanes + l), row));
    }
    vst1q_f64(acc + l, vaddq_f64(vld1q_f64(acc + l), vmulq_f64(wv, total)));
  }
  for (; l < lanes; ++l) {
    double total = 0.0;
    for (int i = 0; i < dim; ++i) {
      double row = 0.0;
      for (int j = 0; j < dim; ++j) row = row + Q[i * dim + j] * v[j * lanes + l];
      total = total + v[i * lanes + l] * row;
    }
    acc[l] = acc[l] + w * total;
  }
}

void band_acc(double w, const double* g, int dim, double h, const double* v, double* acc,
              int lanes) {
  const int vec_end = lanes - lanes % kWidth;
  const float64x2_t hv = vdupq_n_f64(h);
  const float64x2_t wv = vdupq_n_f64(w);
  int l = 0;
  for (; l < vec_end; l += kWidth) {
    float64x2_t dot = vdupq_n_f64(0.0);
    for (int i = 0; i < dim; ++i) {
      dot = vaddq_f64(dot, vmulq_f64(vdupq_n_f64(g[i]), vld1q_f64(v + i * lanes + l)));
    }
    const uint64x2_t hit = vcgeq_f64(vabsq_f64(dot), hv);
    const float64x2_t add = vreinterpretq_f64_u64(vandq_u64(hit, vreinterpretq_u64_f64(wv)));
    vst1q_f64(acc + l, vaddq_f64(vld1q_f64(acc + l), add));
  }
  for (; l < lanes; ++l) {
    double dot = 0.0;
    for (int i = 0; i < dim; ++i) dot = dot + g[i] * v[i * lanes + l];
    acc[l] = acc[l] + (std::fabs(dot) >= h ? w : 0.0);
  }
}

}  // namespace

namespace detail {
const LaneKernels kNeonKernels{Isa::kNeon, affine, axpy, outer_acc, quad_acc, band_acc};
}  // namespace detail

}  // namespace occlqg::simd

#endif
