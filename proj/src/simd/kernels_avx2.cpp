// Compiled with -mavx2 (and without -mfma) when targeting x86-64.
#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cmath>

#include "occlqg/simd/kernels.hpp"

namespace occlqg::simd {

namespace {

constexpr int kWidth = 4;

void affine(const double* M, int rows, int cols, const double* x, const double* bias,
            double* out, int lanes) {
  const int vec_end = lanes - lanes % kWidth;
  for (int r = 0; r < rows; ++r) {
    int l = 0;
    for (; l < vec_end; l += kWidth) {
      __m256d acc = _mm256_setzero_pd();
      for (int c = 0; c < cols; ++c) {
        const __m256d m = _mm256_set1_pd(M[r * cols + c]);
        acc = _mm256_add_pd(acc, _mm256_mul_pd(m, _mm256_loadu_pd(x + c * lanes + l)));
      }
      if (bias) acc = _mm256_add_pd(acc, _mm256_loadu_pd(bias + r * lanes + l));
      _mm256_storeu_pd(out + r * lanes + l, acc);
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
  const __m256d wv = _mm256_set1_pd(w);
  int i = 0;
  for (; i < vec_end; i += kWidth) {
    const __m256d a = _mm256_loadu_pd(acc + i);
    _mm256_storeu_pd(acc + i, _mm256_add_pd(a, _mm256_mul_pd(wv, _mm256_loadu_pd(v + i))));
  }
  for (; i < total; ++i) acc[i] = acc[i] + w * v[i];
}

void outer_acc(double w, const double* a, int da, const double* b, int db, double* acc,
               int lanes) {
  const int vec_end = lanes - lanes % kWidth;
  const __m256d wv = _mm256_set1_pd(w);
  for (int i = 0; i < da; ++i) {
    for (int j = 0; j < db; ++j) {
      double* dst = acc + (i * db + j) * lanes;
      const double* ai = a + i * lanes;
      const double* bj = b + j * lanes;
      int l = 0;
      for (; l < vec_end; l += kWidth) {
        const __m256d prod = _mm256_mul_pd(_mm256_loadu_pd(ai + l), _mm256_loadu_pd(bj + l));
        const __m256d d = _mm256_loadu_pd(dst + l);
        _mm256_storeu_pd(dst + l, _mm256_add_pd(d, _mm256_mul_pd(wv, prod)));
      }
      for (; l < lanes; ++l) dst[l] = dst[l] + w * (ai[l] * bj[l]);
    }
  }
}

void quad_acc(double w, const double* Q, int dim, const double* v, double* acc, int lanes) {
  const int vec_end = lanes - lanes % kWidth;
  const __m256d wv = _mm256_set1_pd(w);
  int l = 0;
  for (; l < vec_end; l += kWidth) {
    __m256d total = _mm256_setzero_pd();
    for (int i = 0; i < dim; ++i) {
      __m256d row = _mm256_setzero_pd();
      for (int j = 0; j < dim; ++j) {
        row = _mm256_add_pd(row, _mm256_mul_pd(_mm256_set1_pd(Q[i * dim + j]),
                                               _mm256_loadu_pd(v + j * lanes + l)));
      }
      total = _mm256_add_pd(total, _mm256_mul_pd(_mm256_loadu_pd(v + i * lanes + l), row));
    }
    const __m256d a = _mm256_loadu_pd(acc + l);
    _mm256_storeu_pd(acc + l, _mm256_add_pd(a, _mm256_mul_pd(wv, total)));
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
  const __m256d sign_mask = _mm256_set1_pd(-0.0);
  const __m256d hv = _mm256_set1_pd(h);
  const __m256d wv = _mm256_set1_pd(w);
  int l = 0;
  for (; l < vec_end; l += kWidth) {
    __m256d dot = _mm256_setzero_pd();
    for (int i = 0; i < dim; ++i) {
      dot = _mm256_add_pd(dot, _mm256_mul_pd(_mm256_set1_pd(g[i]), _mm256_loadu_pd(v + i * lanes + l)));
    }
    const __m256d mag = _mm256_andnot_pd(sign_mask, dot);
    const __m256d hit = _mm256_and_pd(_mm256_cmp_pd(mag, hv, _CMP_GE_OQ), wv);
    _mm256_storeu_pd(acc + l, _mm256_add_pd(_mm256_loadu_pd(acc + l), hit));
  }
  for (; l < lanes; ++l) {
    double dot = 0.0;
    for (int i = 0; i < dim; ++i) dot = dot + g[i] * v[i * lanes + l];
    acc[l] = acc[l] + (std::fabs(dot) >= h ? w : 0.0);
  }
}

}  // namespace

namespace detail {
const LaneKernels kAvx2Kernels{Isa::kAvx2, affine, axpy, outer_acc, quad_acc, band_acc};
}  // namespace detail

}  // namespace occlqg::simd

#endif
