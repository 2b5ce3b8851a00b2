#include <cmath>

#include "occlqg/simd/kernels.hpp"

namespace occlqg::simd {

namespace {

void affine(const double* M, int rows, int cols, const double* x, const double* bias,
            double* out, int lanes) {
  for (int r = 0; r < rows; ++r) {
    for (int l = 0; l < lanes; ++l) {
      double acc = 0.0;
      for (int c = 0; c < cols; ++c) acc = acc + M[r * cols + c] * x[c * lanes + l];
      out[r * lanes + l] = bias ? acc + bias[r * lanes + l] : acc;
    }
  }
}

void axpy(double w, const double* v, int dim, double* acc, int lanes) {
  for (int i = 0; i < dim * lanes; ++i) acc[i] = acc[i] + w * v[i];
}

void outer_acc(double w, const double* a, int da, const double* b, int db, double* acc,
               int lanes) {
  for (int i = 0; i < da; ++i) {
    for (int j = 0; j < db; ++j) {
      double* dst = acc + (i * db + j) * lanes;
      for (int l = 0; l < lanes; ++l) {
        dst[l] = dst[l] + w * (a[i * lanes + l] * b[j * lanes + l]);
      }
    }
  }
}

void quad_acc(double w, const double* Q, int dim, const double* v, double* acc, int lanes) {
  for (int l = 0; l < lanes; ++l) {
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
  for (int l = 0; l < lanes; ++l) {
    double dot = 0.0;
    for (int i = 0; i < dim; ++i) dot = dot + g[i] * v[i * lanes + l];
    acc[l] = acc[l] + (std::fabs(dot) >= h ? w : 0.0);
  }
}

}  // namespace

namespace detail {
const LaneKernels kScalarKernels{Isa::kScalar, affine, axpy, outer_acc, quad_acc, band_acc};
}  // namespace detail

}  // namespace occlqg::simd
