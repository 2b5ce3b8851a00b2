#include "occlqg/symcone.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace occlqg {

SymmetricMatrix::SymmetricMatrix(int dim)
    : dim_(dim), data_(static_cast<std::size_t>(svec_length(dim)), 0.0) {}

SymmetricMatrix SymmetricMatrix::from_dense(const Matrix& M) {
  if (M.rows() != M.cols()) throw DimensionError("SymmetricMatrix: not square");
  SymmetricMatrix S(static_cast<int>(M.rows()));
  for (int i = 0; i < S.dim_; ++i) {
    for (int j = 0; j <= i; ++j) S(i, j) = M(i, j);
  }
  return S;
}

SymmetricMatrix SymmetricMatrix::identity(int dim) {
  SymmetricMatrix S(dim);
  for (int i = 0; i < dim; ++i) S(i, i) = 1.0;
  return S;
}

Matrix SymmetricMatrix::to_dense() const {
  Matrix M(dim_, dim_);
  for (int i = 0; i < dim_; ++i) {
    for (int j = 0; j <= i; ++j) {
      M(i, j) = (*this)(i, j);
      M(j, i) = M(i, j);
    }
  }
  return M;
}

Vector svec(const SymmetricMatrix& M) {
  const int d = M.dim();
  Vector v(svec_length(d));
  int k = 0;
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < i; ++j) v(k++) = std::numbers::sqrt2 * M(i, j);
    v(k++) = M(i, i);
  }
  return v;
}

Vector svec(const Matrix& M) {
  if (M.rows() != M.cols()) throw DimensionError("svec: not square");
  const int d = static_cast<int>(M.rows());
  Vector v(svec_length(d));
  int k = 0;
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < i; ++j) v(k++) = std::numbers::sqrt2 * M(i, j);
    v(k++) = M(i, i);
  }
  return v;
}

SymmetricMatrix smat(const Vector& v) {
  const auto len = v.size();
  // d(d+1)/2 = len
  const int d = static_cast<int>(std::lround((std::sqrt(8.0 * len + 1.0) - 1.0) / 2.0));
  if (svec_length(d) != len) {
    throw std::invalid_argument("smat: length " + std::to_string(len) +
                                " is not a triangular number");
  }
  SymmetricMatrix M(d);
  int k = 0;
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < i; ++j) M(i, j) = v(k++) / std::numbers::sqrt2;
    M(i, i) = v(k++);
  }
  return M;
}

void ConicProgram::check() const {
  if (psd_dim <= 0) throw DimensionError(name + ": psd_dim must be positive");
  if (C.dim() != psd_dim) throw DimensionError(name + ": objective block size");
  if (c_lin.size() != num_nonneg) throw DimensionError(name + ": c_lin size");
  if (equalities.empty()) throw DimensionError(name + ": no equality constraints");
  for (const auto& e : equalities) {
    if (e.A.dim() != psd_dim || e.a.size() != num_nonneg) {
      throw DimensionError(name + ": equality '" + e.label + "' has wrong shape");
    }
  }
}

double ConicProgram::primal_objective(const Matrix& X, const Vector& slacks) const {
  return (C.to_dense().cwiseProduct(X)).sum() + c_lin.dot(slacks) + objective_offset;
}

double ConicProgram::dual_objective(const Vector& y) const {
  double v = objective_offset;
  for (std::size_t i = 0; i < equalities.size(); ++i) {
    v += y(static_cast<Eigen::Index>(i)) * equalities[i].b;
  }
  return v;
}

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kOptimal: return "OPTIMAL";
    case SolveStatus::kMaxIter: return "MAX_ITER";
    case SolveStatus::kNumericalFailure: return "NUMERICAL_FAILURE";
    case SolveStatus::kInfeasibleSuspected: return "INFEASIBLE_SUSPECTED";
  }
  return "UNKNOWN";
}

double Residuals::max() const {
  return std::max({primal_infeas, dual_infeas, duality_gap});
}

Residuals program_residuals(const ConicProgram& prog, const ConicSolution& sol) {
  prog.check();
  const int d = prog.psd_dim;
  const auto s = prog.num_nonneg;
  const auto m = static_cast<Eigen::Index>(prog.equalities.size());
  if (sol.X.rows() != d || sol.X.cols() != d || sol.S.rows() != d ||
      sol.S.cols() != d || sol.slacks.size() != s ||
      sol.dual_slacks_lin.size() != s || sol.y.size() != m) {
    throw DimensionError("program_residuals: solution does not match program");
  }
  Residuals r;
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& e = prog.equalities[static_cast<std::size_t>(i)];
    const double lhs = (e.A.to_dense().cwiseProduct(sol.X)).sum() + e.a.dot(sol.slacks);
    r.primal_infeas = std::max(r.primal_infeas, std::abs(lhs - e.b) / (1.0 + std::abs(e.b)));
  }
  const Matrix C = prog.C.to_dense();
  Matrix dual_res = C - sol.S;
  Vector lin_res = prog.c_lin - sol.dual_slacks_lin;
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& e = prog.equalities[static_cast<std::size_t>(i)];
    dual_res -= sol.y(i) * e.A.to_dense();
    lin_res -= sol.y(i) * e.a;
  }
  r.dual_infeas = dual_res.norm() / (1.0 + C.norm());
  if (s > 0) {
    r.dual_infeas = std::max(r.dual_infeas, lin_res.norm() / (1.0 + prog.c_lin.norm()));
  }
  r.duality_gap = std::abs(sol.primal_obj - sol.dual_obj) /
                  (1.0 + std::abs(sol.primal_obj) + std::abs(sol.dual_obj));
  return r;
}

}  // namespace occlqg
