#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "occlqg/problem.hpp"

namespace occlqg {

/// Dense symmetric matrix holding only its lower triangle, row by row.
class SymmetricMatrix {
 public:
  SymmetricMatrix() = default;
  explicit SymmetricMatrix(int dim);
  /// Reads the lower triangle of M. M must be square.
  static SymmetricMatrix from_dense(const Matrix& M);
  static SymmetricMatrix identity(int dim);

  int dim() const { return dim_; }
  double operator()(int i, int j) const { return data_[index(i, j)]; }
  double& operator()(int i, int j) { return data_[index(i, j)]; }

  Matrix to_dense() const;
  std::span<const double> packed() const { return data_; }

 private:
  std::size_t index(int i, int j) const {
    if (i < j) std::swap(i, j);
    return static_cast<std::size_t>(i) * (i + 1) / 2 + j;
  }

  int dim_ = 0;
  std::vector<double> data_;
};

/// Length of svec for a dim x dim matrix.
inline int svec_length(int dim) { return dim * (dim + 1) / 2; }

/// Row-wise lower-triangle vectorization with off-diagonals scaled by
/// sqrt(2), so that svec(A).dot(svec(B)) == <A, B>_F.
Vector svec(const SymmetricMatrix& M);
Vector svec(const Matrix& M);  // reads the lower triangle

/// Inverse of svec. Throws std::invalid_argument for non-triangular lengths.
SymmetricMatrix smat(const Vector& v);

/// <A, X> + a . slacks = b
struct LinearEquality {
  SymmetricMatrix A;
  Vector a;
  double b = 0.0;
  std::string label;
};

/// Rectangular block of the PSD variable (or a single nonneg slack when
/// rows == cols == 0 and slack >= 0).
struct BlockLocation {
  int row = 0;
  int col = 0;
  int rows = 0;
  int cols = 0;
  int slack = -1;
};

enum class ProgramKind { kGeneric, kOccupationMoments, kValueFunction };

/// Everything needed to map a solver result back to model objects.
struct ProgramMetadata {
  ProgramKind kind = ProgramKind::kGeneric;
  int state_dim = 0;
  int input_dim = 0;
  int num_bounds = 0;
  std::map<std::string, BlockLocation> blocks;
  /// Value-function programs: (P, q, r) coordinates are
  /// recovery * (svec(X) - lmi_offset - bound_directions * slacks).
  Matrix recovery;
  Vector lmi_offset;
  Matrix bound_directions;
};

/// min <C, X> + c_lin . s + objective_offset
/// s.t. <A_i, X> + a_i . s = b_i,   X PSD (psd_dim), s >= 0 (num_nonneg).
struct ConicProgram {
  std::string name;
  int psd_dim = 0;
  int num_nonneg = 0;
  SymmetricMatrix C;
  Vector c_lin;
  double objective_offset = 0.0;
  std::vector<LinearEquality> equalities;
  ProgramMetadata metadata;

  /// Throws DimensionError when blocks disagree with psd_dim/num_nonneg or
  /// the equality list is empty.
  void check() const;
  double primal_objective(const Matrix& X, const Vector& slacks) const;
  /// sum_i y_i b_i + objective_offset
  double dual_objective(const Vector& y) const;
};

enum class SolveStatus { kOptimal, kMaxIter, kNumericalFailure, kInfeasibleSuspected };

const char* to_string(SolveStatus s);

struct ConicSolution {
  Matrix X;
  Vector slacks;
  Vector y;
  Matrix S;
  Vector dual_slacks_lin;
  double primal_obj = 0.0;
  double dual_obj = 0.0;
  SolveStatus status = SolveStatus::kNumericalFailure;
  int iterations = 0;
  /// Complementarity measure mu at the start of each iteration.
  std::vector<double> mu_history;
};

struct Residuals {
  double primal_infeas = 0.0;
  double dual_infeas = 0.0;
  double duality_gap = 0.0;

  double max() const;
};

/// Relative primal/dual infeasibility and gap, as plain arithmetic on the
/// inputs. Throws DimensionError on shape mismatch.
Residuals program_residuals(const ConicProgram& prog, const ConicSolution& sol);

}  // namespace occlqg
