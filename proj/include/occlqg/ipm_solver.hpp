#pragma once

#include "occlqg/symcone.hpp"

namespace occlqg {

struct SolverOptions {
  double tol_gap = 1e-9;
  double tol_feas = 1e-9;
  int max_iter = 200;
  /// Start from X = initial_scale * xi * I, S = initial_scale * eta * I, with
  /// xi >= 10 growing with |b| and eta >= 10 fixed by the dimension.
  double initial_scale = 1.0;
  /// Fraction of the distance to the cone boundary taken per step.
  double step_fraction = 0.98;
  /// Keep iterating once the tolerances are met, for as long as the
  /// residuals keep improving, and return the best iterate.
  bool polish = false;
};

/// Primal-dual path-following solver for a single PSD block plus a
/// nonnegative orthant. Nesterov-Todd scaling, Mehrotra predictor-corrector,
/// Schur complement over the equality multipliers with dense Cholesky.
///
/// The iteration runs on the objective (C, c_lin) scaled to unit norm, so
/// scaling the objective scales S, y, the dual slacks and the objectives and
/// leaves X and the slacks unchanged. Convergence requires both the scale-free
/// residuals and those of program_residuals to be within tolerance.
///
/// Steps are equal in the primal and dual spaces and cut mu = (<X,S> +
/// s.z) / (d + s) by at least 0.2% each. When no such step exists before
/// convergence the run restarts from a start ten times larger, up to four
/// times. If that fails too, the solver falls back to independent primal and
/// dual step lengths without the decrease guarantee. iterations and
/// mu_history describe the interior-point iterations of the returned run.
///
/// The final iterate is refined by up to three full Newton steps on the
/// optimality conditions with XS + SX = 0, each kept only if it lowers the
/// residuals. At strictly complementary nondegenerate solutions this brings
/// X and S to working precision.
///
/// The returned X and S have eigenvalues no smaller than -1e-12 (1 + trace);
/// slacks and dual slacks are nonnegative. On anything other than kOptimal,
/// the solution is the iterate with the smallest residuals seen.
ConicSolution solve_conic(const ConicProgram& prog, const SolverOptions& opts = {});

struct CertificateReport {
  Residuals residuals;
  double min_eig_X = 0.0;
  double min_eig_S = 0.0;
  double min_slack = 0.0;
  double min_dual_slack = 0.0;
  /// <X, S> + slacks . dual_slacks
  double complementarity = 0.0;
  /// Objectives recomputed from X, slacks and y.
  double primal_obj = 0.0;
  double dual_obj = 0.0;

  bool within(double tol) const;
};

/// Recomputes residuals, cone margins and complementarity from the raw
/// solution data, ignoring the objective values stored in `sol`.
CertificateReport certify(const ConicProgram& prog, const ConicSolution& sol);

}  // namespace occlqg
