#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "occlqg/cli/config.hpp"
#include "occlqg/ipm_solver.hpp"
#include "occlqg/policy.hpp"
#include "occlqg/sdp_builder.hpp"
#include "occlqg/symcone.hpp"

namespace occlqg::cli {

class SolverFailure : public std::runtime_error {
 public:
  SolverFailure(const std::string& what, SolveStatus status)
      : std::runtime_error(what), status_(status) {}
  SolveStatus status() const { return status_; }

 private:
  SolveStatus status_;
};

struct BoundActivity {
  /// Tr(Q_i Z_xx) + Tr(R_i Z_uu) at the optimum.
  double value = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  bool active = false;
  /// Index into the chance list when the bound came from a chance spec.
  int chance_index = -1;
};

struct ChanceReport {
  ChanceSpec spec;
  MomentBound bound;
  /// g^T Z_xx g
  double moment_value = 0.0;
  /// Discounted mass of |g^T x| >= h under the extracted policy.
  double mass = 0.0;
  double truncation_bound = 0.0;
};

/// Cross-checks against the Riccati oracle run on the Lagrangian costs
/// Q0 + sum gamma_i Q_i, R0 + sum gamma_i R_i.
struct RiccatiCheck {
  bool dare_converged = false;
  double dare_residual = 0.0;
  double dare_residual_flipped_sign = 0.0;
  /// ||K_policy - K_dare||_F
  double gain_gap = 0.0;
  /// Largest entrywise |Z_sdp - Z_oracle| / (1 + |Z_oracle|) over the moment
  /// matrix, with Z_oracle the closed-loop moments of K_dare.
  double moment_gap = 0.0;
  double complementarity = 0.0;
  double max_cov_eig = 0.0;
};

struct PipelineResult {
  /// The input problem with chance specs translated to moment bounds.
  DiscountedLQGProblem problem;
  ConicProgram primal_program;
  ConicProgram dual_program;
  ConicSolution primal;
  ConicSolution dual;
  CertificateReport primal_cert;
  CertificateReport dual_cert;
  OccupationMoments moments;
  /// Value function and multipliers of the dual program.
  ValueSolution value;
  /// The same read from the primal equality multipliers.
  ValueSolution multipliers;
  AffineGaussianPolicy policy;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  /// |primal - dual| / (1 + |primal|)
  double relative_gap = 0.0;
  RiccatiCheck riccati;
  std::vector<BoundActivity> bounds;
  std::vector<ChanceReport> chance;
};

/// Builds and solves both programs, extracts moments, value function and
/// policy, and runs the oracle cross-checks. The primal solve is polished
/// past the tolerance. Throws SolverFailure unless both solves are optimal.
PipelineResult run_pipeline(const DiscountedLQGProblem& p, const SolverSettings& settings);

/// Copy without moment bounds or chance specs.
DiscountedLQGProblem without_constraints(const DiscountedLQGProblem& p);

/// max_ij |a_ij - b_ij| / (1 + |b_ij|)
double max_relative_difference(const Matrix& a, const Matrix& b);

}  // namespace occlqg::cli
