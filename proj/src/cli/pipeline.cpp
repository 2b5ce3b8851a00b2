#include "occlqg/cli/pipeline.hpp"

#include <cmath>
#include <limits>

#include "occlqg/chance.hpp"
#include "occlqg/riccati.hpp"

namespace occlqg::cli {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kActiveMultiplier = 1e-6;

ConicSolution solve_checked(const ConicProgram& prog, const SolverOptions& opts) {
  ConicSolution sol = solve_conic(prog, opts);
  if (sol.status != SolveStatus::kOptimal) {
    throw SolverFailure(prog.name + " program: " + to_string(sol.status) + " after " +
                            std::to_string(sol.iterations) + " iterations",
                        sol.status);
  }
  return sol;
}

RiccatiCheck riccati_check(const PipelineResult& r) {
  const auto& p = r.problem;
  RiccatiCheck out;
  Matrix Q = p.cost.Q, R = p.cost.R;
  for (std::size_t i = 0; i < p.moment_bounds.size(); ++i) {
    const double g = r.value.gamma(static_cast<Eigen::Index>(i));
    Q += g * p.moment_bounds[i].cost.Q;
    R += g * p.moment_bounds[i].cost.R;
  }
  const Matrix& P = r.value.value.P;
  out.dare_residual = oracle::dare_residual(P, p.system.A, p.system.B, Q, R, p.alpha);
  out.dare_residual_flipped_sign = oracle::dare_residual(P, p.system.A, p.system.B, Q, R, p.alpha,
                                                       oracle::RiccatiForm::kFlippedSign);
  out.complementarity = complementarity_residual(r.moments, r.value.value, p, r.value.gamma);
  Eigen::SelfAdjointEigenSolver<Matrix> es(r.policy.cov, Eigen::EigenvaluesOnly);
  out.max_cov_eig = r.policy.cov.size() ? es.eigenvalues().maxCoeff() : 0.0;
  out.gain_gap = kNaN;
  out.moment_gap = kNaN;
  try {
    const auto dare = oracle::solve_dare(p.system.A, p.system.B, Q, R, p.alpha);
    out.dare_converged = dare.converged;
    const Matrix K = oracle::gain_from_value(dare.P, p.system.A, p.system.B, R, p.alpha);
    out.gain_gap = (r.policy.K - K).norm();
    const OccupationMoments exact = oracle::closed_loop_moments(p, K);
    out.moment_gap = max_relative_difference(r.moments.assemble(), exact.assemble());
  } catch (const oracle::OracleError&) {
    out.dare_converged = false;
  }
  return out;
}

}  // namespace

double max_relative_difference(const Matrix& a, const Matrix& b) {
  return ((a - b).cwiseAbs().array() / (1.0 + b.cwiseAbs().array())).maxCoeff();
}

DiscountedLQGProblem without_constraints(const DiscountedLQGProblem& p) {
  DiscountedLQGProblem out = p;
  out.moment_bounds.clear();
  out.chance_specs.clear();
  return out;
}

PipelineResult run_pipeline(const DiscountedLQGProblem& p, const SolverSettings& settings) {
  PipelineResult r;
  r.problem = with_chance_bounds(p);
  SolverOptions opts;
  opts.tol_gap = settings.tol;
  opts.tol_feas = settings.tol;
  opts.max_iter = settings.max_iter;

  r.dual_program = build_dual(r.problem);
  r.dual = solve_checked(r.dual_program, opts);
  opts.polish = true;
  r.primal_program = build_primal(r.problem);
  r.primal = solve_checked(r.primal_program, opts);
  r.primal_cert = certify(r.primal_program, r.primal);
  r.dual_cert = certify(r.dual_program, r.dual);

  r.moments = extract_moments(r.primal_program.metadata, r.primal);
  r.value = extract_value(r.dual_program.metadata, r.dual);
  r.multipliers = extract_value(r.primal_program.metadata, r.primal);
  r.policy = gain_from_moments(r.moments);
  r.primal_objective = r.primal.primal_obj;
  // The dual program minimizes the negated value.
  r.dual_objective = -r.dual.primal_obj;
  r.relative_gap =
      std::abs(r.primal_objective - r.dual_objective) / (1.0 + std::abs(r.primal_objective));

  const std::size_t first_chance = p.moment_bounds.size();
  for (std::size_t i = 0; i < r.problem.moment_bounds.size(); ++i) {
    const auto& b = r.problem.moment_bounds[i];
    BoundActivity a;
    a.value = moment_cost(b.cost, r.moments);
    a.beta = b.beta;
    a.gamma = r.value.gamma(static_cast<Eigen::Index>(i));
    a.active = a.gamma > kActiveMultiplier;
    if (i >= first_chance) a.chance_index = static_cast<int>(i - first_chance);
    r.bounds.push_back(a);
  }
  for (std::size_t i = 0; i < p.chance_specs.size(); ++i) {
    ChanceReport c;
    c.spec = p.chance_specs[i];
    c.bound = r.problem.moment_bounds[first_chance + i];
    c.moment_value = c.spec.g.dot(r.moments.Z_xx * c.spec.g);
    try {
      const ChanceMass mass = analytic_chance_mass(r.problem, r.policy, c.spec.g, c.spec.h);
      c.mass = mass.mass;
      c.truncation_bound = mass.truncation_bound;
    } catch (const oracle::OracleError&) {
      c.mass = kNaN;
      c.truncation_bound = kNaN;
    }
    r.chance.push_back(c);
  }
  r.riccati = riccati_check(r);
  return r;
}

}  // namespace occlqg::cli
