#include <gtest/gtest.h>

#include <random>

#include "occlqg/ipm_solver.hpp"
#include "occlqg/riccati.hpp"
#include "occlqg/sdp_builder.hpp"
#include "support/cases.hpp"
#include "support/random_problem.hpp"

using namespace occlqg;

namespace {

ConicSolution solve_ok(const ConicProgram& prog) {
  ConicSolution sol = solve_conic(prog);
  EXPECT_EQ(sol.status, SolveStatus::kOptimal) << prog.name;
  return sol;
}

double primal_value(const DiscountedLQGProblem& p) {
  return solve_ok(build_primal(p)).primal_obj;
}

/// The dual program minimizes the negated value.
double dual_value(const DiscountedLQGProblem& p) {
  return -solve_ok(build_dual(p)).primal_obj;
}

double relative(double a, double b) { return std::abs(a - b) / (1.0 + std::abs(b)); }

/// Random problem with one bound halfway between its least attainable value
/// and its value at the unconstrained optimum: strictly feasible and active.
DiscountedLQGProblem random_bounded_problem(std::mt19937_64& rng) {
  DiscountedLQGProblem p = fixtures::random_problem(rng);
  MomentBound b;
  b.cost.Q = fixtures::random_psd(rng, p.state_dim(), 0.1);
  b.cost.R = fixtures::random_psd(rng, p.input_dim(), 0.1);
  const OccupationMoments free = oracle::closed_loop_moments(p, oracle::solve_unconstrained(p).K);
  DiscountedLQGProblem least = p;
  least.cost = b.cost;
  b.beta = 0.5 * (moment_cost(b.cost, free) + oracle::solve_unconstrained(least).cost);
  p.moment_bounds.push_back(b);
  return p;
}

}  // namespace

TEST(BuildPrimal, TwoStateCounts) {
  const ConicProgram prog = build_primal(fixtures::two_state_problem());
  EXPECT_EQ(prog.psd_dim, 4);
  // 1 + 2 + 3 balance equations plus the bound row.
  EXPECT_EQ(prog.equalities.size(), 6u + 1u);
  EXPECT_EQ(prog.num_nonneg, 1);
  EXPECT_NO_THROW(prog.check());
}

TEST(BuildPrimal, HelicopterCounts) {
  const ConicProgram prog = build_primal(fixtures::helicopter_problem());
  EXPECT_EQ(prog.psd_dim, 13);
  EXPECT_EQ(prog.equalities.size(), 1u + 8u + 36u + 1u);
  EXPECT_EQ(prog.num_nonneg, 1);
}

TEST(BuildPrimal, RejectsDimensionMismatch) {
  DiscountedLQGProblem p = fixtures::two_state_problem();
  p.system.B = Matrix::Zero(3, 1);
  EXPECT_THROW(build_primal(p), DimensionError);
  EXPECT_THROW(build_dual(p), DimensionError);
}

TEST(BuildPrimal, MassIsFixedByDiscount) {
  const ConicProgram prog = build_primal(fixtures::two_state_problem());
  const ConicSolution sol = solve_ok(prog);
  const OccupationMoments mom = extract_moments(prog.metadata, sol);
  EXPECT_NEAR(mom.m, 100.0, 1e-6);
  EXPECT_GE(min_eigenvalue(mom.assemble()), -1e-7);
}

TEST(BuildPrimal, ScalarOptimum) {
  const ConicProgram prog = build_primal(fixtures::scalar_problem());
  const ConicSolution sol = solve_ok(prog);
  EXPECT_NEAR(sol.primal_obj, fixtures::kScalarCost, 1e-7);
  EXPECT_NEAR(sol.primal_obj, 11.25822, 5e-6);
  const OccupationMoments mom = extract_moments(prog.metadata, sol);
  EXPECT_NEAR(mom.m, 10.0, 1e-8);
  EXPECT_NEAR(mom.Z_xx(0, 0), fixtures::kScalarZxx, 1e-6);
  EXPECT_NEAR(mom.Z_xx(0, 0), 10.5877, 1e-4);
}

TEST(BuildDual, ScalarValueFunction) {
  const ConicProgram prog = build_dual(fixtures::scalar_problem());
  const ConicSolution sol = solve_ok(prog);
  EXPECT_NEAR(-sol.primal_obj, fixtures::kScalarCost, 1e-7);
  const ValueSolution v = extract_value(prog.metadata, sol);
  EXPECT_NEAR(v.value.P(0, 0), fixtures::kScalarP, 1e-8);
  EXPECT_NEAR(v.value.P(0, 0), 1.125822, 5e-7);
  EXPECT_NEAR(v.value.q(0), 0.0, 1e-8);
  EXPECT_NEAR(v.value.r, 9.0 * fixtures::kScalarP, 1e-7);
  EXPECT_NEAR(v.value.r, 10.1324, 5e-5);
  EXPECT_EQ(v.gamma.size(), 0);
}

TEST(BuildDual, ConstantTermMatchesNoiseCost) {
  std::mt19937_64 rng(5);
  for (int k = 0; k < 5; ++k) {
    DiscountedLQGProblem p = fixtures::random_problem(rng);
    p.init.m0.setZero();
    const ConicProgram prog = build_dual(p);
    const ValueSolution v = extract_value(prog.metadata, solve_ok(prog));
    const double expected = p.alpha / (1.0 - p.alpha) * (v.value.P * p.system.W).trace();
    EXPECT_NEAR(v.value.r, expected, 1e-6 * (1.0 + std::abs(expected)));
    EXPECT_LE(v.value.q.norm(), 1e-7);
  }
}

TEST(BuildDual, NoiselessValueIsTraceOfP) {
  std::mt19937_64 rng(6);
  DiscountedLQGProblem p = fixtures::random_problem(rng);
  p.system.W.setZero();
  p.init.m0.setZero();
  p.init.Sigma0 = Matrix::Identity(p.state_dim(), p.state_dim());
  const ConicProgram prog = build_dual(p);
  const ConicSolution sol = solve_ok(prog);
  const ValueSolution v = extract_value(prog.metadata, sol);
  EXPECT_NEAR(-sol.primal_obj, v.value.P.trace(), 1e-7 * (1.0 + v.value.P.trace()));
}

TEST(ExtractValue, ExpectedValueEqualsDualObjectivePlusMultiplierTerm) {
  const DiscountedLQGProblem p = fixtures::two_state_problem();
  const ConicProgram prog = build_dual(p);
  const ConicSolution sol = solve_ok(prog);
  const ValueSolution v = extract_value(prog.metadata, sol);
  ASSERT_EQ(v.gamma.size(), 1);
  const double expected = -sol.primal_obj + v.gamma(0) * p.moment_bounds[0].beta;
  EXPECT_NEAR(expected_initial_value(v.value, p.init), expected, 1e-7 * (1.0 + std::abs(expected)));
}

TEST(ExtractValue, PrimalMultipliersMatchDualSolve) {
  const DiscountedLQGProblem p = fixtures::two_state_problem();
  const ConicProgram primal = build_primal(p), dual = build_dual(p);
  const ValueSolution a = extract_value(primal.metadata, solve_ok(primal));
  const ValueSolution b = extract_value(dual.metadata, solve_ok(dual));
  EXPECT_LE((a.value.P - b.value.P).cwiseAbs().maxCoeff(), 1e-6 * (1.0 + b.value.P.norm()));
  EXPECT_LE((a.value.q - b.value.q).norm(), 1e-6 * (1.0 + b.value.q.norm()));
  EXPECT_NEAR(a.value.r, b.value.r, 1e-6 * (1.0 + std::abs(b.value.r)));
  EXPECT_NEAR(a.gamma(0), b.gamma(0), 1e-6 * (1.0 + b.gamma(0)));
}

TEST(ExtractValue, InactiveBoundHasZeroMultiplier) {
  const DiscountedLQGProblem p = fixtures::two_state_problem(1e6);
  const ConicProgram prog = build_dual(p);
  const ValueSolution v = extract_value(prog.metadata, solve_ok(prog));
  EXPECT_NEAR(v.gamma(0), 0.0, 1e-8);
}

TEST(ExtractValue, ActiveBoundHasPositiveMultiplier) {
  const DiscountedLQGProblem p = fixtures::two_state_problem(15.0);
  const ConicProgram prog = build_dual(p);
  const ValueSolution v = extract_value(prog.metadata, solve_ok(prog));
  EXPECT_GT(v.gamma(0), 1e-6);
}

TEST(ExtractMoments, RejectsNonOptimalSolution) {
  const ConicProgram prog = build_primal(fixtures::scalar_problem());
  SolverOptions opts;
  opts.max_iter = 1;
  const ConicSolution sol = solve_conic(prog, opts);
  ASSERT_NE(sol.status, SolveStatus::kOptimal);
  EXPECT_THROW(extract_moments(prog.metadata, sol), std::runtime_error);
  EXPECT_THROW(extract_value(prog.metadata, sol), std::runtime_error);
}

TEST(OccupationMoments, AssembleRoundTrip) {
  std::mt19937_64 rng(8);
  const Matrix Z = fixtures::random_psd(rng, 6, 0.1);
  const OccupationMoments mom = OccupationMoments::from_matrix(Z, 3, 2);
  EXPECT_EQ(mom.m, Z(0, 0));
  EXPECT_TRUE(mom.assemble() == Z);
}

TEST(MomentCost, IsTraceForm) {
  OccupationMoments mom = OccupationMoments::from_matrix(Matrix::Identity(4, 4), 2, 1);
  mom.Z_xx(0, 0) = 3.0;
  QuadraticStageCost c;
  c.Q = Matrix::Identity(2, 2);
  c.R = 2.0 * Matrix::Identity(1, 1);
  EXPECT_DOUBLE_EQ(moment_cost(c, mom), 3.0 + 1.0 + 2.0);
}

TEST(Properties, StrongDuality) {
  std::mt19937_64 rng(11);
  std::vector<DiscountedLQGProblem> problems = {fixtures::scalar_problem(),
                                                fixtures::two_state_problem(),
                                                fixtures::helicopter_problem()};
  for (int k = 0; k < 10; ++k) problems.push_back(fixtures::random_problem(rng));
  for (int k = 0; k < 10; ++k) problems.push_back(random_bounded_problem(rng));
  for (const auto& p : problems) {
    const double primal = primal_value(p), dual = dual_value(p);
    EXPECT_LE(relative(dual, primal), 1e-6) << primal << " vs " << dual;
  }
}

TEST(Properties, MassAtEveryOptimum) {
  std::mt19937_64 rng(12);
  for (int k = 0; k < 10; ++k) {
    const DiscountedLQGProblem p = random_bounded_problem(rng);
    const ConicProgram prog = build_primal(p);
    const OccupationMoments mom = extract_moments(prog.metadata, solve_ok(prog));
    EXPECT_NEAR(mom.m, 1.0 / (1.0 - p.alpha), 1e-7 / (1.0 - p.alpha));
  }
}

TEST(Properties, ClosedLoopMomentsAreFeasible) {
  std::mt19937_64 rng(13);
  fixtures::RandomProblemOptions opt;
  opt.max_state_dim = 3;
  for (int k = 0; k < 30; ++k) {
    const DiscountedLQGProblem p = fixtures::random_problem(rng, opt);
    const Matrix K = fixtures::random_stabilizing_gain(rng, p);
    const MomentFeasibility f = moment_feasibility(p, oracle::closed_loop_moments(p, K));
    EXPECT_LE(f.max_equality(), 1e-8);
    EXPECT_GE(f.min_eig_Z, -1e-8);
  }
}

TEST(Properties, TighterBoundNeverLowersCost) {
  double previous = -1.0;
  for (double beta : {1e6, 40.0, 30.0, 25.0, 20.0, 17.5, 15.0, 12.0}) {
    const double cost = primal_value(fixtures::two_state_problem(beta));
    EXPECT_GE(cost, previous - 1e-7 * (1.0 + previous)) << "beta " << beta;
    previous = cost;
  }
}

TEST(BellmanLmi, PsdAtDualOptimum) {
  const DiscountedLQGProblem p = fixtures::two_state_problem();
  const ConicProgram prog = build_dual(p);
  const ValueSolution v = extract_value(prog.metadata, solve_ok(prog));
  const Matrix L = bellman_lmi(p, v.value, v.gamma);
  EXPECT_EQ(L.rows(), 4);
  EXPECT_GE(min_eigenvalue(L), -1e-7 * (1.0 + L.norm()));
}
