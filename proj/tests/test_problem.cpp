#include <gtest/gtest.h>

#include "occlqg/problem.hpp"
#include "support/cases.hpp"

using namespace occlqg;

namespace {

DiscountedLQGProblem unit_input_two_state() {
  DiscountedLQGProblem p = fixtures::strip_constraints(fixtures::two_state_problem());
  p.system.B = (Matrix(2, 1) << 0.0, 1.0).finished();
  return p;
}

}  // namespace

TEST(ValidateProblem, TwoStateSystemPassesAllChecks) {
  const ValidationReport r = validate_problem(unit_input_two_state());
  EXPECT_TRUE(r.all_passed());
  ASSERT_NE(r.find("controllable"), nullptr);
  EXPECT_EQ(r.find("controllable")->value, 2.0);
  EXPECT_EQ(r.find("observable")->value, 2.0);
}

TEST(ValidateProblem, ZeroInputMapFailsControllabilityWithRankZero) {
  DiscountedLQGProblem p = fixtures::scalar_problem();
  p.system.A.setZero();
  p.system.B.setZero();
  const ValidationReport r = validate_problem(p);
  const ValidationCheck* c = r.find("controllable");
  ASSERT_NE(c, nullptr);
  EXPECT_FALSE(c->passed);
  EXPECT_EQ(c->value, 0.0);
  EXPECT_FALSE(r.all_passed());
}

TEST(ValidateProblem, ZeroInputWeightFailsDefinitenessWithEigenvalueZero) {
  DiscountedLQGProblem p = unit_input_two_state();
  p.cost.R.setZero();
  const ValidationCheck* c = validate_problem(p).find("R0_pd");
  ASSERT_NE(c, nullptr);
  EXPECT_FALSE(c->passed);
  EXPECT_EQ(c->value, 0.0);
}

TEST(ValidateProblem, DiscountOutsideUnitIntervalFails) {
  DiscountedLQGProblem p = fixtures::scalar_problem();
  for (double a : {0.0, 1.0, -0.5, 1.5}) {
    p.alpha = a;
    EXPECT_FALSE(validate_problem(p).find("alpha_in_unit_interval")->passed) << a;
  }
}

TEST(ValidateProblem, NegativeBetaFails) {
  DiscountedLQGProblem p = fixtures::two_state_problem(-1.0);
  EXPECT_FALSE(validate_problem(p).find("bound_0_beta_nonnegative")->passed);
}

TEST(ValidateProblem, IsPure) {
  const DiscountedLQGProblem p = fixtures::two_state_problem();
  const ValidationReport a = validate_problem(p), b = validate_problem(p);
  ASSERT_EQ(a.checks.size(), b.checks.size());
  for (std::size_t i = 0; i < a.checks.size(); ++i) {
    EXPECT_EQ(a.checks[i].name, b.checks[i].name);
    EXPECT_EQ(a.checks[i].passed, b.checks[i].passed);
    EXPECT_EQ(a.checks[i].value, b.checks[i].value);
  }
}

TEST(CheckDimensions, ShapeMismatchThrows) {
  DiscountedLQGProblem p = fixtures::two_state_problem();
  p.system.B = Matrix::Zero(3, 1);
  EXPECT_THROW(check_dimensions(p), DimensionError);
  EXPECT_THROW(validate_problem(p), DimensionError);

  p = fixtures::two_state_problem();
  p.moment_bounds[0].cost.R = Matrix::Zero(2, 2);
  EXPECT_THROW(check_dimensions(p), DimensionError);

  p = fixtures::two_state_problem();
  p.chance_specs.push_back({Vector::Ones(3), 1.0, 0.1, ChanceMode::kMarkov});
  EXPECT_THROW(check_dimensions(p), DimensionError);
}

TEST(SymmetricFactor, IdentityReconstructs) {
  const Matrix C = symmetric_factor(Matrix::Identity(2, 2));
  EXPECT_EQ(C.rows(), 2);
  EXPECT_LE((C.transpose() * C - Matrix::Identity(2, 2)).norm(), 1e-14);
}

TEST(SymmetricFactor, RankOneDiagonalGivesSingleRow) {
  const Matrix Q = (Matrix(2, 2) << 0.0, 0.0, 0.0, 1.0).finished();
  const Matrix C = symmetric_factor(Q);
  ASSERT_EQ(C.rows(), 1);
  ASSERT_EQ(C.cols(), 2);
  EXPECT_NEAR(std::abs(C(0, 1)), 1.0, 1e-14);
  EXPECT_NEAR(C(0, 0), 0.0, 1e-14);
}

TEST(SymmetricFactor, ReconstructsAgainstEigendecomposition) {
  const Matrix Q = (Matrix(2, 2) << 2.0, 1.0, 1.0, 2.0).finished();
  const Matrix C = symmetric_factor(Q);
  EXPECT_LE((C.transpose() * C - Q).norm(), 1e-13);
  Eigen::SelfAdjointEigenSolver<Matrix> es(Q);
  const Matrix oracle =
      es.eigenvalues().cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
  EXPECT_LE((C.transpose() * C - oracle.transpose() * oracle).norm(), 1e-13);
}

TEST(SymmetricFactor, IndefiniteThrows) {
  const Matrix Q = (Matrix(2, 2) << 1.0, 0.0, 0.0, -1.0).finished();
  EXPECT_THROW(symmetric_factor(Q), std::invalid_argument);
}

TEST(Controllability, MatrixLayout) {
  const Matrix A = (Matrix(2, 2) << 1.0, 0.1, 0.0, 1.0).finished();
  const Matrix B = (Matrix(2, 1) << 0.0, 1.0).finished();
  const Matrix M = controllability_matrix(A, B);
  ASSERT_EQ(M.cols(), 2);
  EXPECT_LE((M.col(0) - B).norm(), 0.0);
  EXPECT_LE((M.col(1) - A * B).norm(), 0.0);
  EXPECT_EQ(numerical_rank(M), 2);
}

TEST(Observability, MatrixLayout) {
  const Matrix A = (Matrix(2, 2) << 1.0, 0.1, 0.0, 1.0).finished();
  const Matrix C = (Matrix(1, 2) << 0.0, 1.0).finished();
  const Matrix O = observability_matrix(A, C);
  ASSERT_EQ(O.rows(), 2);
  // The second state does not see the first.
  EXPECT_EQ(numerical_rank(O), 1);
}

TEST(InitialDistribution, SecondMoment) {
  const DiscountedLQGProblem p = fixtures::two_state_problem();
  EXPECT_LE((p.init.second_moment() - Matrix::Identity(2, 2)).norm(), 1e-15);
}
