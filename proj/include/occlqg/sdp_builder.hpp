#pragma once

#include <vector>

#include "occlqg/problem.hpp"
#include "occlqg/symcone.hpp"

namespace occlqg {

/// Moments up to order two of the discounted occupation measure.
struct OccupationMoments {
  double m = 0.0;
  Vector m_x;
  Vector m_u;
  Matrix Z_xx;
  Matrix Z_xu;
  Matrix Z_uu;

  /// [[m, m_x^T, m_u^T], [m_x, Z_xx, Z_xu], [m_u, Z_xu^T, Z_uu]]
  Matrix assemble() const;
  static OccupationMoments from_matrix(const Matrix& Z, int state_dim, int input_dim);
};

/// v(x) = x^T P x + q^T x + r
struct QuadraticValueFunction {
  Matrix P;
  Vector q;
  double r = 0.0;

  double operator()(const Vector& x) const { return x.dot(P * x) + q.dot(x) + r; }
};

struct ValueSolution {
  QuadraticValueFunction value;
  /// One multiplier per moment bound, >= 0.
  Vector gamma;
};

/// Occupation-moment program: minimize Tr(Q0 Z_xx) + Tr(R0 Z_uu) over the
/// moment matrix subject to the mass, mean and second-moment balance
/// equations, plus one slack per moment bound.
///
/// Equality multipliers map one-to-one onto the value function: the mass row
/// carries r, the mean rows carry q, the second-moment rows carry P (upper
/// triangle, symmetric basis), and bound rows carry -gamma.
ConicProgram build_primal(const DiscountedLQGProblem& p);

/// Riccati-LMI program in (P, q, r, gamma), written in standard form with the
/// LMI matrix as the PSD variable and gamma as nonnegative slacks. It
/// minimizes the negated expected value, so the value-function optimum is
/// -(primal objective).
ConicProgram build_dual(const DiscountedLQGProblem& p);

/// Reads the moment blocks of a kOccupationMoments solve. Throws
/// std::runtime_error unless the status is kOptimal.
OccupationMoments extract_moments(const ProgramMetadata& meta, const ConicSolution& sol);

/// Value function and multipliers from either program kind: equality
/// multipliers of a kOccupationMoments solve, or the LMI variable of a
/// kValueFunction solve. Throws std::runtime_error unless kOptimal.
ValueSolution extract_value(const ProgramMetadata& meta, const ConicSolution& sol);

/// The Bellman LMI [[s0, s1^T, s2^T], [s1, S11, S12], [s2, S12^T, S22]] for
/// given (P, q, r) and bound multipliers.
Matrix bellman_lmi(const DiscountedLQGProblem& p, const QuadraticValueFunction& v,
                   const Vector& gamma);

/// Tr(P Sigma0) + m0^T P m0 + q^T m0 + r
double expected_initial_value(const QuadraticValueFunction& v, const InitialDistribution& init);

/// Residuals of the moment equations, each relative to (1 + largest moment
/// entry), and the smallest eigenvalue of the moment matrix.
struct MomentFeasibility {
  double mass = 0.0;
  double mean = 0.0;
  double second = 0.0;
  double min_eig_Z = 0.0;

  double max_equality() const;
};

MomentFeasibility moment_feasibility(const DiscountedLQGProblem& p, const OccupationMoments& mom);

/// Tr(Q0 Z_xx) + Tr(R0 Z_uu) for an arbitrary stage cost.
double moment_cost(const QuadraticStageCost& c, const OccupationMoments& mom);

}  // namespace occlqg
