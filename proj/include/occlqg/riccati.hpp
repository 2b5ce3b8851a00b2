#pragma once

#include <stdexcept>

#include "occlqg/problem.hpp"
#include "occlqg/sdp_builder.hpp"

namespace occlqg {

/// Ground truth for the SDP pipeline, computed without any conic code.
namespace oracle {

class OracleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DareResult {
  Matrix P;
  int iterations = 0;
  /// ||P_{k+1} - P_k||_F / (1 + ||P_k||_F) at the last step.
  double step_residual = 0.0;
  bool converged = false;
};

/// Value iteration P <- Q + a A^T P A - a^2 A^T P B (R + a B^T P B)^{-1} B^T P A
/// from P = Q. Returns the last iterate with converged = false when max_iter
/// runs out or the iterates blow up; throws OracleError when R + a B^T P B is
/// singular.
DareResult solve_dare(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R,
                      double alpha, double tol = 1e-12, int max_iter = 100000);

/// K = -(R + a B^T P B)^{-1} a B^T P A, for the policy u = K x.
Matrix gain_from_value(const Matrix& P, const Matrix& A, const Matrix& B, const Matrix& R,
                       double alpha);

/// The quadratic term enters with a minus sign (kStandard). kFlippedSign uses
/// a plus sign, which no optimal value function satisfies.
enum class RiccatiForm { kStandard, kFlippedSign };

/// ||-P + Q + a A^T P A -/+ a^2 A^T P B (R + a B^T P B)^{-1} B^T P A||_F
double dare_residual(const Matrix& P, const Matrix& A, const Matrix& B, const Matrix& Q,
                     const Matrix& R, double alpha,
                     RiccatiForm form = RiccatiForm::kStandard);

/// Spectral radius of M.
double spectral_radius(const Matrix& M);

/// Z with Z = RHS + a M Z M^T, by a Kronecker-product linear solve. Throws
/// OracleError unless sqrt(a) * rho(M) < 1.
Matrix lyapunov_solve(const Matrix& M, const Matrix& rhs, double alpha);

/// Exact occupation moments of the closed loop u = K x. Throws OracleError
/// when A + B K is not stable in the sqrt(alpha)-discounted sense.
OccupationMoments closed_loop_moments(const DiscountedLQGProblem& p, const Matrix& K);

/// Tr(P Sigma0) + m0^T P m0 + q^T m0 + r
double optimal_cost(const Matrix& P, const Vector& q, double r, const InitialDistribution& init);

/// Value function of the unconstrained optimum: P from the DARE, q = 0 and
/// r = a / (1 - a) Tr(P W).
struct LqgSolution {
  DareResult dare;
  Matrix K;
  QuadraticValueFunction value;
  double cost = 0.0;
};

LqgSolution solve_unconstrained(const DiscountedLQGProblem& p, double tol = 1e-12,
                                int max_iter = 100000);

}  // namespace oracle
}  // namespace occlqg
