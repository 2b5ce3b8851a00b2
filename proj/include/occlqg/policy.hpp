#pragma once

#include <string>
#include <utility>
#include <vector>

#include "occlqg/problem.hpp"
#include "occlqg/sdp_builder.hpp"

namespace occlqg {

/// u ~ N(K x + k, cov). Deterministic when cov == 0.
struct AffineGaussianPolicy {
  Matrix K;
  Vector k;
  Matrix cov;
  /// Set when Z_xx was rank deficient and a pseudo-inverse was used.
  std::string warning;

  bool deterministic(double tol = 0.0) const;
  static AffineGaussianPolicy linear(const Matrix& K);
};

/// Conditional law of u given x under the normalized occupation measure:
/// K = Z_xu^T pinv(Z_xx), k = m_u - K m_x,
/// cov = (Z_uu - Z_xu^T pinv(Z_xx) Z_xu) / m, eigenvalues floored at 0.
///
/// The formulas are the Gaussian-conditioning ones. Under a linear policy the
/// normalized occupation measure is a discounted mixture of Gaussians rather
/// than a single Gaussian, but the conditional mean and covariance are exact
/// for the second-order moments it has.
AffineGaussianPolicy gain_from_moments(const OccupationMoments& mom, double rank_tol = 1e-10);

/// ||Z S||_F / (1 + ||Z||_F ||S||_F) with S the Bellman LMI of (v, gamma).
double complementarity_residual(const OccupationMoments& mom, const QuadraticValueFunction& v,
                                const DiscountedLQGProblem& p, const Vector& gamma = Vector());

/// min over samples of c(x,u) - v(x) + alpha E[v(A x + B u + w)], where c
/// includes gamma-weighted bound costs. Nonnegative at a dual-feasible v.
double bellman_gap(const QuadraticValueFunction& v, const DiscountedLQGProblem& p,
                   const std::vector<std::pair<Vector, Vector>>& samples,
                   const Vector& gamma = Vector());

}  // namespace occlqg
