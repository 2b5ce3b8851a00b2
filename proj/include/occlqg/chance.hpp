#pragma once

#include "occlqg/policy.hpp"
#include "occlqg/problem.hpp"

namespace occlqg {

/// Standard normal CDF.
double normal_cdf(double x);
/// Inverse of erf on (-1, 1), by safeguarded Newton iteration on erf.
double erf_inv(double y);

/// Throws std::invalid_argument unless h > 0, eps > 0 and g != 0.
void check_chance_spec(const ChanceSpec& spec);

/// Q1 = g g^T, R1 = 0, beta1 = eps h^2: by Markov's inequality,
/// g^T Z_xx g <= beta1 implies a discounted chance mass of at most eps.
MomentBound markov_bound(const ChanceSpec& spec, int input_dim);

/// Q1 = g g^T, beta1 = h^2 / (2 erf_inv(1 - eps/m)^2), m = 1/(1 - alpha).
/// Throws std::invalid_argument when eps >= m.
MomentBound gaussian_bound(const ChanceSpec& spec, double alpha, int input_dim);

/// Translates one spec according to its mode.
MomentBound to_moment_bound(const ChanceSpec& spec, double alpha, int input_dim);

/// Copy of p with every chance spec appended as a moment bound and the
/// chance list cleared.
DiscountedLQGProblem with_chance_bounds(const DiscountedLQGProblem& p);

struct ChanceMass {
  double mass = 0.0;
  /// Upper bound on the omitted tail sum_{t > horizon} alpha^t.
  double truncation_bound = 0.0;
  int horizon = 0;
};

/// Exact per-step Gaussian marginals of the closed loop under `policy`,
/// summed as sum_t alpha^t Pr(|g^T x_t| >= h) up to the first horizon whose
/// tail bound alpha^{T+1}/(1-alpha) is <= tail_tol. Throws oracle::OracleError
/// when the closed loop is not discounted-stable.
ChanceMass analytic_chance_mass(const DiscountedLQGProblem& p, const AffineGaussianPolicy& policy,
                                const Vector& g, double h, double tail_tol = 1e-9);

}  // namespace occlqg
