#pragma once

#include <algorithm>
#include <random>

#include "occlqg/problem.hpp"
#include "occlqg/riccati.hpp"

namespace occlqg::fixtures {

inline Matrix gaussian_matrix(std::mt19937_64& rng, int rows, int cols) {
  std::normal_distribution<double> normal;
  Matrix M(rows, cols);
  for (int j = 0; j < cols; ++j) {
    for (int i = 0; i < rows; ++i) M(i, j) = normal(rng);
  }
  return M;
}

inline Matrix random_psd(std::mt19937_64& rng, int dim, double floor) {
  const Matrix L = gaussian_matrix(rng, dim, dim);
  return L * L.transpose() / dim + floor * Matrix::Identity(dim, dim);
}

struct RandomProblemOptions {
  int max_state_dim = 4;
  int max_input_dim = 2;
  double min_alpha = 0.8;
  double max_alpha = 0.99;
};

/// Random problem passing every validation check: A rescaled to a spectral
/// radius in [0.5, 1.2], positive definite W, Sigma0, Q0 and R0.
inline DiscountedLQGProblem random_problem(std::mt19937_64& rng,
                                           const RandomProblemOptions& opt = {}) {
  std::uniform_real_distribution<double> unit;
  for (;;) {
    const int n = std::uniform_int_distribution<int>(1, opt.max_state_dim)(rng);
    const int p = std::uniform_int_distribution<int>(1, std::min(n, opt.max_input_dim))(rng);
    DiscountedLQGProblem prob;
    Matrix A = gaussian_matrix(rng, n, n);
    const double rho = oracle::spectral_radius(A);
    if (rho < 1e-6) continue;
    A *= (0.5 + 0.7 * unit(rng)) / rho;
    prob.system.A = A;
    prob.system.B = gaussian_matrix(rng, n, p);
    prob.system.W = random_psd(rng, n, 0.01);
    prob.init.m0 = gaussian_matrix(rng, n, 1);
    prob.init.Sigma0 = random_psd(rng, n, 0.01);
    prob.cost.Q = random_psd(rng, n, 0.1);
    prob.cost.R = random_psd(rng, p, 0.1);
    prob.alpha = opt.min_alpha + (opt.max_alpha - opt.min_alpha) * unit(rng);
    if (validate_problem(prob).all_passed()) return prob;
  }
}

/// A gain with sqrt(alpha) * rho(A + B K) < 1, found by rejection. The
/// margin is half the one of the optimal gain.
inline Matrix random_stabilizing_gain(std::mt19937_64& rng, const DiscountedLQGProblem& p) {
  const Matrix K_opt = oracle::solve_unconstrained(p).K;
  const double root = std::sqrt(p.alpha);
  const double rho_opt = root * oracle::spectral_radius(p.system.A + p.system.B * K_opt);
  const double limit = std::max(0.98, 0.5 * (1.0 + rho_opt));
  for (double spread = 1.0;; spread *= 0.7) {
    const Matrix K = K_opt + spread * gaussian_matrix(rng, p.input_dim(), p.state_dim());
    if (root * oracle::spectral_radius(p.system.A + p.system.B * K) < limit) return K;
  }
}

}  // namespace occlqg::fixtures
