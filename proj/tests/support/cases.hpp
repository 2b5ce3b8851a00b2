#pragma once

#include <cmath>
#include <numbers>
#include <random>

#include "occlqg/problem.hpp"
#include "occlqg/riccati.hpp"

namespace occlqg::fixtures {

/// x' = 0.5 x + u + w, q = r = w = Sigma0 = 1, m0 = 0, alpha = 0.9.
inline DiscountedLQGProblem scalar_problem() {
  DiscountedLQGProblem p;
  p.system.A = Matrix::Constant(1, 1, 0.5);
  p.system.B = Matrix::Constant(1, 1, 1.0);
  p.system.W = Matrix::Constant(1, 1, 1.0);
  p.init.m0 = Vector::Zero(1);
  p.init.Sigma0 = Matrix::Constant(1, 1, 1.0);
  p.cost.Q = Matrix::Constant(1, 1, 1.0);
  p.cost.R = Matrix::Constant(1, 1, 1.0);
  p.alpha = 0.9;
  return p;
}

/// Closed forms for scalar_problem: P solves 0.9 P^2 - 0.125 P - 1 = 0.
inline const double kScalarP = (0.125 + std::sqrt(3.615625)) / 1.8;
inline const double kScalarK = -0.9 * kScalarP * 0.5 / (1.0 + 0.9 * kScalarP);
inline const double kScalarZxx = 10.0 / (1.0 - 0.9 * (0.5 + kScalarK) * (0.5 + kScalarK));
inline const double kScalarCost = 10.0 * kScalarP;

/// Two-state double integrator with the second-state bound Tr(diag(0,1) Z_xx) <= beta.
inline DiscountedLQGProblem two_state_problem(double beta = 15.0) {
  DiscountedLQGProblem p;
  p.system.A = (Matrix(2, 2) << 1.0, 0.1, 0.0, 1.0).finished();
  p.system.B = (Matrix(2, 1) << 0.0, 0.1).finished();
  p.system.W = 0.1 * Matrix::Identity(2, 2);
  p.init.m0 = (Vector(2) << -0.46, 0.58).finished();
  p.init.Sigma0 = Matrix::Identity(2, 2) - p.init.m0 * p.init.m0.transpose();
  p.cost.Q = Matrix::Identity(2, 2);
  p.cost.R = Matrix::Identity(1, 1);
  p.alpha = 0.99;
  MomentBound b;
  b.cost.Q = (Matrix(2, 2) << 0.0, 0.0, 0.0, 1.0).finished();
  b.cost.R = Matrix::Zero(1, 1);
  b.beta = beta;
  p.moment_bounds.push_back(b);
  return p;
}

inline DiscountedLQGProblem strip_constraints(DiscountedLQGProblem p) {
  p.moment_bounds.clear();
  p.chance_specs.clear();
  return p;
}

/// Unconstrained two-state problem with one Markov chance spec: random unit
/// direction g, eps in [0.5, 5] and h^2 = f g^T Z_xx g / eps with f in
/// [0.8, 1.2], Z_xx taken at the unconstrained optimum.
inline DiscountedLQGProblem random_two_state_chance(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit;
  DiscountedLQGProblem p = strip_constraints(two_state_problem());
  const double angle = std::numbers::pi * unit(rng);
  ChanceSpec spec;
  spec.g = (Vector(2) << std::cos(angle), std::sin(angle)).finished();
  spec.eps = 0.5 + 4.5 * unit(rng);
  const Matrix Z = oracle::closed_loop_moments(p, oracle::solve_unconstrained(p).K).Z_xx;
  const double f = 0.8 + 0.4 * unit(rng);
  spec.h = std::sqrt(f * spec.g.dot(Z * spec.g) / spec.eps);
  spec.mode = ChanceMode::kMarkov;
  p.chance_specs.push_back(spec);
  return p;
}

/// Euler-discretized helicopter model, t_s = 0.1, input energy bound 50.
inline DiscountedLQGProblem helicopter_problem() {
  const double ts = 0.1;
  Matrix Ac = Matrix::Zero(8, 8);
  Ac.topRightCorner(4, 4) = Matrix::Identity(4, 4);
  Ac.bottomRightCorner(4, 4) = Vector((Vector(4) << -0.5, -0.5, 0.0, -5.0).finished()).asDiagonal();
  Matrix Bc = Matrix::Zero(8, 4);
  Bc.bottomRows(4) = Vector((Vector(4) << 2.0, 2.1, 11.0, 18.0).finished()).asDiagonal();
  DiscountedLQGProblem p;
  p.system.A = Matrix::Identity(8, 8) + ts * Ac;
  p.system.B = ts * Bc;
  p.system.W = Matrix::Zero(8, 8);
  p.system.W.bottomRightCorner(4, 4) = 0.1 * Matrix::Identity(4, 4);
  p.init.m0 = Vector::Zero(8);
  p.init.Sigma0 = Matrix::Identity(8, 8);
  p.cost.Q = Matrix::Identity(8, 8);
  p.cost.R = Matrix::Zero(4, 4);
  p.alpha = 0.99;
  MomentBound b;
  b.cost.Q = Matrix::Zero(8, 8);
  b.cost.R = Matrix::Identity(4, 4);
  b.beta = 50.0;
  p.moment_bounds.push_back(b);
  return p;
}

}  // namespace occlqg::fixtures
