#include "occlqg/chance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "occlqg/mc_sim.hpp"
#include "occlqg/riccati.hpp"

namespace occlqg {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double erf_inv(double y) {
  if (!(y > -1.0 && y < 1.0)) {
    if (y == 1.0) return std::numeric_limits<double>::infinity();
    if (y == -1.0) return -std::numeric_limits<double>::infinity();
    throw std::domain_error("erf_inv: argument outside [-1, 1]");
  }
  if (y == 0.0) return 0.0;
  const double sign = y < 0.0 ? -1.0 : 1.0;
  const double target = std::abs(y);
  // erf(6) rounds to 1 in double precision, so the root lies in [0, 6].
  double lo = 0.0, hi = 6.0;
  double x = std::sqrt(-std::log((1.0 - target) * (1.0 + target)));  // rough start
  if (!(x > lo && x < hi)) x = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double f = std::erf(x) - target;
    if (f > 0.0) hi = x; else lo = x;
    const double deriv = 2.0 / std::sqrt(std::numbers::pi) * std::exp(-x * x);
    double next = x - f / deriv;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 1e-15 * std::max(1.0, x)) {
      x = next;
      break;
    }
    x = next;
  }
  return sign * x;
}

void check_chance_spec(const ChanceSpec& spec) {
  if (!(spec.h > 0.0)) throw std::invalid_argument("chance spec: h must be positive");
  if (!(spec.eps > 0.0)) throw std::invalid_argument("chance spec: eps must be positive");
  if (spec.g.size() == 0 || spec.g.isZero(0.0)) {
    throw std::invalid_argument("chance spec: g must be nonzero");
  }
}

MomentBound markov_bound(const ChanceSpec& spec, int input_dim) {
  check_chance_spec(spec);
  MomentBound b;
  b.cost.Q = spec.g * spec.g.transpose();
  b.cost.R = Matrix::Zero(input_dim, input_dim);
  b.beta = spec.eps * spec.h * spec.h;
  return b;
}

MomentBound gaussian_bound(const ChanceSpec& spec, double alpha, int input_dim) {
  check_chance_spec(spec);
  const double m = 1.0 / (1.0 - alpha);
  if (!(spec.eps < m)) {
    throw std::invalid_argument("gaussian chance bound: eps must be below 1/(1-alpha)");
  }
  const double root = erf_inv(1.0 - spec.eps / m);
  MomentBound b;
  b.cost.Q = spec.g * spec.g.transpose();
  b.cost.R = Matrix::Zero(input_dim, input_dim);
  b.beta = spec.h * spec.h / (2.0 * root * root);
  return b;
}

MomentBound to_moment_bound(const ChanceSpec& spec, double alpha, int input_dim) {
  return spec.mode == ChanceMode::kMarkov ? markov_bound(spec, input_dim)
                                          : gaussian_bound(spec, alpha, input_dim);
}

DiscountedLQGProblem with_chance_bounds(const DiscountedLQGProblem& p) {
  DiscountedLQGProblem out = p;
  out.chance_specs.clear();
  for (const auto& spec : p.chance_specs) {
    out.moment_bounds.push_back(to_moment_bound(spec, p.alpha, p.input_dim()));
  }
  return out;
}

ChanceMass analytic_chance_mass(const DiscountedLQGProblem& p, const AffineGaussianPolicy& policy,
                                const Vector& g, double h, double tail_tol) {
  check_dimensions(p);
  const auto& sys = p.system;
  const Matrix Acl = sys.A + sys.B * policy.K;
  const double rho = std::sqrt(p.alpha) * oracle::spectral_radius(Acl);
  if (!(rho < 1.0)) {
    throw oracle::OracleError("analytic_chance_mass: closed loop is not discounted-stable");
  }
  const Vector drift = sys.B * policy.k;
  const Matrix input_noise = policy.cov.size() ? Matrix(sys.B * policy.cov * sys.B.transpose())
                                               : Matrix::Zero(sys.A.rows(), sys.A.rows());
  ChanceMass out;
  out.horizon = truncation_horizon(p.alpha, tail_tol);
  out.truncation_bound = std::pow(p.alpha, out.horizon + 1) / (1.0 - p.alpha);
  Vector mean = p.init.m0;
  Matrix cov = p.init.Sigma0;
  double weight = 1.0;
  for (int t = 0; t <= out.horizon; ++t) {
    const double mu = g.dot(mean);
    const double var = std::max(0.0, g.dot(cov * g));
    double prob;
    if (var == 0.0) {
      prob = std::abs(mu) >= h ? 1.0 : 0.0;
    } else {
      const double sd = std::sqrt(var);
      prob = normal_cdf((-h - mu) / sd) + normal_cdf((mu - h) / sd);
    }
    out.mass += weight * prob;
    weight *= p.alpha;
    mean = Acl * mean + drift;
    cov = Acl * cov * Acl.transpose() + input_noise + sys.W;
    cov = 0.5 * (cov + cov.transpose());
  }
  return out;
}

}  // namespace occlqg
