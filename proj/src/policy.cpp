#include "occlqg/policy.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

namespace occlqg {

bool AffineGaussianPolicy::deterministic(double tol) const {
  return cov.size() == 0 || cov.cwiseAbs().maxCoeff() <= tol;
}

AffineGaussianPolicy AffineGaussianPolicy::linear(const Matrix& K) {
  AffineGaussianPolicy pol;
  pol.K = K;
  pol.k = Vector::Zero(K.rows());
  pol.cov = Matrix::Zero(K.rows(), K.rows());
  return pol;
}

AffineGaussianPolicy gain_from_moments(const OccupationMoments& mom, double rank_tol) {
  const auto n = mom.Z_xx.rows();
  const auto p = mom.Z_uu.rows();
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (mom.Z_xx + mom.Z_xx.transpose()));
  const Vector& lam = es.eigenvalues();
  const double lam_max = n > 0 ? std::max(0.0, lam.maxCoeff()) : 0.0;
  const double cutoff = rank_tol * lam_max;
  Vector inv = Vector::Zero(n);
  int rank = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (lam(i) > cutoff && lam(i) > 0.0) {
      inv(i) = 1.0 / lam(i);
      ++rank;
    }
  }
  const Matrix pinv = es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();

  AffineGaussianPolicy pol;
  pol.K = mom.Z_xu.transpose() * pinv;
  pol.k = mom.m_u - pol.K * mom.m_x;
  Matrix cov = mom.Z_uu - mom.Z_xu.transpose() * pinv * mom.Z_xu;
  cov = 0.5 * (cov + cov.transpose());
  if (mom.m > 0.0) cov /= mom.m;
  Eigen::SelfAdjointEigenSolver<Matrix> cs(cov);
  const Vector floored = cs.eigenvalues().cwiseMax(0.0);
  pol.cov = p > 0 ? Matrix(cs.eigenvectors() * floored.asDiagonal() * cs.eigenvectors().transpose())
                  : Matrix(0, 0);
  if (rank < n) {
    std::ostringstream os;
    os << "Z_xx has numerical rank " << rank << " of " << n << "; gain uses the pseudo-inverse";
    pol.warning = os.str();
  }
  return pol;
}

double complementarity_residual(const OccupationMoments& mom, const QuadraticValueFunction& v,
                                const DiscountedLQGProblem& p, const Vector& gamma) {
  const Matrix Z = mom.assemble();
  const Matrix S = bellman_lmi(p, v, gamma);
  return (Z * S).norm() / (1.0 + Z.norm() * S.norm());
}

double bellman_gap(const QuadraticValueFunction& v, const DiscountedLQGProblem& p,
                   const std::vector<std::pair<Vector, Vector>>& samples, const Vector& gamma) {
  QuadraticStageCost c = p.cost;
  for (Eigen::Index i = 0; i < gamma.size(); ++i) {
    const auto& bound = p.moment_bounds.at(static_cast<std::size_t>(i));
    c.Q += gamma(i) * bound.cost.Q;
    c.R += gamma(i) * bound.cost.R;
  }
  const double noise_term = (v.P.cwiseProduct(p.system.W)).sum();
  double best = std::numeric_limits<double>::infinity();
  for (const auto& [x, u] : samples) {
    const Vector mean_next = p.system.A * x + p.system.B * u;
    const double expected_next = v(mean_next) + noise_term;
    best = std::min(best, c(x, u) - v(x) + p.alpha * expected_next);
  }
  return best;
}

}  // namespace occlqg
