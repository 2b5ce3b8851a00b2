#include "occlqg/riccati.hpp"

#include <cmath>
#include <sstream>

namespace occlqg::oracle {

namespace {

Matrix kron(const Matrix& X, const Matrix& Y) {
  Matrix out(X.rows() * Y.rows(), X.cols() * Y.cols());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
      out.block(i * Y.rows(), j * Y.cols(), Y.rows(), Y.cols()) = X(i, j) * Y;
    }
  }
  return out;
}

Eigen::FullPivLU<Matrix> inner_factor(const Matrix& P, const Matrix& B, const Matrix& R,
                                      double alpha) {
  Eigen::FullPivLU<Matrix> lu(R + alpha * B.transpose() * P * B);
  if (!lu.isInvertible()) {
    throw OracleError("R + alpha B^T P B is singular");
  }
  return lu;
}

}  // namespace

DareResult solve_dare(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R,
                      double alpha, double tol, int max_iter) {
  DareResult res;
  res.P = 0.5 * (Q + Q.transpose());
  for (int k = 0; k < max_iter; ++k) {
    const Matrix& P = res.P;
    const auto lu = inner_factor(P, B, R, alpha);
    const Matrix BtPA = B.transpose() * P * A;
    Matrix next = Q + alpha * A.transpose() * P * A -
                  alpha * alpha * BtPA.transpose() * lu.solve(BtPA);
    next = 0.5 * (next + next.transpose());
    res.step_residual = (next - P).norm() / (1.0 + P.norm());
    res.P = std::move(next);
    res.iterations = k + 1;
    if (!res.P.allFinite() || res.P.norm() > 1e15) {
      res.converged = false;
      return res;
    }
    if (res.step_residual <= tol) {
      res.converged = true;
      return res;
    }
  }
  return res;
}

Matrix gain_from_value(const Matrix& P, const Matrix& A, const Matrix& B, const Matrix& R,
                       double alpha) {
  const auto lu = inner_factor(P, B, R, alpha);
  return -lu.solve(alpha * B.transpose() * P * A);
}

double dare_residual(const Matrix& P, const Matrix& A, const Matrix& B, const Matrix& Q,
                     const Matrix& R, double alpha, RiccatiForm form) {
  const auto lu = inner_factor(P, B, R, alpha);
  const Matrix BtPA = alpha * B.transpose() * P * A;
  const Matrix quad = BtPA.transpose() * lu.solve(BtPA);
  const double sign = form == RiccatiForm::kStandard ? -1.0 : 1.0;
  return (-P + Q + alpha * A.transpose() * P * A + sign * quad).norm();
}

double spectral_radius(const Matrix& M) {
  if (M.size() == 0) return 0.0;
  Eigen::EigenSolver<Matrix> es(M, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

Matrix lyapunov_solve(const Matrix& M, const Matrix& rhs, double alpha) {
  if (M.rows() != M.cols() || rhs.rows() != M.rows() || rhs.cols() != M.cols()) {
    throw DimensionError("lyapunov_solve: shape mismatch");
  }
  const double rho = std::sqrt(alpha) * spectral_radius(M);
  if (!(rho < 1.0)) {
    std::ostringstream os;
    os << "lyapunov_solve: sqrt(alpha) * spectral radius = " << rho << " >= 1";
    throw OracleError(os.str());
  }
  const Eigen::Index n = M.rows();
  const Matrix lhs = Matrix::Identity(n * n, n * n) - alpha * kron(M, M);
  const Vector sym_rhs = Eigen::Map<const Vector>(Matrix(0.5 * (rhs + rhs.transpose())).data(), n * n);
  const Vector z = lhs.partialPivLu().solve(sym_rhs);
  Matrix Z = Eigen::Map<const Matrix>(z.data(), n, n);
  return 0.5 * (Z + Z.transpose());
}

OccupationMoments closed_loop_moments(const DiscountedLQGProblem& p, const Matrix& K) {
  check_dimensions(p);
  const int n = p.state_dim();
  if (K.rows() != p.input_dim() || K.cols() != n) {
    throw DimensionError("closed_loop_moments: gain has wrong shape");
  }
  const Matrix Acl = p.system.A + p.system.B * K;
  const double rho = std::sqrt(p.alpha) * spectral_radius(Acl);
  if (!(rho < 1.0)) {
    std::ostringstream os;
    os << "closed loop is not discounted-stable (sqrt(alpha) * rho = " << rho << ")";
    throw OracleError(os.str());
  }
  OccupationMoments mom;
  mom.m = p.total_mass();
  mom.m_x = (Matrix::Identity(n, n) - p.alpha * Acl).partialPivLu().solve(p.init.m0);
  mom.m_u = K * mom.m_x;
  mom.Z_xx = lyapunov_solve(Acl, p.init.second_moment() + p.alpha * mom.m * p.system.W, p.alpha);
  mom.Z_xu = mom.Z_xx * K.transpose();
  mom.Z_uu = K * mom.Z_xx * K.transpose();
  mom.Z_uu = 0.5 * (mom.Z_uu + mom.Z_uu.transpose());
  return mom;
}

double optimal_cost(const Matrix& P, const Vector& q, double r, const InitialDistribution& init) {
  return (P.cwiseProduct(init.Sigma0)).sum() + init.m0.dot(P * init.m0) + q.dot(init.m0) + r;
}

LqgSolution solve_unconstrained(const DiscountedLQGProblem& p, double tol, int max_iter) {
  check_dimensions(p);
  const auto& sys = p.system;
  LqgSolution out;
  out.dare = solve_dare(sys.A, sys.B, p.cost.Q, p.cost.R, p.alpha, tol, max_iter);
  if (!out.dare.converged) {
    std::ostringstream os;
    os << "Riccati iteration did not converge after " << out.dare.iterations
       << " iterations (step residual " << out.dare.step_residual << ")";
    throw OracleError(os.str());
  }
  out.K = gain_from_value(out.dare.P, sys.A, sys.B, p.cost.R, p.alpha);
  out.value.P = out.dare.P;
  out.value.q = Vector::Zero(p.state_dim());
  out.value.r = p.alpha / (1.0 - p.alpha) * (out.dare.P.cwiseProduct(sys.W)).sum();
  out.cost = optimal_cost(out.value.P, out.value.q, out.value.r, p.init);
  return out;
}

}  // namespace occlqg::oracle
