#include "occlqg/sdp_builder.hpp"

#include <stdexcept>
#include <string>

namespace occlqg {

namespace {

Matrix block_diag_cost(int n, int p, const Matrix& Q, const Matrix& R) {
  Matrix M = Matrix::Zero(1 + n + p, 1 + n + p);
  M.block(1, 1, n, n) = 0.5 * (Q + Q.transpose());
  M.block(1 + n, 1 + n, p, p) = 0.5 * (R + R.transpose());
  return M;
}

/// Symmetric basis element for the (k, l) coordinate of P: e_k e_k^T on the
/// diagonal, e_k e_l^T + e_l e_k^T off it.
Matrix p_basis(int n, int k, int l) {
  Matrix E = Matrix::Zero(n, n);
  E(k, l) = 1.0;
  E(l, k) = 1.0;
  return E;
}

/// Linear part of the Bellman LMI for a value function basis element, i.e.
/// the matrix L(v) with <L(v), Z> = alpha * E[v(x')] - v(x) integrated
/// against the moments.
Matrix lmi_of_value(const DiscountedLQGProblem& pr, const Matrix& P, const Vector& q, double r) {
  const auto& A = pr.system.A;
  const auto& B = pr.system.B;
  const auto& W = pr.system.W;
  const double a = pr.alpha;
  const int n = pr.state_dim(), p = pr.input_dim();
  Matrix L = Matrix::Zero(1 + n + p, 1 + n + p);
  L(0, 0) = r * (a - 1.0) + a * (P.cwiseProduct(W)).sum();
  const Vector s1 = 0.5 * (-q + a * A.transpose() * q);
  const Vector s2 = 0.5 * a * B.transpose() * q;
  L.block(1, 0, n, 1) = s1;
  L.block(0, 1, 1, n) = s1.transpose();
  L.block(1 + n, 0, p, 1) = s2;
  L.block(0, 1 + n, 1, p) = s2.transpose();
  L.block(1, 1, n, n) = a * A.transpose() * P * A - P;
  L.block(1, 1 + n, n, p) = a * A.transpose() * P * B;
  L.block(1 + n, 1, p, n) = L.block(1, 1 + n, n, p).transpose();
  L.block(1 + n, 1 + n, p, p) = a * B.transpose() * P * B;
  return 0.5 * (L + L.transpose());
}

struct ValueCoordinate {
  std::string label;
  Matrix P;
  Vector q;
  double r = 0.0;
};

/// Coordinates (r, q_0..q_{n-1}, P_kl for k <= l) in the order used by both
/// programs.
std::vector<ValueCoordinate> value_coordinates(int n) {
  std::vector<ValueCoordinate> out;
  out.push_back({"C0", Matrix::Zero(n, n), Vector::Zero(n), 1.0});
  for (int k = 0; k < n; ++k) {
    Vector q = Vector::Zero(n);
    q(k) = 1.0;
    out.push_back({"C1[" + std::to_string(k) + "]", Matrix::Zero(n, n), q, 0.0});
  }
  for (int k = 0; k < n; ++k) {
    for (int l = k; l < n; ++l) {
      out.push_back({"C2[" + std::to_string(k) + "," + std::to_string(l) + "]",
                     p_basis(n, k, l), Vector::Zero(n), 0.0});
    }
  }
  return out;
}

QuadraticValueFunction value_from_coordinates(int n, const Vector& coords) {
  QuadraticValueFunction v;
  v.r = coords(0);
  v.q = coords.segment(1, n);
  v.P = Matrix::Zero(n, n);
  Eigen::Index idx = 1 + n;
  for (int k = 0; k < n; ++k) {
    for (int l = k; l < n; ++l) {
      v.P(k, l) = coords(idx);
      v.P(l, k) = coords(idx);
      ++idx;
    }
  }
  return v;
}

void fill_moment_blocks(ProgramMetadata& meta, int n, int p) {
  meta.blocks["m"] = {0, 0, 1, 1, -1};
  meta.blocks["m_x"] = {1, 0, n, 1, -1};
  meta.blocks["m_u"] = {1 + n, 0, p, 1, -1};
  meta.blocks["Z_xx"] = {1, 1, n, n, -1};
  meta.blocks["Z_xu"] = {1, 1 + n, n, p, -1};
  meta.blocks["Z_uu"] = {1 + n, 1 + n, p, p, -1};
}

void require_optimal(const ConicSolution& sol, const char* what) {
  if (sol.status != SolveStatus::kOptimal) {
    throw std::runtime_error(std::string(what) + ": solver status is " + to_string(sol.status));
  }
}

}  // namespace

Matrix OccupationMoments::assemble() const {
  const auto n = m_x.size(), p = m_u.size();
  Matrix Z(1 + n + p, 1 + n + p);
  Z(0, 0) = m;
  Z.block(1, 0, n, 1) = m_x;
  Z.block(0, 1, 1, n) = m_x.transpose();
  Z.block(1 + n, 0, p, 1) = m_u;
  Z.block(0, 1 + n, 1, p) = m_u.transpose();
  Z.block(1, 1, n, n) = Z_xx;
  Z.block(1, 1 + n, n, p) = Z_xu;
  Z.block(1 + n, 1, p, n) = Z_xu.transpose();
  Z.block(1 + n, 1 + n, p, p) = Z_uu;
  return Z;
}

OccupationMoments OccupationMoments::from_matrix(const Matrix& Z, int n, int p) {
  if (Z.rows() != 1 + n + p || Z.cols() != 1 + n + p) {
    throw DimensionError("moment matrix has wrong size");
  }
  const Matrix S = 0.5 * (Z + Z.transpose());
  OccupationMoments mom;
  mom.m = S(0, 0);
  mom.m_x = S.block(1, 0, n, 1);
  mom.m_u = S.block(1 + n, 0, p, 1);
  mom.Z_xx = S.block(1, 1, n, n);
  mom.Z_xu = S.block(1, 1 + n, n, p);
  mom.Z_uu = S.block(1 + n, 1 + n, p, p);
  return mom;
}

ConicProgram build_primal(const DiscountedLQGProblem& pr) {
  check_dimensions(pr);
  const int n = pr.state_dim(), p = pr.input_dim();
  const int d = 1 + n + p;
  const int nb = static_cast<int>(pr.moment_bounds.size());
  const Matrix second = pr.init.second_moment();

  ConicProgram prog;
  prog.name = "occupation_moments";
  prog.psd_dim = d;
  prog.num_nonneg = nb;
  prog.C = SymmetricMatrix::from_dense(block_diag_cost(n, p, pr.cost.Q, pr.cost.R));
  prog.c_lin = Vector::Zero(nb);

  for (const auto& coord : value_coordinates(n)) {
    LinearEquality e;
    e.label = coord.label;
    e.A = SymmetricMatrix::from_dense(-lmi_of_value(pr, coord.P, coord.q, coord.r));
    e.a = Vector::Zero(nb);
    // <v, nu0> for the basis element
    e.b = (coord.P.cwiseProduct(second)).sum() + coord.q.dot(pr.init.m0) + coord.r;
    prog.equalities.push_back(std::move(e));
  }
  for (int i = 0; i < nb; ++i) {
    const auto& bound = pr.moment_bounds[static_cast<std::size_t>(i)];
    LinearEquality e;
    e.label = "bound[" + std::to_string(i) + "]";
    e.A = SymmetricMatrix::from_dense(block_diag_cost(n, p, bound.cost.Q, bound.cost.R));
    e.a = Vector::Unit(nb, i);
    e.b = bound.beta;
    prog.equalities.push_back(std::move(e));
  }

  auto& meta = prog.metadata;
  meta.kind = ProgramKind::kOccupationMoments;
  meta.state_dim = n;
  meta.input_dim = p;
  meta.num_bounds = nb;
  fill_moment_blocks(meta, n, p);
  for (int i = 0; i < nb; ++i) {
    meta.blocks["slack:bound[" + std::to_string(i) + "]"] = {0, 0, 0, 0, i};
  }
  return prog;
}

ConicProgram build_dual(const DiscountedLQGProblem& pr) {
  check_dimensions(pr);
  const int n = pr.state_dim(), p = pr.input_dim();
  const int d = 1 + n + p;
  const int nb = static_cast<int>(pr.moment_bounds.size());
  const int len = svec_length(d);
  const Matrix second = pr.init.second_moment();

  // S(y, gamma) = F0 + F y + G gamma, in svec coordinates.
  const auto coords = value_coordinates(n);
  const auto nf = static_cast<Eigen::Index>(coords.size());
  Matrix F(len, nf);
  Vector objective(nf);  // expected initial value per coordinate
  for (Eigen::Index j = 0; j < nf; ++j) {
    const auto& c = coords[static_cast<std::size_t>(j)];
    F.col(j) = svec(lmi_of_value(pr, c.P, c.q, c.r));
    objective(j) = (c.P.cwiseProduct(second)).sum() + c.q.dot(pr.init.m0) + c.r;
  }
  Matrix G(len, nb);
  Vector beta(nb);
  for (int i = 0; i < nb; ++i) {
    const auto& bound = pr.moment_bounds[static_cast<std::size_t>(i)];
    G.col(i) = svec(block_diag_cost(n, p, bound.cost.Q, bound.cost.R));
    beta(i) = bound.beta;
  }
  const Vector f0 = svec(block_diag_cost(n, p, pr.cost.Q, pr.cost.R));

  Eigen::HouseholderQR<Matrix> qr(F);
  const Matrix Q = qr.householderQ() * Matrix::Identity(len, len);
  const Matrix R = qr.matrixQR().topRows(nf).triangularView<Eigen::Upper>();
  const Vector rdiag = R.diagonal().cwiseAbs();
  if (rdiag.minCoeff() <= 1e-12 * rdiag.maxCoeff()) {
    throw std::runtime_error(
        "build_dual: value-function coordinates are linearly dependent in the LMI "
        "(alpha * A has a pair of eigenvalues with product 1)");
  }
  const Matrix Q1 = Q.leftCols(nf);
  const Matrix N = Q.rightCols(len - nf);
  // Left inverse of F: R^{-1} Q1^T.
  const Matrix recovery = R.triangularView<Eigen::Upper>().solve(Q1.transpose());

  ConicProgram prog;
  prog.name = "value_function";
  prog.psd_dim = d;
  prog.num_nonneg = nb;
  // maximize objective . y - beta . gamma, with y = recovery (x - f0 - G gamma)
  const Vector obj_dir = recovery.transpose() * objective;
  prog.C = smat(Vector(-obj_dir));
  prog.c_lin = nb > 0 ? Vector(G.transpose() * obj_dir + beta) : Vector::Zero(0);
  prog.objective_offset = obj_dir.dot(f0);
  const Vector rhs = N.transpose() * f0;
  const Matrix NG = N.transpose() * G;
  for (Eigen::Index k = 0; k < N.cols(); ++k) {
    LinearEquality e;
    e.label = "lmi_structure[" + std::to_string(k) + "]";
    e.A = smat(Vector(N.col(k)));
    e.a = nb > 0 ? Vector(-NG.row(k).transpose()) : Vector::Zero(0);
    e.b = rhs(k);
    prog.equalities.push_back(std::move(e));
  }

  auto& meta = prog.metadata;
  meta.kind = ProgramKind::kValueFunction;
  meta.state_dim = n;
  meta.input_dim = p;
  meta.num_bounds = nb;
  meta.blocks["s0"] = {0, 0, 1, 1, -1};
  meta.blocks["s1"] = {1, 0, n, 1, -1};
  meta.blocks["s2"] = {1 + n, 0, p, 1, -1};
  meta.blocks["S11"] = {1, 1, n, n, -1};
  meta.blocks["S12"] = {1, 1 + n, n, p, -1};
  meta.blocks["S22"] = {1 + n, 1 + n, p, p, -1};
  for (int i = 0; i < nb; ++i) {
    meta.blocks["gamma[" + std::to_string(i) + "]"] = {0, 0, 0, 0, i};
  }
  meta.recovery = recovery;
  meta.lmi_offset = f0;
  meta.bound_directions = G;
  return prog;
}

OccupationMoments extract_moments(const ProgramMetadata& meta, const ConicSolution& sol) {
  require_optimal(sol, "extract_moments");
  if (meta.kind != ProgramKind::kOccupationMoments) {
    throw std::invalid_argument("extract_moments: program does not carry moments");
  }
  auto block = [&](const char* name) {
    const auto& loc = meta.blocks.at(name);
    return Matrix(0.5 * (sol.X.block(loc.row, loc.col, loc.rows, loc.cols) +
                         sol.X.block(loc.col, loc.row, loc.cols, loc.rows).transpose()));
  };
  OccupationMoments mom;
  mom.m = block("m")(0, 0);
  mom.m_x = block("m_x");
  mom.m_u = block("m_u");
  mom.Z_xx = block("Z_xx");
  mom.Z_xu = block("Z_xu");
  mom.Z_uu = block("Z_uu");
  return mom;
}

ValueSolution extract_value(const ProgramMetadata& meta, const ConicSolution& sol) {
  require_optimal(sol, "extract_value");
  const int n = meta.state_dim;
  const int nf = 1 + n + n * (n + 1) / 2;
  ValueSolution out;
  switch (meta.kind) {
    case ProgramKind::kOccupationMoments:
      out.value = value_from_coordinates(n, sol.y.head(nf));
      out.gamma = sol.dual_slacks_lin;
      break;
    case ProgramKind::kValueFunction: {
      Vector x = svec(sol.X) - meta.lmi_offset;
      if (meta.num_bounds > 0) x -= meta.bound_directions * sol.slacks;
      out.value = value_from_coordinates(n, meta.recovery * x);
      out.gamma = sol.slacks;
      break;
    }
    default:
      throw std::invalid_argument("extract_value: program does not carry a value function");
  }
  return out;
}

Matrix bellman_lmi(const DiscountedLQGProblem& pr, const QuadraticValueFunction& v,
                   const Vector& gamma) {
  const int n = pr.state_dim(), p = pr.input_dim();
  Matrix Q = pr.cost.Q, R = pr.cost.R;
  for (Eigen::Index i = 0; i < gamma.size(); ++i) {
    const auto& bound = pr.moment_bounds.at(static_cast<std::size_t>(i));
    Q += gamma(i) * bound.cost.Q;
    R += gamma(i) * bound.cost.R;
  }
  return block_diag_cost(n, p, Q, R) + lmi_of_value(pr, v.P, v.q, v.r);
}

double expected_initial_value(const QuadraticValueFunction& v, const InitialDistribution& init) {
  return (v.P.cwiseProduct(init.Sigma0)).sum() + init.m0.dot(v.P * init.m0) +
         v.q.dot(init.m0) + v.r;
}

double MomentFeasibility::max_equality() const { return std::max({mass, mean, second}); }

MomentFeasibility moment_feasibility(const DiscountedLQGProblem& pr, const OccupationMoments& mom) {
  const auto& A = pr.system.A;
  const auto& B = pr.system.B;
  const double a = pr.alpha;
  const Matrix Z = mom.assemble();
  const double scale = 1.0 + Z.cwiseAbs().maxCoeff();
  MomentFeasibility f;
  f.mass = std::abs(a * mom.m - mom.m + 1.0) / scale;
  f.mean = (pr.init.m0 - mom.m_x + a * (A * mom.m_x + B * mom.m_u)).cwiseAbs().maxCoeff() / scale;
  const Matrix c2 = pr.init.second_moment() - mom.Z_xx +
                    a * (A * mom.Z_xx * A.transpose() + A * mom.Z_xu * B.transpose() +
                         B * mom.Z_xu.transpose() * A.transpose() +
                         B * mom.Z_uu * B.transpose() + mom.m * pr.system.W);
  f.second = c2.cwiseAbs().maxCoeff() / scale;
  f.min_eig_Z = min_eigenvalue(Z);
  return f;
}

double moment_cost(const QuadraticStageCost& c, const OccupationMoments& mom) {
  return (c.Q.cwiseProduct(mom.Z_xx)).sum() + (c.R.cwiseProduct(mom.Z_uu)).sum();
}

}  // namespace occlqg
