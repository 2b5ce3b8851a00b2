#include "occlqg/ipm_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>

namespace occlqg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kPolishPatience = 4;
// Guarded runs take equal primal and dual steps that cut mu by at least this
// fraction, and count as crawling after kShortStepLimit steps below kShortStep.
constexpr double kGuardDecrease = 2e-3;
constexpr double kShortStep = 0.05;
constexpr int kShortStepLimit = 3;
constexpr int kMaxEnlargements = 4;
constexpr double kEnlargement = 10.0;
// Floor on the sizes that normalize the scale-free residuals.
constexpr double kRelativeFloor = 1e-3;
constexpr int kRefineSteps = 3;
// Cone violation tolerated in a refined point, relative to 1 + trace.
constexpr double kRefineConeSlack = 1e-12;

/// Program data in svec coordinates with each equality row scaled to unit
/// norm and the objective (C, c_lin) scaled to unit norm. The iterates are
/// those of the scaled program: X and slacks are unchanged, while
/// y_original = y_scaled * objective_scale / row_scale and S, z and the
/// objectives carry a factor objective_scale.
struct ScaledData {
  int d = 0;
  Eigen::Index m = 0;
  Eigen::Index s = 0;
  Matrix A;       // m x svec_length(d)
  Matrix A_lin;   // m x s
  Vector b;
  Vector row_scale;
  Vector c;       // svec(C)
  Vector c_lin;
  double offset = 0.0;
  double objective_scale = 1.0;
  double c_norm = 0.0;
  double c_lin_norm = 0.0;
};

ScaledData scale_program(const ConicProgram& prog) {
  ScaledData data;
  data.d = prog.psd_dim;
  data.m = static_cast<Eigen::Index>(prog.equalities.size());
  data.s = prog.num_nonneg;
  const int len = svec_length(data.d);
  data.A.resize(data.m, len);
  data.A_lin.resize(data.m, data.s);
  data.b.resize(data.m);
  data.row_scale.resize(data.m);
  for (Eigen::Index i = 0; i < data.m; ++i) {
    const auto& e = prog.equalities[static_cast<std::size_t>(i)];
    Vector row = svec(e.A);
    double norm = std::sqrt(row.squaredNorm() + e.a.squaredNorm());
    if (norm == 0.0) norm = 1.0;
    data.row_scale(i) = norm;
    data.A.row(i) = row.transpose() / norm;
    if (data.s > 0) data.A_lin.row(i) = e.a.transpose() / norm;
    data.b(i) = e.b / norm;
  }
  data.c = svec(prog.C);
  data.c_lin = prog.c_lin;
  data.c_norm = data.c.norm();
  data.c_lin_norm = data.c_lin.norm();
  const double kappa = std::hypot(data.c_norm, data.c_lin_norm);
  if (kappa > 0.0) data.objective_scale = kappa;
  data.c /= data.objective_scale;
  data.c_lin /= data.objective_scale;
  data.offset = prog.objective_offset / data.objective_scale;
  return data;
}

Matrix symmetrize(const Matrix& M) { return 0.5 * (M + M.transpose()); }

Matrix adjoint(const ScaledData& data, const Vector& y) {
  return smat(data.A.transpose() * y).to_dense();
}

/// Largest t with X + t dX PSD, given the Cholesky factor L of X.
double max_psd_step(const Eigen::LLT<Matrix>& chol_X, const Matrix& dX) {
  const Matrix L = chol_X.matrixL();
  Matrix tmp = L.triangularView<Eigen::Lower>().solve(dX);
  tmp = L.triangularView<Eigen::Lower>().solve(tmp.transpose()).transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(tmp), Eigen::EigenvaluesOnly);
  const double lam_min = es.eigenvalues()(0);
  return lam_min >= 0.0 ? kInf : -1.0 / lam_min;
}

double max_orthant_step(const Vector& v, const Vector& dv) {
  double t = kInf;
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    if (dv(k) < 0.0) t = std::min(t, -v(k) / dv(k));
  }
  return t;
}

struct Iterate {
  Matrix X, S;
  Vector y, slacks, z;
};

struct Measures {
  /// Scale-free residuals: dual residuals relative to the objective norms and
  /// the gap relative to the objective values. Invariant under objective
  /// scaling, and no smaller than the original ones unless a normalizing size
  /// is below kRelativeFloor.
  Residuals res;
  /// The same measured on the original data, as program_residuals does.
  Residuals original;
  double primal_obj = 0.0;
  double dual_obj = 0.0;
  double mu = 0.0;
};

Measures measure(const ScaledData& data, const Iterate& it) {
  Measures out;
  const double kappa = data.objective_scale;
  const Vector x = svec(it.X);
  const Vector Ax = data.A * x + (data.s > 0 ? Vector(data.A_lin * it.slacks) : Vector::Zero(data.m));
  for (Eigen::Index i = 0; i < data.m; ++i) {
    const double b_orig = data.b(i) * data.row_scale(i);
    const double r = std::abs(Ax(i) - data.b(i)) * data.row_scale(i);
    out.res.primal_infeas = std::max(out.res.primal_infeas, r / (1.0 + std::abs(b_orig)));
  }
  out.original.primal_infeas = out.res.primal_infeas;
  const double rd = (smat(data.c).to_dense() - adjoint(data, it.y) - it.S).norm();
  out.res.dual_infeas = rd / std::max(data.c_norm / kappa, kRelativeFloor);
  out.original.dual_infeas = kappa * rd / (1.0 + data.c_norm);
  if (data.s > 0) {
    const double rdl = (data.c_lin - data.A_lin.transpose() * it.y - it.z).norm();
    out.res.dual_infeas =
        std::max(out.res.dual_infeas, rdl / std::max(data.c_lin_norm / kappa, kRelativeFloor));
    out.original.dual_infeas =
        std::max(out.original.dual_infeas, kappa * rdl / (1.0 + data.c_lin_norm));
  }
  out.primal_obj = data.c.dot(x) + data.c_lin.dot(it.slacks) + data.offset;
  out.dual_obj = data.b.dot(it.y) + data.offset;
  const double gap = std::abs(out.primal_obj - out.dual_obj);
  const double size = std::abs(out.primal_obj) + std::abs(out.dual_obj);
  out.res.duality_gap = gap / std::max(size, kRelativeFloor);
  out.original.duality_gap = kappa * gap / (1.0 + kappa * size);
  const double comp = (it.X.cwiseProduct(it.S)).sum() + it.slacks.dot(it.z);
  out.mu = comp / static_cast<double>(data.d + data.s);
  return out;
}

ConicSolution pack(const ScaledData& data, const Iterate& it, const Measures& meas,
                   SolveStatus status, int iterations, std::vector<double> mu_history) {
  const double kappa = data.objective_scale;
  ConicSolution sol;
  sol.X = it.X;
  sol.S = kappa * it.S;
  sol.y = kappa * it.y.cwiseQuotient(data.row_scale);
  sol.slacks = it.slacks;
  sol.dual_slacks_lin = kappa * it.z;
  sol.primal_obj = kappa * meas.primal_obj;
  sol.dual_obj = kappa * meas.dual_obj;
  sol.status = status;
  sol.iterations = iterations;
  for (double& mu : mu_history) mu *= kappa;
  sol.mu_history = std::move(mu_history);
  return sol;
}

/// Nesterov-Todd scaling point: W = G G^T with G^T S G = G^{-1} X G^{-T} = diag(lambda).
struct NtScaling {
  Matrix G;
  Matrix G_inv;
  Matrix W;
  Vector lambda;
};

std::optional<NtScaling> nt_scaling(const Eigen::LLT<Matrix>& chol_X,
                                    const Eigen::LLT<Matrix>& chol_S) {
  const Matrix L = chol_X.matrixL();
  const Matrix R = chol_S.matrixL();
  Eigen::JacobiSVD<Matrix> svd(R.transpose() * L, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vector& sv = svd.singularValues();
  if (sv.minCoeff() <= 0.0 || !sv.allFinite()) return std::nullopt;
  NtScaling nt;
  nt.lambda = sv;
  const Vector inv_sqrt = sv.cwiseSqrt().cwiseInverse();
  nt.G = L * svd.matrixV() * inv_sqrt.asDiagonal();
  // G^{-1} = D^{1/2} V^T L^{-1}
  const Matrix L_inv = L.triangularView<Eigen::Lower>().solve(
      Matrix::Identity(L.rows(), L.cols()));
  nt.G_inv = sv.cwiseSqrt().asDiagonal() * svd.matrixV().transpose() * L_inv;
  nt.W = symmetrize(nt.G * nt.G.transpose());
  return nt;
}

struct Direction {
  Matrix dX, dS;
  Vector dy, dslacks, dz;
};

class NewtonSystem {
 public:
  NewtonSystem(const ScaledData& data, const Iterate& it, const NtScaling& nt)
      : data_(data), it_(it), nt_(nt) {}

  bool factor() {
    const Eigen::Index m = data_.m;
    const int len = svec_length(data_.d);
    Matrix WAW(len, m);
    for (Eigen::Index j = 0; j < m; ++j) {
      const Matrix Aj = smat(data_.A.row(j).transpose()).to_dense();
      WAW.col(j) = svec(Matrix(nt_.W * Aj * nt_.W));
    }
    Matrix M = data_.A * WAW;
    if (data_.s > 0) {
      const Vector ratio = it_.slacks.cwiseQuotient(it_.z);
      M += data_.A_lin * ratio.asDiagonal() * data_.A_lin.transpose();
    }
    M = symmetrize(M);
    llt_.compute(M);
    use_lu_ = llt_.info() != Eigen::Success;
    if (use_lu_) {
      lu_.compute(M);
      if (!std::isfinite(lu_.rcond()) || lu_.rcond() < 1e-300) return false;
    }
    return true;
  }

  /// Solves the linearized system with scaled complementarity right-hand
  /// side Rc (d x d, in the lambda frame) and linear-cone right-hand side rc.
  Direction solve(const Vector& rp, const Matrix& Rd, const Vector& rdl,
                  const Matrix& Rc, const Vector& rc) const {
    const int d = data_.d;
    Matrix T(d, d);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) {
        T(i, j) = 2.0 * Rc(i, j) / (nt_.lambda(i) + nt_.lambda(j));
      }
    }
    const Matrix GTG = symmetrize(nt_.G * T * nt_.G.transpose());
    const Matrix WRW = symmetrize(nt_.W * Rd * nt_.W);
    Vector rhs = rp - data_.A * svec(Matrix(GTG - WRW));
    Vector ratio, rc_over_z;
    if (data_.s > 0) {
      ratio = it_.slacks.cwiseQuotient(it_.z);
      rc_over_z = rc.cwiseQuotient(it_.z);
      rhs -= data_.A_lin * (rc_over_z - ratio.cwiseProduct(rdl));
    }
    Direction dir;
    dir.dy = schur_solve(rhs);
    for (int pass = 0;; ++pass) {
      dir.dS = symmetrize(Rd - adjoint(data_, dir.dy));
      dir.dX = symmetrize(GTG - nt_.W * dir.dS * nt_.W);
      if (data_.s > 0) {
        dir.dz = rdl - data_.A_lin.transpose() * dir.dy;
        dir.dslacks = rc_over_z - ratio.cwiseProduct(dir.dz);
      } else {
        dir.dz = Vector::Zero(0);
        dir.dslacks = Vector::Zero(0);
      }
      if (pass == kRefinementPasses) break;
      // Refine against the unassembled operator to undo rounding in M.
      Vector r = rp - data_.A * svec(dir.dX);
      if (data_.s > 0) r -= data_.A_lin * dir.dslacks;
      dir.dy += schur_solve(r);
    }
    return dir;
  }

 private:
  static constexpr int kRefinementPasses = 2;

  Vector schur_solve(const Vector& rhs) const {
    return use_lu_ ? Vector(lu_.solve(rhs)) : Vector(llt_.solve(rhs));
  }

  const ScaledData& data_;
  const Iterate& it_;
  const NtScaling& nt_;
  Eigen::LLT<Matrix> llt_;
  Eigen::PartialPivLU<Matrix> lu_;
  bool use_lu_ = false;
};

struct StepLengths {
  double primal = 0.0;
  double dual = 0.0;
};

StepLengths step_lengths(const Iterate& it, const Eigen::LLT<Matrix>& chol_X,
                         const Eigen::LLT<Matrix>& chol_S, const Direction& dir,
                         double fraction) {
  const double tp = std::min(max_psd_step(chol_X, dir.dX), max_orthant_step(it.slacks, dir.dslacks));
  const double td = std::min(max_psd_step(chol_S, dir.dS), max_orthant_step(it.z, dir.dz));
  return {std::min(1.0, fraction * tp), std::min(1.0, fraction * td)};
}

/// Primal and dual multiples of the identity scaled so the initial residuals
/// and complementarity are of comparable size.
std::pair<double, double> scaled_start(const ScaledData& data) {
  const double root_d = std::sqrt(static_cast<double>(data.d));
  double xi = std::max(10.0, root_d);
  for (Eigen::Index k = 0; k < data.m; ++k) {
    xi = std::max(xi, data.d * (1.0 + std::abs(data.b(k))) / 2.0);
  }
  const double eta = std::max(10.0, root_d);
  return {xi, eta};
}

/// Largest t in (0, t_max] with mu(t) <= (1 - kGuardDecrease) mu along equal
/// primal and dual steps, where mu(t) = mu + a1 t + a2 t^2 exactly. Zero when
/// there is none.
double guarded_step(const Iterate& it, const Direction& dir, double mu, double n, double t_max) {
  double a1 = (it.X.cwiseProduct(dir.dS)).sum() + (dir.dX.cwiseProduct(it.S)).sum();
  double a2 = (dir.dX.cwiseProduct(dir.dS)).sum();
  if (it.slacks.size() > 0) {
    a1 += it.slacks.dot(dir.dz) + dir.dslacks.dot(it.z);
    a2 += dir.dslacks.dot(dir.dz);
  }
  a1 /= n;
  a2 /= n;
  const double g = kGuardDecrease * mu;
  auto admissible = [&](double t) { return t > 0.0 && t <= t_max && a2 * t * t + a1 * t + g <= 0.0; };
  if (admissible(t_max)) return t_max;
  if (a2 <= 0.0) return 0.0;
  const double disc = a1 * a1 - 4.0 * a2 * g;
  if (disc < 0.0) return 0.0;
  const double r1 = (-a1 - std::sqrt(disc)) / (2.0 * a2);
  const double r2 = (-a1 + std::sqrt(disc)) / (2.0 * a2);
  for (double t : {r2, 0.5 * (r1 + r2)}) {
    if (admissible(t)) return t;
  }
  return 0.0;
}

/// Residual of the optimality conditions with symmetrized complementarity.
double kkt_error(const ScaledData& data, const Iterate& it, const Measures& meas) {
  const Matrix XS = it.X * it.S;
  double comp = (XS + XS.transpose()).norm() / (1.0 + it.X.norm() * it.S.norm());
  if (data.s > 0) {
    comp = std::max(comp, it.slacks.cwiseProduct(it.z).norm() /
                              (1.0 + it.slacks.norm() * it.z.norm()));
  }
  return std::max(meas.res.max(), comp);
}

bool in_cones(const Iterate& it) {
  auto ok = [](double least, double size) { return least >= -kRefineConeSlack * (1.0 + size); };
  if (!ok(min_eigenvalue(it.X), it.X.trace()) || !ok(min_eigenvalue(it.S), it.S.trace())) {
    return false;
  }
  if (it.slacks.size() == 0) return true;
  return ok(it.slacks.minCoeff(), it.slacks.sum()) && ok(it.z.minCoeff(), it.z.sum());
}

/// Full Newton steps on A(X) = b, A^*(y) + S = C, XS + SX = 0 (and the
/// orthant analogues) from a converged iterate. Near a strictly
/// complementary nondegenerate solution the Jacobian is nonsingular and the
/// steps converge quadratically; a step is kept only if it lowers the KKT
/// error and stays in the cones.
void refine(const ScaledData& data, Iterate& it, Measures& meas) {
  const Eigen::Index len = svec_length(data.d);
  const Eigen::Index m = data.m, s = data.s;
  const Eigen::Index n = 2 * len + m + 2 * s;
  // Unknown layout: dx, dslacks, dy, ds, dz.
  const Eigen::Index ox = 0, osl = len, oy = len + s, os = len + s + m, oz = 2 * len + s + m;
  double err = kkt_error(data, it, meas);
  for (int step = 0; step < kRefineSteps; ++step) {
    Matrix J = Matrix::Zero(n, n);
    Vector rhs(n);
    Eigen::Index row = 0;
    J.block(row, ox, m, len) = data.A;
    if (s > 0) J.block(row, osl, m, s) = data.A_lin;
    rhs.segment(row, m) = data.b - data.A * svec(it.X) -
                          (s > 0 ? Vector(data.A_lin * it.slacks) : Vector::Zero(m));
    row += m;
    J.block(row, oy, len, m) = data.A.transpose();
    J.block(row, os, len, len) = Matrix::Identity(len, len);
    rhs.segment(row, len) = data.c - data.A.transpose() * it.y - svec(it.S);
    row += len;
    if (s > 0) {
      J.block(row, oy, s, m) = data.A_lin.transpose();
      J.block(row, oz, s, s) = Matrix::Identity(s, s);
      rhs.segment(row, s) = data.c_lin - data.A_lin.transpose() * it.y - it.z;
      row += s;
    }
    for (Eigen::Index k = 0; k < len; ++k) {
      const Matrix E = smat(Vector::Unit(len, k)).to_dense();
      J.block(row, ox + k, len, 1) = svec(E * it.S + it.S * E);
      J.block(row, os + k, len, 1) = svec(it.X * E + E * it.X);
    }
    rhs.segment(row, len) = -svec(it.X * it.S + it.S * it.X);
    row += len;
    if (s > 0) {
      J.block(row, osl, s, s) = it.z.asDiagonal();
      J.block(row, oz, s, s) = it.slacks.asDiagonal();
      rhs.segment(row, s) = -it.slacks.cwiseProduct(it.z);
    }
    const Vector delta = Eigen::PartialPivLU<Matrix>(J).solve(rhs);
    if (!delta.allFinite()) return;
    Iterate next = it;
    next.X = symmetrize(it.X + smat(delta.segment(ox, len)).to_dense());
    next.S = symmetrize(it.S + smat(delta.segment(os, len)).to_dense());
    next.y = it.y + delta.segment(oy, m);
    next.slacks = (it.slacks + delta.segment(osl, s)).cwiseMax(0.0);
    next.z = (it.z + delta.segment(oz, s)).cwiseMax(0.0);
    if (!in_cones(next)) return;
    const Measures next_meas = measure(data, next);
    const double next_err = kkt_error(data, next, next_meas);
    if (!(next_err < err)) return;
    it = std::move(next);
    meas = next_meas;
    err = next_err;
  }
}

enum class StepRule { kGuarded, kIndependent };

struct Run {
  ConicSolution sol;
  double residual = 0.0;
  /// Guarded run that stopped because the start was too small.
  bool crawled = false;
};

Run solve_from(const ScaledData& data, const SolverOptions& opts,
               double x0, double s0, StepRule rule) {
  const int d = data.d;
  const double n = static_cast<double>(d + data.s);
  bool crawled = false;
  bool reached = false;
  int short_steps = 0;

  Iterate it;
  it.X = x0 * Matrix::Identity(d, d);
  it.S = s0 * Matrix::Identity(d, d);
  it.y = Vector::Zero(data.m);
  it.slacks = Vector::Constant(data.s, x0);
  it.z = Vector::Constant(data.s, s0);

  Iterate best = it;
  Measures best_meas = measure(data, it);
  std::vector<double> mu_history;
  const double target = std::max(opts.tol_gap, opts.tol_feas);
  auto converged = [&](const Measures& m) {
    return std::max(m.res.primal_infeas, m.res.dual_infeas) <= opts.tol_feas &&
           std::max(m.original.dual_infeas, m.original.primal_infeas) <= opts.tol_feas &&
           std::max(m.res.duality_gap, m.original.duality_gap) <= opts.tol_gap;
  };

  SolveStatus status = SolveStatus::kMaxIter;
  int iter = 0;
  int stalled = 0;
  int since_best = 0;
  for (; iter < opts.max_iter; ++iter) {
    const Measures meas = measure(data, it);
    mu_history.push_back(meas.mu);
    const bool improved = meas.res.max() < best_meas.res.max() || iter == 0;
    if (improved) {
      best = it;
      best_meas = meas;
    }
    if (converged(meas)) {
      reached = true;
      if (!opts.polish) {
        best = it;
        best_meas = meas;
        status = SolveStatus::kOptimal;
        break;
      }
      if (improved) {
        since_best = 0;
      } else if (++since_best >= kPolishPatience) {
        break;
      }
    }
    const double norm = std::max({it.X.norm(), it.S.norm(), it.y.norm()});
    if (norm > 1e12) {
      status = SolveStatus::kInfeasibleSuspected;
      break;
    }

    Eigen::LLT<Matrix> chol_X(it.X), chol_S(it.S);
    if (chol_X.info() != Eigen::Success || chol_S.info() != Eigen::Success) {
      status = SolveStatus::kNumericalFailure;
      break;
    }
    const auto nt = nt_scaling(chol_X, chol_S);
    if (!nt) {
      status = SolveStatus::kNumericalFailure;
      break;
    }
    NewtonSystem newton(data, it, *nt);
    if (!newton.factor()) {
      status = SolveStatus::kNumericalFailure;
      break;
    }

    const Vector rp = data.b - data.A * svec(it.X) -
                      (data.s > 0 ? Vector(data.A_lin * it.slacks) : Vector::Zero(data.m));
    const Matrix Rd = symmetrize(smat(data.c).to_dense() - adjoint(data, it.y) - it.S);
    const Vector rdl = data.s > 0 ? Vector(data.c_lin - data.A_lin.transpose() * it.y - it.z)
                                  : Vector::Zero(0);
    const Matrix Lam2 = nt->lambda.cwiseAbs2().asDiagonal();

    // Predictor: affine-scaling direction.
    const Direction aff = newton.solve(rp, Rd, rdl, -Lam2,
                                       -Vector(it.slacks.cwiseProduct(it.z)));
    const StepLengths t_aff = step_lengths(it, chol_X, chol_S, aff, 1.0);
    const Matrix X_aff = it.X + t_aff.primal * aff.dX;
    const Matrix S_aff = it.S + t_aff.dual * aff.dS;
    double comp_aff = (X_aff.cwiseProduct(S_aff)).sum();
    if (data.s > 0) {
      comp_aff += (it.slacks + t_aff.primal * aff.dslacks).dot(it.z + t_aff.dual * aff.dz);
    }
    const double mu_aff = std::max(0.0, comp_aff) / static_cast<double>(d + data.s);
    const double sigma = meas.mu > 0.0 ? std::clamp(std::pow(mu_aff / meas.mu, 3.0), 0.0, 1.0) : 0.0;

    // Corrector with second-order term in the lambda frame.
    const Matrix dXs = nt->G_inv * aff.dX * nt->G_inv.transpose();
    const Matrix dSs = nt->G.transpose() * aff.dS * nt->G;
    const Matrix Rc = sigma * meas.mu * Matrix::Identity(d, d) - Lam2 -
                      symmetrize(dXs * dSs);
    Vector rc(data.s);
    if (data.s > 0) {
      rc = Vector::Constant(data.s, sigma * meas.mu) - it.slacks.cwiseProduct(it.z) -
           aff.dslacks.cwiseProduct(aff.dz);
    }
    const Direction corrected = newton.solve(rp, Rd, rdl, Rc, rc);
    if (!corrected.dX.allFinite() || !corrected.dS.allFinite() || !corrected.dy.allFinite()) {
      status = SolveStatus::kNumericalFailure;
      break;
    }
    const Direction* dir = &corrected;
    StepLengths t = step_lengths(it, chol_X, chol_S, corrected, opts.step_fraction);
    if (rule == StepRule::kGuarded) {
      double step = guarded_step(it, corrected, meas.mu, n, std::min(t.primal, t.dual));
      if (step == 0.0) {
        const StepLengths ta = step_lengths(it, chol_X, chol_S, aff, opts.step_fraction);
        step = guarded_step(it, aff, meas.mu, n, std::min(ta.primal, ta.dual));
        dir = &aff;
      }
      if (!reached) short_steps = step < kShortStep ? short_steps + 1 : 0;
      if (step == 0.0 || short_steps >= kShortStepLimit) {
        crawled = !reached;
        break;
      }
      t = {step, step};
    }
    it.X = symmetrize(it.X + t.primal * dir->dX);
    it.slacks += t.primal * dir->dslacks;
    it.S = symmetrize(it.S + t.dual * dir->dS);
    it.y += t.dual * dir->dy;
    it.z += t.dual * dir->dz;

    if (std::max(t.primal, t.dual) < 1e-10) {
      if (++stalled >= 3) {
        status = best_meas.res.max() > 1e6 * target ? SolveStatus::kInfeasibleSuspected
                                                    : SolveStatus::kNumericalFailure;
        break;
      }
    } else {
      stalled = 0;
    }
  }

  if (status == SolveStatus::kMaxIter && iter == opts.max_iter) {
    const Measures meas = measure(data, it);
    if (meas.res.max() < best_meas.res.max() || (converged(meas) && !converged(best_meas))) {
      best = it;
      best_meas = meas;
    }
  }
  Iterate refined = best;
  Measures refined_meas = best_meas;
  refine(data, refined, refined_meas);
  if (converged(refined_meas) || !converged(best_meas)) {
    best = std::move(refined);
    best_meas = refined_meas;
  }
  if (converged(best_meas)) status = SolveStatus::kOptimal;
  return {pack(data, best, best_meas, status, iter, std::move(mu_history)),
          best_meas.res.max(), crawled};
}

}  // namespace

ConicSolution solve_conic(const ConicProgram& prog, const SolverOptions& opts) {
  prog.check();
  if (!(opts.tol_gap > 0.0) || !(opts.tol_feas > 0.0) || opts.max_iter < 1 ||
      !(opts.initial_scale > 0.0)) {
    throw std::invalid_argument("solve_conic: tolerances and initial_scale must be positive, "
                                "max_iter at least 1");
  }
  const ScaledData data = scale_program(prog);
  const auto [xi, eta] = scaled_start(data);
  std::optional<Run> best;
  auto keep = [&](Run r) {
    if (!best || r.residual < best->residual) best = std::move(r);
  };
  double scale = opts.initial_scale;
  for (int k = 0; k <= kMaxEnlargements; ++k, scale *= kEnlargement) {
    Run r = solve_from(data, opts, scale * xi, scale * eta, StepRule::kGuarded);
    if (r.sol.status == SolveStatus::kOptimal) return std::move(r.sol);
    const bool crawled = r.crawled;
    keep(std::move(r));
    if (!crawled) break;
  }
  for (const auto& [x0, s0] : {std::pair{opts.initial_scale, opts.initial_scale},
                               std::pair{opts.initial_scale * xi, opts.initial_scale * eta}}) {
    Run r = solve_from(data, opts, x0, s0, StepRule::kIndependent);
    if (r.sol.status == SolveStatus::kOptimal) return std::move(r.sol);
    keep(std::move(r));
  }
  return std::move(best->sol);
}

bool CertificateReport::within(double tol) const {
  return residuals.max() <= tol && min_eig_X >= -tol && min_eig_S >= -tol &&
         min_slack >= -tol && min_dual_slack >= -tol;
}

CertificateReport certify(const ConicProgram& prog, const ConicSolution& sol) {
  CertificateReport rep;
  ConicSolution recomputed = sol;
  rep.primal_obj = prog.primal_objective(sol.X, sol.slacks);
  rep.dual_obj = prog.dual_objective(sol.y);
  recomputed.primal_obj = rep.primal_obj;
  recomputed.dual_obj = rep.dual_obj;
  rep.residuals = program_residuals(prog, recomputed);
  rep.min_eig_X = min_eigenvalue(sol.X);
  rep.min_eig_S = min_eigenvalue(sol.S);
  rep.min_slack = sol.slacks.size() ? sol.slacks.minCoeff() : 0.0;
  rep.min_dual_slack = sol.dual_slacks_lin.size() ? sol.dual_slacks_lin.minCoeff() : 0.0;
  rep.complementarity = (sol.X.cwiseProduct(sol.S)).sum() + sol.slacks.dot(sol.dual_slacks_lin);
  return rep;
}

}  // namespace occlqg
