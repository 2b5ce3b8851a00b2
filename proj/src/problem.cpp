#include "occlqg/problem.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace occlqg {

namespace {

void require_shape(const Matrix& M, Eigen::Index rows, Eigen::Index cols,
                   const std::string& what) {
  if (M.rows() != rows || M.cols() != cols) {
    std::ostringstream os;
    os << what << " is " << M.rows() << "x" << M.cols() << ", expected "
       << rows << "x" << cols;
    throw DimensionError(os.str());
  }
}

double symmetry_defect(const Matrix& M) {
  return (M - M.transpose()).cwiseAbs().maxCoeff();
}

ValidationCheck psd_check(const std::string& name, const Matrix& M,
                          bool strict) {
  ValidationCheck c;
  c.name = name;
  const double scale = M.size() ? M.norm() : 0.0;
  c.value = min_eigenvalue(M);
  const double asym = M.size() ? symmetry_defect(M) : 0.0;
  const bool symmetric = asym <= 1e-12 * (1.0 + scale);
  if (strict) {
    c.passed = symmetric && c.value > 0.0;
  } else {
    c.passed = symmetric && c.value >= -1e-10 * scale;
  }
  std::ostringstream os;
  os << "min eigenvalue " << c.value;
  if (!symmetric) os << "; not symmetric (defect " << asym << ")";
  c.detail = os.str();
  return c;
}

}  // namespace

bool ValidationReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const ValidationCheck& c) { return c.passed; });
}

const ValidationCheck* ValidationReport::find(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

double min_eigenvalue(const Matrix& M) {
  if (M.size() == 0) return 0.0;
  const Matrix sym = 0.5 * (M + M.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

int numerical_rank(const Matrix& M) {
  if (M.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(M);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  const double tol = 1e-8 * s(0) * static_cast<double>(std::max(M.rows(), M.cols()));
  return static_cast<int>((s.array() > tol).count());
}

Matrix controllability_matrix(const Matrix& A, const Matrix& B) {
  const Eigen::Index n = A.rows(), p = B.cols();
  Matrix out(n, n * p);
  Matrix block = B;
  for (Eigen::Index j = 0; j < n; ++j) {
    out.middleCols(j * p, p) = block;
    block = A * block;
  }
  return out;
}

Matrix observability_matrix(const Matrix& A, const Matrix& C) {
  const Eigen::Index n = A.rows(), k = C.rows();
  Matrix out(n * k, n);
  Matrix block = C;
  for (Eigen::Index j = 0; j < n; ++j) {
    out.middleRows(j * k, k) = block;
    block = block * A;
  }
  return out;
}

Matrix symmetric_factor(const Matrix& Q) {
  if (Q.rows() != Q.cols()) throw DimensionError("symmetric_factor: Q not square");
  const Eigen::Index n = Q.rows();
  if (n == 0) return Matrix(0, 0);
  const Matrix sym = 0.5 * (Q + Q.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  const Vector& lam = es.eigenvalues();
  const double scale = sym.norm();
  if (lam(0) < -1e-8 * scale) {
    std::ostringstream os;
    os << "symmetric_factor: matrix is indefinite (eigenvalue " << lam(0) << ")";
    throw std::invalid_argument(os.str());
  }
  const double cutoff = 1e-10 * scale;
  std::vector<Eigen::Index> kept;
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    if (lam(i) > cutoff) kept.push_back(i);
  }
  Matrix C(static_cast<Eigen::Index>(kept.size()), n);
  for (std::size_t r = 0; r < kept.size(); ++r) {
    const Eigen::Index i = kept[r];
    C.row(static_cast<Eigen::Index>(r)) =
        std::sqrt(lam(i)) * es.eigenvectors().col(i).transpose();
  }
  return C;
}

void check_dimensions(const DiscountedLQGProblem& p) {
  const auto n = p.system.A.rows();
  const auto m = p.system.B.cols();
  if (n == 0) throw DimensionError("system.A is empty");
  require_shape(p.system.A, n, n, "system.A");
  require_shape(p.system.B, n, m, "system.B");
  require_shape(p.system.W, n, n, "system.W");
  if (p.init.m0.size() != n) {
    throw DimensionError("init.m0 has " + std::to_string(p.init.m0.size()) +
                         " entries, expected " + std::to_string(n));
  }
  require_shape(p.init.Sigma0, n, n, "init.Sigma0");
  require_shape(p.cost.Q, n, n, "cost.Q0");
  require_shape(p.cost.R, m, m, "cost.R0");
  for (std::size_t i = 0; i < p.moment_bounds.size(); ++i) {
    const auto tag = "bounds[" + std::to_string(i) + "]";
    require_shape(p.moment_bounds[i].cost.Q, n, n, tag + ".Q");
    require_shape(p.moment_bounds[i].cost.R, m, m, tag + ".R");
  }
  for (std::size_t i = 0; i < p.chance_specs.size(); ++i) {
    if (p.chance_specs[i].g.size() != n) {
      throw DimensionError("chance[" + std::to_string(i) + "].g has " +
                           std::to_string(p.chance_specs[i].g.size()) +
                           " entries, expected " + std::to_string(n));
    }
  }
}

ValidationReport validate_problem(const DiscountedLQGProblem& p) {
  check_dimensions(p);
  ValidationReport report;
  const auto& sys = p.system;
  const int n = p.state_dim();

  {
    ValidationCheck c;
    c.name = "alpha_in_unit_interval";
    c.value = p.alpha;
    c.passed = p.alpha > 0.0 && p.alpha < 1.0;
    c.detail = "alpha = " + std::to_string(p.alpha);
    report.checks.push_back(c);
  }
  report.checks.push_back(psd_check("Q0_psd", p.cost.Q, false));
  report.checks.push_back(psd_check("R0_pd", p.cost.R, true));
  report.checks.push_back(psd_check("W_psd", sys.W, false));
  report.checks.push_back(psd_check("Sigma0_psd", p.init.Sigma0, false));
  for (std::size_t i = 0; i < p.moment_bounds.size(); ++i) {
    ValidationCheck c;
    c.name = "bound_" + std::to_string(i) + "_beta_nonnegative";
    c.value = p.moment_bounds[i].beta;
    c.passed = c.value >= 0.0;
    c.detail = "beta = " + std::to_string(c.value);
    report.checks.push_back(c);
  }
  {
    ValidationCheck c;
    c.name = "controllable";
    const int rank = numerical_rank(controllability_matrix(sys.A, sys.B));
    c.value = rank;
    c.passed = rank == n;
    c.detail = "rank " + std::to_string(rank) + " of " + std::to_string(n);
    report.checks.push_back(c);
  }
  {
    ValidationCheck c;
    c.name = "observable";
    Matrix C;
    try {
      C = symmetric_factor(p.cost.Q);
    } catch (const std::invalid_argument&) {
      C = Matrix::Zero(0, n);
    }
    const int rank = C.rows() ? numerical_rank(observability_matrix(sys.A, C)) : 0;
    c.value = rank;
    c.passed = rank == n;
    c.detail = "rank " + std::to_string(rank) + " of " + std::to_string(n) +
               " with C from Q0 (" + std::to_string(C.rows()) + " rows)";
    report.checks.push_back(c);
  }
  return report;
}

}  // namespace occlqg
