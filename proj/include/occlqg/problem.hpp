#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace occlqg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Raised when matrix shapes in a problem instance are inconsistent.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// x_{t+1} = A x_t + B u_t + w_t,  w_t ~ N(0, W).
struct LinearStochasticSystem {
  Matrix A;
  Matrix B;
  Matrix W;

  int state_dim() const { return static_cast<int>(A.rows()); }
  int input_dim() const { return static_cast<int>(B.cols()); }
};

/// Law of x_0: mean m0, covariance Sigma0.
struct InitialDistribution {
  Vector m0;
  Matrix Sigma0;

  /// E[x0 x0^T] = Sigma0 + m0 m0^T.
  Matrix second_moment() const { return Sigma0 + m0 * m0.transpose(); }
};

/// c(x, u) = x^T Q x + u^T R u.
struct QuadraticStageCost {
  Matrix Q;
  Matrix R;

  double operator()(const Vector& x, const Vector& u) const {
    return x.dot(Q * x) + u.dot(R * u);
  }
};

/// Discounted moment constraint  E sum_t alpha^t c(x_t, u_t) <= beta.
struct MomentBound {
  QuadraticStageCost cost;
  double beta = 0.0;
};

enum class ChanceMode { kMarkov, kGaussian };

/// Discounted chance constraint  sum_t alpha^t Pr(|g^T x_t| >= h) <= eps.
struct ChanceSpec {
  Vector g;
  double h = 1.0;
  double eps = 0.1;
  ChanceMode mode = ChanceMode::kMarkov;
};

struct DiscountedLQGProblem {
  LinearStochasticSystem system;
  InitialDistribution init;
  QuadraticStageCost cost;
  double alpha = 0.99;
  std::vector<MomentBound> moment_bounds;
  std::vector<ChanceSpec> chance_specs;

  int state_dim() const { return system.state_dim(); }
  int input_dim() const { return system.input_dim(); }
  /// Total discounted mass 1 / (1 - alpha).
  double total_mass() const { return 1.0 / (1.0 - alpha); }
};

/// Offset of the weight functions w(x,u) = eps + c0(x,u). It does not enter
/// any of the LQG programs.
inline constexpr double kWeightOffset = 1.0;

struct ValidationCheck {
  std::string name;
  bool passed = false;
  double value = 0.0;  // rank or min eigenvalue, depending on the check
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;

  bool all_passed() const;
  const ValidationCheck* find(const std::string& name) const;
};

/// Throws DimensionError on any shape mismatch, including chance specs and
/// moment bounds.
void check_dimensions(const DiscountedLQGProblem& p);

/// Runs the standing-assumption checks. Failures are reported, not thrown;
/// only shape mismatches throw.
ValidationReport validate_problem(const DiscountedLQGProblem& p);

/// C (k x n) with C^T C = Q and k = rank(Q). Throws std::invalid_argument if Q
/// has an eigenvalue below -1e-8 * ||Q||.
Matrix symmetric_factor(const Matrix& Q);

/// Rank by singular values, threshold 1e-8 * sigma_max * max(rows, cols).
int numerical_rank(const Matrix& M);

/// [B, AB, ..., A^{n-1} B].
Matrix controllability_matrix(const Matrix& A, const Matrix& B);

/// [C; CA; ...; C A^{n-1}].
Matrix observability_matrix(const Matrix& A, const Matrix& C);

/// Smallest eigenvalue of the symmetric part of M (0 for empty M).
double min_eigenvalue(const Matrix& M);

}  // namespace occlqg
