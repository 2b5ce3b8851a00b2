#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "occlqg/policy.hpp"
#include "occlqg/problem.hpp"
#include "occlqg/sdp_builder.hpp"
#include "occlqg/simd/kernels.hpp"

namespace occlqg {

/// Smallest T with alpha^{T+1} / (1 - alpha) <= tail_tol.
int truncation_horizon(double alpha, double tail_tol);

struct SimConfig {
  int n_traj = 10000;
  /// Empty means derive the horizon from tail_tol.
  std::optional<int> horizon;
  double tail_tol = 1e-6;
  std::uint64_t seed = 0;
  /// 0 = hardware concurrency. Results do not depend on this value.
  int threads = 0;
  /// Empty = widest variant available on this CPU.
  std::optional<simd::Isa> isa;

  int resolved_horizon(double alpha) const;
};

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
  int n = 0;
};

/// Per-trajectory randomness is a pure function of (seed, trajectory, step,
/// stream, index):
///
///   h = mix64(seed + 0x9E3779B97F4A7C15)
///   h = mix64(h ^ (trajectory * 0xD1B54A32D192ED03))
///   h = mix64(h ^ (step * 0xAEF17502108EF2D9 + stream))
///   word_j = mix64(h ^ ((j + 1) * 0x9E3779B97F4A7C15))
///
/// where mix64 is the SplitMix64 finalizer. Words 2k and 2k+1 feed one
/// Box-Muller pair (cos branch for even indices, sin branch for odd).
namespace rng {
enum Stream : std::uint64_t { kInitialState = 0, kProcessNoise = 1, kPolicyJitter = 2 };
std::uint64_t mix64(std::uint64_t x);
void standard_normals(std::uint64_t seed, std::uint64_t trajectory, std::uint64_t step,
                      std::uint64_t stream, std::span<double> out);
}  // namespace rng

/// F with F F^T = Sigma for symmetric PSD Sigma, via diagonally pivoted
/// Cholesky; columns beyond the numerical rank are zero.
Matrix psd_factor(const Matrix& Sigma, double rel_tol = 1e-14);

/// Stored closed-loop trajectories, t = 0..horizon for every trajectory.
struct TrajectoryBatch {
  int n_traj = 0;
  int horizon = 0;
  int state_dim = 0;
  int input_dim = 0;
  std::vector<double> states;  // [traj][t][i]
  std::vector<double> inputs;  // [traj][t][j]

  Eigen::Map<const Vector> state(int traj, int t) const;
  Eigen::Map<const Vector> input(int traj, int t) const;
};

/// x0 ~ N(m0, Sigma0), w_t ~ N(0, W), u_t = K x_t + k (+ N(0, cov) jitter).
TrajectoryBatch simulate_batch(const DiscountedLQGProblem& p, const AffineGaussianPolicy& policy,
                               const SimConfig& cfg);

Estimate estimate_discounted_cost(const TrajectoryBatch& batch, const QuadraticStageCost& cost,
                                  double alpha);

struct EmpiricalMoments {
  OccupationMoments mean;
  /// Entrywise standard errors, same layout as `mean`.
  OccupationMoments std_error;
  int n = 0;
};

EmpiricalMoments estimate_occupation_moments(const TrajectoryBatch& batch, double alpha);

Estimate estimate_chance_mass(const TrajectoryBatch& batch, const Vector& g, double h,
                              double alpha);

/// What to accumulate during a streaming run.
struct StatisticsRequest {
  std::optional<QuadraticStageCost> cost;
  bool moments = false;
  std::vector<std::pair<Vector, double>> chance_probes;  // (g, h)
};

struct SimulationStatistics {
  std::optional<Estimate> cost;
  std::optional<EmpiricalMoments> moments;
  std::vector<Estimate> chance;
  int horizon = 0;
  int n_traj = 0;
};

/// Same trajectories as simulate_batch with the same config, accumulated on
/// the fly without storing them.
SimulationStatistics simulate_statistics(const DiscountedLQGProblem& p,
                                         const AffineGaussianPolicy& policy, const SimConfig& cfg,
                                         const StatisticsRequest& request);

}  // namespace occlqg
