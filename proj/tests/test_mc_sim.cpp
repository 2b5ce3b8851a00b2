#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <random>
#include <vector>

#include "occlqg/chance.hpp"
#include "occlqg/mc_sim.hpp"
#include "occlqg/riccati.hpp"
#include "occlqg/simd/kernels.hpp"
#include "support/cases.hpp"

using namespace occlqg;

namespace {

AffineGaussianPolicy scalar_policy() {
  return AffineGaussianPolicy::linear(Matrix::Constant(1, 1, fixtures::kScalarK));
}

AffineGaussianPolicy two_state_policy(const DiscountedLQGProblem& p) {
  return AffineGaussianPolicy::linear(oracle::solve_unconstrained(p).K);
}

SimConfig config(int n_traj, std::uint64_t seed = 7) {
  SimConfig cfg;
  cfg.n_traj = n_traj;
  cfg.seed = seed;
  return cfg;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

std::vector<simd::Isa> available_isas() {
  std::vector<simd::Isa> out;
  for (simd::Isa isa : {simd::Isa::kScalar, simd::Isa::kAvx2, simd::Isa::kNeon}) {
    if (simd::available(isa)) out.push_back(isa);
  }
  return out;
}

}  // namespace

TEST(TruncationHorizon, Examples) {
  EXPECT_EQ(truncation_horizon(0.9, 1e-6), 152);
  EXPECT_EQ(truncation_horizon(0.99, 1e-6),
            static_cast<int>(std::ceil(std::log(1e-8) / std::log(0.99))) - 1);
  EXPECT_EQ(truncation_horizon(0.99, 1e-6), 1832);
  EXPECT_EQ(truncation_horizon(1e-3, 0.01), 0);
  for (double alpha : {0.5, 0.9, 0.97}) {
    const int T = truncation_horizon(alpha, 1e-6);
    EXPECT_LE(std::pow(alpha, T + 1) / (1.0 - alpha), 1e-6);
    EXPECT_GT(std::pow(alpha, T) / (1.0 - alpha), 1e-6);
  }
}

TEST(SimConfig, ResolvedHorizon) {
  SimConfig cfg;
  EXPECT_EQ(cfg.resolved_horizon(0.9), 152);
  cfg.horizon = 17;
  EXPECT_EQ(cfg.resolved_horizon(0.9), 17);
}

TEST(Rng, StreamsArePureFunctionsOfTheirCounters) {
  std::vector<double> a(6), b(6), c(6);
  rng::standard_normals(1, 2, 3, rng::kProcessNoise, a);
  rng::standard_normals(1, 2, 3, rng::kProcessNoise, b);
  rng::standard_normals(1, 2, 4, rng::kProcessNoise, c);
  EXPECT_TRUE(same_bits(a, b));
  EXPECT_FALSE(same_bits(a, c));
  std::vector<double> prefix(3);
  rng::standard_normals(1, 2, 3, rng::kProcessNoise, prefix);
  EXPECT_TRUE(std::equal(prefix.begin(), prefix.end(), a.begin()));
}

TEST(Rng, NormalsHaveUnitMoments) {
  double sum = 0.0, sq = 0.0;
  const int n = 200000;
  std::vector<double> z(2);
  for (int i = 0; i < n / 2; ++i) {
    rng::standard_normals(11, static_cast<std::uint64_t>(i), 0, rng::kInitialState, z);
    for (double v : z) {
      sum += v;
      sq += v * v;
    }
  }
  EXPECT_NEAR(sum / n, 0.0, 4.0 / std::sqrt(n));
  EXPECT_NEAR(sq / n, 1.0, 4.0 * std::sqrt(2.0 / n));
}

TEST(PsdFactor, ReproducesSingularCovariance) {
  const Vector v = (Vector(3) << 1.0, -2.0, 0.5).finished();
  const Matrix S = v * v.transpose() + Matrix(Vector((Vector(3) << 0.0, 0.0, 1e-3).finished()).asDiagonal());
  const Matrix F = psd_factor(S);
  EXPECT_LE((F * F.transpose() - S).norm(), 1e-13);
  EXPECT_TRUE(psd_factor(Matrix::Zero(2, 2)).isZero(0.0));
}

TEST(SimulateBatch, DeterministicRolloutWithoutNoise) {
  DiscountedLQGProblem p = fixtures::two_state_problem();
  p.system.W.setZero();
  p.init.Sigma0.setZero();
  const AffineGaussianPolicy pol = two_state_policy(p);
  SimConfig cfg = config(3);
  cfg.horizon = 25;
  const TrajectoryBatch batch = simulate_batch(p, pol, cfg);
  ASSERT_EQ(batch.horizon, 25);
  Vector x = p.init.m0;
  const Matrix Acl = p.system.A + p.system.B * pol.K;
  for (int t = 0; t <= 25; ++t) {
    for (int i = 0; i < 3; ++i) {
      EXPECT_LE((batch.state(i, t) - x).norm(), 1e-12 * (1.0 + x.norm()));
      EXPECT_LE((batch.input(i, t) - pol.K * x).norm(), 1e-12 * (1.0 + x.norm()));
    }
    x = Acl * x;
  }
}

TEST(SimulateBatch, BitIdenticalForSameSeed) {
  const DiscountedLQGProblem p = fixtures::two_state_problem();
  SimConfig cfg = config(300);
  cfg.horizon = 40;
  const TrajectoryBatch a = simulate_batch(p, two_state_policy(p), cfg);
  const TrajectoryBatch b = simulate_batch(p, two_state_policy(p), cfg);
  EXPECT_TRUE(same_bits(a.states, b.states));
  EXPECT_TRUE(same_bits(a.inputs, b.inputs));
  cfg.seed = 8;
  const TrajectoryBatch c = simulate_batch(p, two_state_policy(p), cfg);
  EXPECT_FALSE(same_bits(a.states, c.states));
}

TEST(SimulateBatch, IndependentOfThreadCount) {
  const DiscountedLQGProblem p = fixtures::two_state_problem();
  SimConfig cfg = config(1000);
  cfg.horizon = 30;
  cfg.threads = 1;
  const TrajectoryBatch one = simulate_batch(p, two_state_policy(p), cfg);
  for (int threads : {2, 3, 8}) {
    cfg.threads = threads;
    const TrajectoryBatch many = simulate_batch(p, two_state_policy(p), cfg);
    EXPECT_TRUE(same_bits(one.states, many.states)) << threads;
    EXPECT_TRUE(same_bits(one.inputs, many.inputs)) << threads;
  }
}

TEST(SimulateBatch, TrajectoryDependsOnlyOnItsIndex) {
  const DiscountedLQGProblem p = fixtures::two_state_problem();
  SimConfig cfg = config(70);
  cfg.horizon = 10;
  const TrajectoryBatch small = simulate_batch(p, two_state_policy(p), cfg);
  cfg.n_traj = 200;
  const TrajectoryBatch large = simulate_batch(p, two_state_policy(p), cfg);
  for (int t = 0; t <= 10; ++t) {
    EXPECT_EQ(small.state(69, t), large.state(69, t));
  }
}

TEST(SimulateBatch, RejectsBadInput) {
  const DiscountedLQGProblem p = fixtures::two_state_problem();
  EXPECT_THROW(simulate_batch(p, two_state_policy(p), config(0)), std::invalid_argument);
  EXPECT_THROW(simulate_batch(p, scalar_policy(), config(10)), DimensionError);
}

TEST(Simd, KernelsMatchScalarBitForBit) {
  const simd::LaneKernels& ref = simd::kernels(simd::Isa::kScalar);
  std::mt19937_64 rng(9);
  std::normal_distribution<double> nd;
  auto fill = [&](std::size_t size) {
    std::vector<double> v(size);
    for (double& x : v) x = nd(rng);
    return v;
  };
  for (simd::Isa isa : available_isas()) {
    const simd::LaneKernels& k = simd::kernels(isa);
    for (int lanes : {1, 3, 4, 7, 64}) {
      for (int dim : {1, 2, 5}) {
        const auto M = fill(static_cast<std::size_t>(dim * (dim + 1)));
        const auto x = fill(static_cast<std::size_t>((dim + 1) * lanes));
        const auto bias = fill(static_cast<std::size_t>(dim * lanes));
        std::vector<double> o1(dim * lanes), o2(dim * lanes);
        ref.affine(M.data(), dim, dim + 1, x.data(), bias.data(), o1.data(), lanes);
        k.affine(M.data(), dim, dim + 1, x.data(), bias.data(), o2.data(), lanes);
        EXPECT_TRUE(same_bits(o1, o2));
        ref.affine(M.data(), dim, dim + 1, x.data(), nullptr, o1.data(), lanes);
        k.affine(M.data(), dim, dim + 1, x.data(), nullptr, o2.data(), lanes);
        EXPECT_TRUE(same_bits(o1, o2));

        auto a1 = fill(static_cast<std::size_t>(dim * lanes)), a2 = a1;
        ref.axpy(0.37, x.data(), dim, a1.data(), lanes);
        k.axpy(0.37, x.data(), dim, a2.data(), lanes);
        EXPECT_TRUE(same_bits(a1, a2));

        auto c1 = fill(static_cast<std::size_t>(dim * (dim + 1) * lanes)), c2 = c1;
        ref.outer_acc(0.9, bias.data(), dim, x.data(), dim + 1, c1.data(), lanes);
        k.outer_acc(0.9, bias.data(), dim, x.data(), dim + 1, c2.data(), lanes);
        EXPECT_TRUE(same_bits(c1, c2));

        auto q1 = fill(static_cast<std::size_t>(lanes)), q2 = q1;
        ref.quad_acc(0.8, M.data(), dim, x.data(), q1.data(), lanes);
        k.quad_acc(0.8, M.data(), dim, x.data(), q2.data(), lanes);
        EXPECT_TRUE(same_bits(q1, q2));

        auto b1 = fill(static_cast<std::size_t>(lanes)), b2 = b1;
        ref.band_acc(0.5, M.data(), dim, 0.7, x.data(), b1.data(), lanes);
        k.band_acc(0.5, M.data(), dim, 0.7, x.data(), b2.data(), lanes);
        EXPECT_TRUE(same_bits(b1, b2));
      }
    }
  }
}

TEST(Simd, DispatchReportsAvailableVariant) {
  EXPECT_TRUE(simd::available(simd::Isa::kScalar));
  EXPECT_TRUE(simd::available(simd::best_isa()));
  EXPECT_EQ(simd::best_kernels().isa, simd::best_isa());
  for (simd::Isa isa : {simd::Isa::kAvx2, simd::Isa::kNeon}) {
    if (!simd::available(isa)) {
      EXPECT_THROW(simd::kernels(isa), std::runtime_error);
    }
  }
}

TEST(Simd, SimulationIdenticalAcrossVariants) {
  DiscountedLQGProblem p = fixtures::two_state_problem();
  AffineGaussianPolicy pol = two_state_policy(p);
  pol.cov = Matrix::Constant(1, 1, 0.05);
  SimConfig cfg = config(150);
  cfg.horizon = 60;
  cfg.isa = simd::Isa::kScalar;
  const TrajectoryBatch ref = simulate_batch(p, pol, cfg);
  StatisticsRequest req;
  req.cost = p.cost;
  req.moments = true;
  req.chance_probes.emplace_back(Vector::Ones(2), 0.5);
  const SimulationStatistics ref_stats = simulate_statistics(p, pol, cfg, req);
  for (simd::Isa isa : available_isas()) {
    cfg.isa = isa;
    const TrajectoryBatch b = simulate_batch(p, pol, cfg);
    EXPECT_TRUE(same_bits(ref.states, b.states)) << simd::to_string(isa);
    EXPECT_TRUE(same_bits(ref.inputs, b.inputs)) << simd::to_string(isa);
    const SimulationStatistics s = simulate_statistics(p, pol, cfg, req);
    EXPECT_EQ(s.cost->value, ref_stats.cost->value);
    EXPECT_EQ(s.chance[0].value, ref_stats.chance[0].value);
    EXPECT_TRUE(s.moments->mean.assemble() == ref_stats.moments->mean.assemble());
  }
}

TEST(Statistics, StreamingMatchesStoredBatch) {
  const DiscountedLQGProblem p = fixtures::two_state_problem();
  SimConfig cfg = config(500);
  cfg.horizon = 80;
  const AffineGaussianPolicy pol = two_state_policy(p);
  const TrajectoryBatch batch = simulate_batch(p, pol, cfg);
  StatisticsRequest req;
  req.cost = p.cost;
  req.moments = true;
  req.chance_probes.emplace_back((Vector(2) << 0.0, 1.0).finished(), 0.8);
  const SimulationStatistics s = simulate_statistics(p, pol, cfg, req);
  const Estimate cost = estimate_discounted_cost(batch, p.cost, p.alpha);
  EXPECT_NEAR(s.cost->value, cost.value, 1e-12 * std::abs(cost.value));
  EXPECT_NEAR(s.cost->std_error, cost.std_error, 1e-10 * cost.std_error);
  const Estimate chance = estimate_chance_mass(batch, req.chance_probes[0].first, 0.8, p.alpha);
  EXPECT_NEAR(s.chance[0].value, chance.value, 1e-12 * (1.0 + chance.value));
  const EmpiricalMoments mom = estimate_occupation_moments(batch, p.alpha);
  EXPECT_LE((s.moments->mean.assemble() - mom.mean.assemble()).norm(),
            1e-12 * mom.mean.assemble().norm());
  EXPECT_EQ(s.n_traj, 500);
  EXPECT_EQ(s.horizon, 80);
}

TEST(Statistics, ScalarBenchmarkWithinThreeStandardErrors) {
  const DiscountedLQGProblem p = fixtures::scalar_problem();
  const TrajectoryBatch batch = simulate_batch(p, scalar_policy(), config(10000, 20240601));
  const double tail = std::pow(p.alpha, batch.horizon + 1) / (1.0 - p.alpha);
  const Estimate cost = estimate_discounted_cost(batch, p.cost, p.alpha);
  EXPECT_EQ(cost.n, 10000);
  EXPECT_LE(std::abs(cost.value - fixtures::kScalarCost), 3.0 * cost.std_error + tail * 100.0);
  EXPECT_NEAR(fixtures::kScalarCost, 11.25822, 5e-6);
  const EmpiricalMoments mom = estimate_occupation_moments(batch, p.alpha);
  EXPECT_LE(std::abs(mom.mean.Z_xx(0, 0) - fixtures::kScalarZxx),
            3.0 * mom.std_error.Z_xx(0, 0) + tail * 100.0);
  EXPECT_NEAR(mom.mean.m, 10.0, 1e-4);
  EXPECT_EQ(mom.std_error.m, 0.0);
  EXPECT_LE(std::abs(mom.mean.m_x(0)), 3.0 * mom.std_error.m_x(0));
  const Vector g = Vector::Ones(1);
  const ChanceMass exact = analytic_chance_mass(p, scalar_policy(), g, 1.5);
  const Estimate chance = estimate_chance_mass(batch, g, 1.5, p.alpha);
  EXPECT_LE(std::abs(chance.value - exact.mass),
            3.0 * chance.std_error + tail + exact.truncation_bound);
}

TEST(Statistics, TwoStateMatchesOracle) {
  const DiscountedLQGProblem p = fixtures::strip_constraints(fixtures::two_state_problem());
  const AffineGaussianPolicy pol = two_state_policy(p);
  SimConfig cfg = config(10000, 20240601);
  const double tail = std::pow(p.alpha, cfg.resolved_horizon(p.alpha) + 1) / (1.0 - p.alpha);
  StatisticsRequest req;
  req.cost = p.cost;
  req.moments = true;
  const Vector g = (Vector(2) << 0.0, 1.0).finished();
  req.chance_probes.emplace_back(g, 1.0);
  const SimulationStatistics s = simulate_statistics(p, pol, cfg, req);
  const OccupationMoments exact = oracle::closed_loop_moments(p, pol.K);
  EXPECT_LE(std::abs(s.cost->value - oracle::solve_unconstrained(p).cost),
            3.0 * s.cost->std_error + tail * 1e3);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      EXPECT_LE(std::abs(s.moments->mean.Z_xx(i, j) - exact.Z_xx(i, j)),
                3.0 * s.moments->std_error.Z_xx(i, j) + tail * 1e3)
          << i << "," << j;
    }
  }
  const ChanceMass mass = analytic_chance_mass(p, pol, g, 1.0);
  EXPECT_LE(std::abs(s.chance[0].value - mass.mass),
            3.0 * s.chance[0].std_error + tail + mass.truncation_bound);
}

TEST(Statistics, StandardErrorShrinksLikeInverseRootN) {
  const DiscountedLQGProblem p = fixtures::scalar_problem();
  std::vector<double> se;
  for (int n : {100, 1000, 10000}) {
    const TrajectoryBatch batch = simulate_batch(p, scalar_policy(), config(n, 3));
    const Estimate cost = estimate_discounted_cost(batch, p.cost, p.alpha);
    EXPECT_LE(std::abs(cost.value - fixtures::kScalarCost), 4.0 * cost.std_error) << n;
    se.push_back(cost.std_error);
  }
  for (int k = 0; k < 2; ++k) {
    const double ratio = se[k] / se[k + 1];
    EXPECT_GT(ratio, std::sqrt(10.0) / 1.5);
    EXPECT_LT(ratio, std::sqrt(10.0) * 1.5);
  }
}

TEST(Statistics, ZeroThresholdCountsEveryStep) {
  const DiscountedLQGProblem p = fixtures::scalar_problem();
  const TrajectoryBatch batch = simulate_batch(p, scalar_policy(), config(200));
  const Estimate chance = estimate_chance_mass(batch, Vector::Ones(1), 0.0, p.alpha);
  const double truncated = (1.0 - std::pow(p.alpha, batch.horizon + 1)) / (1.0 - p.alpha);
  EXPECT_NEAR(chance.value, truncated, 1e-9);
  EXPECT_LE(chance.std_error, 1e-9);
}

TEST(Statistics, ZeroProblemGivesZero) {
  DiscountedLQGProblem p = fixtures::scalar_problem();
  p.system.W.setZero();
  p.init.Sigma0.setZero();
  const TrajectoryBatch batch = simulate_batch(p, scalar_policy(), config(100));
  const Estimate cost = estimate_discounted_cost(batch, p.cost, p.alpha);
  EXPECT_EQ(cost.value, 0.0);
  EXPECT_EQ(cost.std_error, 0.0);
  const Estimate chance = estimate_chance_mass(batch, Vector::Ones(1), 0.1, p.alpha);
  EXPECT_EQ(chance.value, 0.0);
}
