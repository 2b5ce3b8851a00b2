#include "occlqg/mc_sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <thread>

namespace occlqg {

namespace {

constexpr int kBlockLanes = 64;

std::vector<double> row_major(const Matrix& M) {
  std::vector<double> out(static_cast<std::size_t>(M.size()));
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      out[static_cast<std::size_t>(i * M.cols() + j)] = M(i, j);
    }
  }
  return out;
}

void broadcast(const Vector& v, int lanes, double* out) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    std::fill(out + i * lanes, out + (i + 1) * lanes, v(i));
  }
}

/// Everything a block rollout needs, precomputed once per run.
struct RolloutPlan {
  const simd::LaneKernels* kern = nullptr;
  int n = 0;
  int p = 0;
  int horizon = 0;
  double alpha = 0.0;
  std::uint64_t seed = 0;
  std::vector<double> AB;  // n x (n + p)
  std::vector<double> K;   // p x n
  Vector k;
  Vector m0;
  std::vector<double> init_factor;  // n x n
  std::vector<double> noise_factor;  // n x n
  std::vector<double> jitter_factor;  // p x p
  bool has_init_noise = false;
  bool has_process_noise = false;
  bool has_jitter = false;
};

RolloutPlan make_plan(const DiscountedLQGProblem& p, const AffineGaussianPolicy& policy,
                      const SimConfig& cfg) {
  check_dimensions(p);
  const int n = p.state_dim(), m = p.input_dim();
  if (policy.K.rows() != m || policy.K.cols() != n || policy.k.size() != m) {
    throw DimensionError("policy does not match problem dimensions");
  }
  if (cfg.n_traj < 1) throw std::invalid_argument("n_traj must be at least 1");
  RolloutPlan plan;
  plan.kern = cfg.isa ? &simd::kernels(*cfg.isa) : &simd::best_kernels();
  plan.n = n;
  plan.p = m;
  plan.horizon = cfg.resolved_horizon(p.alpha);
  plan.alpha = p.alpha;
  plan.seed = cfg.seed;
  Matrix AB(n, n + m);
  AB << p.system.A, p.system.B;
  plan.AB = row_major(AB);
  plan.K = row_major(policy.K);
  plan.k = policy.k;
  plan.m0 = p.init.m0;
  const Matrix F0 = psd_factor(p.init.Sigma0);
  const Matrix Fw = psd_factor(p.system.W);
  plan.init_factor = row_major(F0);
  plan.noise_factor = row_major(Fw);
  plan.has_init_noise = !F0.isZero(0.0);
  plan.has_process_noise = !Fw.isZero(0.0);
  if (policy.cov.size() && !policy.cov.isZero(0.0)) {
    plan.jitter_factor = row_major(psd_factor(policy.cov));
    plan.has_jitter = true;
  }
  return plan;
}

/// Writes `dim` normals for each lane into SoA layout.
void lane_normals(const RolloutPlan& plan, int first, int lanes, int t, std::uint64_t stream,
                  int dim, double* out, std::vector<double>& scratch) {
  scratch.resize(static_cast<std::size_t>(dim));
  for (int l = 0; l < lanes; ++l) {
    rng::standard_normals(plan.seed, static_cast<std::uint64_t>(first + l),
                          static_cast<std::uint64_t>(t), stream, scratch);
    for (int i = 0; i < dim; ++i) out[i * lanes + l] = scratch[static_cast<std::size_t>(i)];
  }
}

/// Rolls out trajectories [first, first + lanes) and calls
/// visit(t, weight, x, u) with SoA state/input buffers for t = 0..horizon.
template <class Visitor>
void rollout_block(const RolloutPlan& plan, int first, int lanes, Visitor&& visit) {
  const int n = plan.n, p = plan.p, L = lanes;
  const auto& kern = *plan.kern;
  std::vector<double> xu(static_cast<std::size_t>((n + p) * L));
  std::vector<double> next(static_cast<std::size_t>(n * L));
  std::vector<double> z(static_cast<std::size_t>(std::max(n, p) * L));
  std::vector<double> bias(static_cast<std::size_t>(std::max(n, p) * L));
  std::vector<double> bias_u(static_cast<std::size_t>(p * L));
  std::vector<double> scratch;
  double* x = xu.data();
  double* u = xu.data() + n * L;

  broadcast(plan.m0, L, bias.data());
  if (plan.has_init_noise) {
    lane_normals(plan, first, L, 0, rng::kInitialState, n, z.data(), scratch);
    kern.affine(plan.init_factor.data(), n, n, z.data(), bias.data(), x, L);
  } else {
    std::copy(bias.begin(), bias.begin() + n * L, x);
  }

  double weight = 1.0;
  for (int t = 0; t <= plan.horizon; ++t) {
    broadcast(plan.k, L, bias_u.data());
    if (plan.has_jitter) {
      lane_normals(plan, first, L, t, rng::kPolicyJitter, p, z.data(), scratch);
      kern.affine(plan.jitter_factor.data(), p, p, z.data(), bias_u.data(), bias.data(), L);
      std::copy(bias.begin(), bias.begin() + p * L, bias_u.begin());
    }
    kern.affine(plan.K.data(), p, n, x, bias_u.data(), u, L);
    visit(t, weight, static_cast<const double*>(x), static_cast<const double*>(u));
    if (t == plan.horizon) break;
    const double* noise = nullptr;
    if (plan.has_process_noise) {
      lane_normals(plan, first, L, t, rng::kProcessNoise, n, z.data(), scratch);
      kern.affine(plan.noise_factor.data(), n, n, z.data(), nullptr, bias.data(), L);
      noise = bias.data();
    }
    kern.affine(plan.AB.data(), n, n + p, xu.data(), noise, next.data(), L);
    std::copy(next.begin(), next.end(), x);
    weight *= plan.alpha;
  }
}

template <class BlockFn>
void for_each_block(int n_traj, int threads, BlockFn&& fn) {
  const int blocks = (n_traj + kBlockLanes - 1) / kBlockLanes;
  int workers = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::clamp(workers, 1, std::max(1, blocks));
  std::atomic<int> next{0};
  auto work = [&] {
    for (int b = next++; b < blocks; b = next++) {
      const int first = b * kBlockLanes;
      fn(first, std::min(kBlockLanes, n_traj - first));
    }
  };
  if (workers == 1) {
    work();
    return;
  }
  std::vector<std::jthread> pool;
  for (int w = 0; w < workers; ++w) pool.emplace_back(work);
}

/// Per-lane discounted sums for one block, flushed into per-trajectory rows.
class LaneAccumulator {
 public:
  LaneAccumulator(const simd::LaneKernels& kern, int n, int p, int lanes,
                  const StatisticsRequest& req)
      : kern_(kern), n_(n), p_(p), lanes_(lanes), req_(req) {
    if (req.cost) {
      Q_ = row_major(req.cost->Q);
      R_ = row_major(req.cost->R);
    }
    for (const auto& [g, h] : req.chance_probes) {
      g_.push_back(std::vector<double>(g.data(), g.data() + g.size()));
      h_.push_back(h);
    }
    sums_.assign(static_cast<std::size_t>(width(n, p, req) * lanes), 0.0);
  }

  /// Features per trajectory: [cost][x n][u p][xx n*n][xu n*p][uu p*p][chance...]
  static int width(int n, int p, const StatisticsRequest& req) {
    return (req.cost ? 1 : 0) + (req.moments ? n + p + n * n + n * p + p * p : 0) +
           static_cast<int>(req.chance_probes.size());
  }

  void add(double w, const double* x, const double* u) {
    double* dst = sums_.data();
    const int L = lanes_;
    if (req_.cost) {
      kern_.quad_acc(w, Q_.data(), n_, x, dst, L);
      if (p_ > 0) kern_.quad_acc(w, R_.data(), p_, u, dst, L);
      dst += L;
    }
    if (req_.moments) {
      kern_.axpy(w, x, n_, dst, L);
      dst += n_ * L;
      kern_.axpy(w, u, p_, dst, L);
      dst += p_ * L;
      kern_.outer_acc(w, x, n_, x, n_, dst, L);
      dst += n_ * n_ * L;
      kern_.outer_acc(w, x, n_, u, p_, dst, L);
      dst += n_ * p_ * L;
      kern_.outer_acc(w, u, p_, u, p_, dst, L);
      dst += p_ * p_ * L;
    }
    for (std::size_t c = 0; c < g_.size(); ++c) {
      kern_.band_acc(w, g_[c].data(), n_, h_[c], x, dst, L);
      dst += L;
    }
  }

  /// rows[(first + l) * width + f] = feature f of lane l
  void flush(int first, std::vector<double>& rows) const {
    const int wdt = width(n_, p_, req_);
    for (int f = 0; f < wdt; ++f) {
      for (int l = 0; l < lanes_; ++l) {
        rows[static_cast<std::size_t>((first + l) * wdt + f)] =
            sums_[static_cast<std::size_t>(f * lanes_ + l)];
      }
    }
  }

 private:
  const simd::LaneKernels& kern_;
  int n_, p_, lanes_;
  const StatisticsRequest& req_;
  std::vector<double> Q_, R_;
  std::vector<std::vector<double>> g_;
  std::vector<double> h_;
  std::vector<double> sums_;
};

Estimate column_estimate(const std::vector<double>& rows, int n_traj, int wdt, int f) {
  Estimate e;
  e.n = n_traj;
  double sum = 0.0;
  for (int i = 0; i < n_traj; ++i) sum += rows[static_cast<std::size_t>(i * wdt + f)];
  e.value = sum / n_traj;
  if (n_traj > 1) {
    double ss = 0.0;
    for (int i = 0; i < n_traj; ++i) {
      const double dv = rows[static_cast<std::size_t>(i * wdt + f)] - e.value;
      ss += dv * dv;
    }
    e.std_error = std::sqrt(ss / (n_traj - 1) / n_traj);
  }
  return e;
}

double discounted_mass(double alpha, int horizon) {
  double w = 1.0, total = 0.0;
  for (int t = 0; t <= horizon; ++t) {
    total += w;
    w *= alpha;
  }
  return total;
}

SimulationStatistics reduce(const std::vector<double>& rows, int n_traj, int n, int p,
                            double alpha, int horizon, const StatisticsRequest& req) {
  const int wdt = LaneAccumulator::width(n, p, req);
  SimulationStatistics out;
  out.horizon = horizon;
  out.n_traj = n_traj;
  int f = 0;
  if (req.cost) out.cost = column_estimate(rows, n_traj, wdt, f++);
  if (req.moments) {
    EmpiricalMoments em;
    em.n = n_traj;
    auto fill = [&](Matrix& mean, Matrix& se, int r, int c) {
      mean.resize(r, c);
      se.resize(r, c);
      for (int i = 0; i < r; ++i) {
        for (int j = 0; j < c; ++j) {
          const Estimate e = column_estimate(rows, n_traj, wdt, f++);
          mean(i, j) = e.value;
          se(i, j) = e.std_error;
        }
      }
    };
    Matrix mx, sx, mu, su;
    fill(mx, sx, n, 1);
    fill(mu, su, p, 1);
    fill(em.mean.Z_xx, em.std_error.Z_xx, n, n);
    fill(em.mean.Z_xu, em.std_error.Z_xu, n, p);
    fill(em.mean.Z_uu, em.std_error.Z_uu, p, p);
    em.mean.m_x = mx;
    em.std_error.m_x = sx;
    em.mean.m_u = mu;
    em.std_error.m_u = su;
    em.mean.m = discounted_mass(alpha, horizon);
    em.std_error.m = 0.0;
    out.moments = std::move(em);
  }
  for (std::size_t c = 0; c < req.chance_probes.size(); ++c) {
    out.chance.push_back(column_estimate(rows, n_traj, wdt, f++));
  }
  return out;
}

SimulationStatistics batch_statistics(const TrajectoryBatch& batch, double alpha,
                                      const StatisticsRequest& req) {
  const int n = batch.state_dim, p = batch.input_dim, T = batch.horizon;
  const int wdt = LaneAccumulator::width(n, p, req);
  std::vector<double> rows(static_cast<std::size_t>(batch.n_traj * wdt));
  const auto& kern = simd::best_kernels();
  for (int first = 0; first < batch.n_traj; first += kBlockLanes) {
    const int L = std::min(kBlockLanes, batch.n_traj - first);
    LaneAccumulator acc(kern, n, p, L, req);
    std::vector<double> x(static_cast<std::size_t>(n * L)), u(static_cast<std::size_t>(p * L));
    double w = 1.0;
    for (int t = 0; t <= T; ++t) {
      for (int l = 0; l < L; ++l) {
        const auto xs = batch.state(first + l, t);
        const auto us = batch.input(first + l, t);
        for (int i = 0; i < n; ++i) x[static_cast<std::size_t>(i * L + l)] = xs(i);
        for (int j = 0; j < p; ++j) u[static_cast<std::size_t>(j * L + l)] = us(j);
      }
      acc.add(w, x.data(), u.data());
      w *= alpha;
    }
    acc.flush(first, rows);
  }
  return reduce(rows, batch.n_traj, n, p, alpha, T, req);
}

}  // namespace

int truncation_horizon(double alpha, double tail_tol) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must be in (0, 1)");
  if (!(tail_tol > 0.0)) throw std::invalid_argument("tail_tol must be positive");
  int T = 0;
  double tail = alpha / (1.0 - alpha);  // alpha^{T+1} / (1 - alpha)
  while (tail > tail_tol) {
    tail *= alpha;
    ++T;
  }
  return T;
}

int SimConfig::resolved_horizon(double alpha) const {
  if (horizon) {
    if (*horizon < 0) throw std::invalid_argument("horizon must be nonnegative");
    return *horizon;
  }
  return truncation_horizon(alpha, tail_tol);
}

namespace rng {

std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ULL;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBULL;
  x ^= x >> 31;
  return x;
}

void standard_normals(std::uint64_t seed, std::uint64_t trajectory, std::uint64_t step,
                      std::uint64_t stream, std::span<double> out) {
  constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
  std::uint64_t h = mix64(seed + kGolden);
  h = mix64(h ^ (trajectory * 0xD1B54A32D192ED03ULL));
  h = mix64(h ^ (step * 0xAEF17502108EF2D9ULL + stream));
  constexpr double kUnit = 0x1.0p-53;
  for (std::size_t i = 0; i < out.size(); i += 2) {
    const std::uint64_t j = i;  // word index of the pair's first word
    const std::uint64_t w1 = mix64(h ^ ((j + 1) * kGolden));
    const std::uint64_t w2 = mix64(h ^ ((j + 2) * kGolden));
    const double u1 = (static_cast<double>(w1 >> 11) + 1.0) * kUnit;  // (0, 1]
    const double u2 = static_cast<double>(w2 >> 11) * kUnit;          // [0, 1)
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    out[i] = radius * std::cos(angle);
    if (i + 1 < out.size()) out[i + 1] = radius * std::sin(angle);
  }
}

}  // namespace rng

Matrix psd_factor(const Matrix& Sigma, double rel_tol) {
  if (Sigma.rows() != Sigma.cols()) throw DimensionError("psd_factor: not square");
  const Eigen::Index n = Sigma.rows();
  Matrix A = 0.5 * (Sigma + Sigma.transpose());
  Matrix L = Matrix::Zero(n, n);
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
  const double scale = n ? A.diagonal().cwiseAbs().maxCoeff() : 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::Index piv = k;
    for (Eigen::Index j = k + 1; j < n; ++j) {
      if (A(j, j) > A(piv, piv)) piv = j;
    }
    if (!(A(piv, piv) > rel_tol * scale) || A(piv, piv) <= 0.0) break;
    if (piv != k) {
      A.row(k).swap(A.row(piv));
      A.col(k).swap(A.col(piv));
      L.row(k).swap(L.row(piv));
      std::swap(perm[static_cast<std::size_t>(k)], perm[static_cast<std::size_t>(piv)]);
    }
    const double d = std::sqrt(A(k, k));
    L(k, k) = d;
    for (Eigen::Index i = k + 1; i < n; ++i) L(i, k) = A(i, k) / d;
    for (Eigen::Index i = k + 1; i < n; ++i) {
      for (Eigen::Index j = k + 1; j <= i; ++j) {
        A(i, j) -= L(i, k) * L(j, k);
        A(j, i) = A(i, j);
      }
    }
  }
  // Row k of L belongs to original index perm[k].
  Matrix F = Matrix::Zero(n, n);
  for (Eigen::Index k = 0; k < n; ++k) F.row(perm[static_cast<std::size_t>(k)]) = L.row(k);
  return F;
}

Eigen::Map<const Vector> TrajectoryBatch::state(int traj, int t) const {
  const auto off = (static_cast<std::size_t>(traj) * (horizon + 1) + t) * state_dim;
  return Eigen::Map<const Vector>(states.data() + off, state_dim);
}

Eigen::Map<const Vector> TrajectoryBatch::input(int traj, int t) const {
  const auto off = (static_cast<std::size_t>(traj) * (horizon + 1) + t) * input_dim;
  return Eigen::Map<const Vector>(inputs.data() + off, input_dim);
}

TrajectoryBatch simulate_batch(const DiscountedLQGProblem& p, const AffineGaussianPolicy& policy,
                               const SimConfig& cfg) {
  const RolloutPlan plan = make_plan(p, policy, cfg);
  TrajectoryBatch batch;
  batch.n_traj = cfg.n_traj;
  batch.horizon = plan.horizon;
  batch.state_dim = plan.n;
  batch.input_dim = plan.p;
  const auto steps = static_cast<std::size_t>(plan.horizon + 1);
  batch.states.resize(static_cast<std::size_t>(cfg.n_traj) * steps * plan.n);
  batch.inputs.resize(static_cast<std::size_t>(cfg.n_traj) * steps * plan.p);
  for_each_block(cfg.n_traj, cfg.threads, [&](int first, int lanes) {
    rollout_block(plan, first, lanes, [&](int t, double, const double* x, const double* u) {
      for (int l = 0; l < lanes; ++l) {
        const auto base = static_cast<std::size_t>(first + l) * steps + t;
        for (int i = 0; i < plan.n; ++i) batch.states[base * plan.n + i] = x[i * lanes + l];
        for (int j = 0; j < plan.p; ++j) batch.inputs[base * plan.p + j] = u[j * lanes + l];
      }
    });
  });
  return batch;
}

Estimate estimate_discounted_cost(const TrajectoryBatch& batch, const QuadraticStageCost& cost,
                                  double alpha) {
  StatisticsRequest req;
  req.cost = cost;
  return *batch_statistics(batch, alpha, req).cost;
}

EmpiricalMoments estimate_occupation_moments(const TrajectoryBatch& batch, double alpha) {
  StatisticsRequest req;
  req.moments = true;
  return *batch_statistics(batch, alpha, req).moments;
}

Estimate estimate_chance_mass(const TrajectoryBatch& batch, const Vector& g, double h,
                              double alpha) {
  StatisticsRequest req;
  req.chance_probes.emplace_back(g, h);
  return batch_statistics(batch, alpha, req).chance.front();
}

SimulationStatistics simulate_statistics(const DiscountedLQGProblem& p,
                                         const AffineGaussianPolicy& policy, const SimConfig& cfg,
                                         const StatisticsRequest& req) {
  const RolloutPlan plan = make_plan(p, policy, cfg);
  if (req.cost && (req.cost->Q.rows() != plan.n || req.cost->R.rows() != plan.p)) {
    throw DimensionError("statistics cost does not match problem dimensions");
  }
  for (const auto& probe : req.chance_probes) {
    if (probe.first.size() != plan.n) throw DimensionError("chance probe has wrong dimension");
  }
  const int wdt = LaneAccumulator::width(plan.n, plan.p, req);
  std::vector<double> rows(static_cast<std::size_t>(cfg.n_traj) * wdt);
  for_each_block(cfg.n_traj, cfg.threads, [&](int first, int lanes) {
    LaneAccumulator acc(*plan.kern, plan.n, plan.p, lanes, req);
    rollout_block(plan, first, lanes, [&](int, double w, const double* x, const double* u) {
      acc.add(w, x, u);
    });
    acc.flush(first, rows);
  });
  return reduce(rows, cfg.n_traj, plan.n, plan.p, p.alpha, plan.horizon, req);
}

}  // namespace occlqg
