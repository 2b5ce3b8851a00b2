#include "occlqg/cli/commands.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "json_io.hpp"
#include "occlqg/chance.hpp"
#include "occlqg/cli/pipeline.hpp"
#include "occlqg/mc_sim.hpp"
#include "occlqg/riccati.hpp"
#include "occlqg_bundled_configs.hpp"

namespace occlqg::cli {

namespace {

class OutputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw OutputError("cannot write " + path.string());
  file << content;
  if (!file) throw OutputError("cannot write " + path.string());
}

void print_matrix(std::ostream& out, const std::string& name, const Matrix& M) {
  out << name << " =\n";
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    out << " ";
    for (Eigen::Index j = 0; j < M.cols(); ++j) out << " " << fmt17(M(i, j));
    out << "\n";
  }
}

/// Maps exceptions to exit codes and diagnostics.
template <class Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const SolverFailure& e) {
    err << "solver failure: " << e.what() << "\n";
    return kExitSolverFailure;
  } catch (const oracle::OracleError& e) {
    err << "oracle failure: " << e.what() << "\n";
    return kExitSolverFailure;
  } catch (const OutputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const std::exception& e) {
    err << "failure: " << e.what() << "\n";
    return kExitSolverFailure;
  }
}

void report_validation(const ValidationReport& report, std::ostream& err) {
  for (const auto& c : report.checks) {
    if (!c.passed) err << "warning: " << c.name << " failed (" << c.detail << ")\n";
  }
}

Json certificate_json(const CertificateReport& c) {
  return {{"primal_infeasibility", c.residuals.primal_infeas},
          {"dual_infeasibility", c.residuals.dual_infeas},
          {"duality_gap", c.residuals.duality_gap},
          {"min_eig_X", c.min_eig_X},
          {"min_eig_S", c.min_eig_S},
          {"complementarity", c.complementarity}};
}

Json moments_json(const OccupationMoments& m) {
  return {{"m", m.m},
          {"m_x", vector_json(m.m_x)},
          {"m_u", vector_json(m.m_u)},
          {"Z_xx", matrix_json(m.Z_xx)},
          {"Z_xu", matrix_json(m.Z_xu)},
          {"Z_uu", matrix_json(m.Z_uu)}};
}

Json result_json(const PipelineResult& r, const ValidationReport& validation) {
  Json j;
  j["status"] = {{"primal", to_string(r.primal.status)},
                 {"dual", to_string(r.dual.status)},
                 {"primal_iterations", r.primal.iterations},
                 {"dual_iterations", r.dual.iterations}};
  j["objective"] = {{"primal", r.primal_objective},
                    {"dual", r.dual_objective},
                    {"relative_gap", r.relative_gap}};
  j["certificates"] = {{"primal_program", certificate_json(r.primal_cert)},
                       {"dual_program", certificate_json(r.dual_cert)}};
  const auto& v = r.value.value;
  j["value_function"] = {{"P", matrix_json(v.P)},
                         {"q", vector_json(v.q)},
                         {"r", v.r},
                         {"expected_initial_value", expected_initial_value(v, r.problem.init)}};
  j["gamma"] = vector_json(r.value.gamma);
  j["moments"] = moments_json(r.moments);
  j["policy"] = {{"K", matrix_json(r.policy.K)},
                 {"k", vector_json(r.policy.k)},
                 {"cov", matrix_json(r.policy.cov)},
                 {"warning", r.policy.warning}};
  const auto& rc = r.riccati;
  j["riccati_check"] = {{"dare_converged", rc.dare_converged},
                        {"dare_residual", rc.dare_residual},
                        {"dare_residual_flipped_sign", rc.dare_residual_flipped_sign},
                        {"gain_gap", rc.gain_gap},
                        {"moment_gap", rc.moment_gap},
                        {"complementarity", rc.complementarity},
                        {"max_policy_cov_eig", rc.max_cov_eig}};
  Json constraints = Json::array();
  for (const auto& b : r.bounds) {
    Json c = {{"kind", b.chance_index >= 0 ? "chance" : "moment"},
              {"value", b.value},
              {"beta", b.beta},
              {"gamma", b.gamma},
              {"active", b.active}};
    if (b.chance_index >= 0) {
      const auto& ch = r.chance[static_cast<std::size_t>(b.chance_index)];
      c["g"] = vector_json(ch.spec.g);
      c["h"] = ch.spec.h;
      c["eps"] = ch.spec.eps;
      c["mode"] = std::string(to_string(ch.spec.mode));
      c["mass"] = ch.mass;
      c["truncation_bound"] = ch.truncation_bound;
    }
    constraints.push_back(std::move(c));
  }
  j["constraints"] = std::move(constraints);
  Json checks = Json::array();
  for (const auto& c : validation.checks) {
    checks.push_back(
        {{"name", c.name}, {"passed", c.passed}, {"value", c.value}, {"detail", c.detail}});
  }
  j["validation"] = std::move(checks);
  return j;
}

void print_summary(std::ostream& out, const std::string& label, const PipelineResult& r) {
  out << label << ": objective " << fmt17(r.primal_objective) << " (dual "
      << fmt17(r.dual_objective) << ", relative gap " << fmt17(r.relative_gap) << ")\n";
  for (std::size_t i = 0; i < r.bounds.size(); ++i) {
    const auto& b = r.bounds[i];
    out << "  bound " << i << ": value " << fmt17(b.value) << " <= " << fmt17(b.beta)
        << ", gamma " << fmt17(b.gamma) << (b.active ? " (active)" : "") << "\n";
  }
}

std::string trajectory_csv(const TrajectoryBatch& batch) {
  std::string s = "t";
  for (int i = 1; i <= batch.state_dim; ++i) s += ",x" + std::to_string(i);
  for (int j = 1; j <= batch.input_dim; ++j) s += ",u" + std::to_string(j);
  s += "\n";
  for (int t = 0; t <= batch.horizon; ++t) {
    s += std::to_string(t);
    const auto x = batch.state(0, t);
    const auto u = batch.input(0, t);
    for (Eigen::Index i = 0; i < x.size(); ++i) s += "," + fmt17(x(i));
    for (Eigen::Index j = 0; j < u.size(); ++j) s += "," + fmt17(u(j));
    s += "\n";
  }
  return s;
}

Json estimate_json(const Estimate& e) {
  return {{"estimate", e.value}, {"std_error", e.std_error}};
}

SimConfig sim_config(const SimSettings& s, int threads) {
  SimConfig sc;
  sc.n_traj = s.n_traj;
  sc.horizon = s.horizon;
  sc.seed = s.seed;
  sc.threads = threads;
  return sc;
}

/// Simulates one policy: writes trajectory_<label>.csv and returns the
/// estimates next to their model values.
Json simulate_policy(const ExperimentConfig& cfg, const PipelineResult& r, const std::string& label,
                     const std::filesystem::path& out_dir, int threads) {
  const auto& p = cfg.problem;
  const SimConfig sc = sim_config(cfg.sim, threads);
  const int T = sc.resolved_horizon(p.alpha);

  SimConfig one = sc;
  one.n_traj = 1;
  write_file(out_dir / ("trajectory_" + label + ".csv"), trajectory_csv(simulate_batch(p, r.policy, one)));

  StatisticsRequest req;
  req.cost = p.cost;
  for (const auto& c : p.chance_specs) req.chance_probes.emplace_back(c.g, c.h);
  const SimulationStatistics stats = simulate_statistics(p, r.policy, sc, req);

  Json j;
  j["label"] = label;
  j["n_traj"] = sc.n_traj;
  j["seed"] = sc.seed;
  j["horizon"] = T;
  j["truncation_bound"] = std::pow(p.alpha, T + 1) / (1.0 - p.alpha);
  Json cost = estimate_json(*stats.cost);
  cost["model"] = moment_cost(p.cost, r.moments);
  j["cost"] = std::move(cost);
  Json bounds = Json::array();
  for (const auto& b : p.moment_bounds) {
    StatisticsRequest breq;
    breq.cost = b.cost;
    Json e = estimate_json(*simulate_statistics(p, r.policy, sc, breq).cost);
    e["model"] = moment_cost(b.cost, r.moments);
    e["beta"] = b.beta;
    bounds.push_back(std::move(e));
  }
  j["bounds"] = std::move(bounds);
  Json chance = Json::array();
  for (std::size_t i = 0; i < p.chance_specs.size(); ++i) {
    const auto& c = p.chance_specs[i];
    Json e = estimate_json(stats.chance[i]);
    e["analytic"] = analytic_chance_mass(p, r.policy, c.g, c.h).mass;
    e["eps"] = c.eps;
    chance.push_back(std::move(e));
  }
  j["chance"] = std::move(chance);
  return j;
}

bool has_constraints(const DiscountedLQGProblem& p) {
  return !p.moment_bounds.empty() || !p.chance_specs.empty();
}

/// Simulates the configured policy, plus the unconstrained one when the
/// config has constraints. Writes estimates.json.
Json simulate_all(const ExperimentConfig& cfg, const std::filesystem::path& out_dir, int threads,
                  std::ostream& out) {
  Json runs = Json::array();
  auto run = [&](const std::string& label, const DiscountedLQGProblem& problem) {
    const PipelineResult r = run_pipeline(problem, cfg.solver);
    Json est = simulate_policy(cfg, r, label, out_dir, threads);
    out << label << ": discounted cost " << fmt17(est["cost"]["estimate"].get<double>())
        << " +- " << fmt17(est["cost"]["std_error"].get<double>()) << " (model "
        << fmt17(est["cost"]["model"].get<double>()) << ")\n";
    runs.push_back(std::move(est));
  };
  if (has_constraints(cfg.problem)) {
    run("constrained", cfg.problem);
    run("unconstrained", without_constraints(cfg.problem));
  } else {
    run("optimal", cfg.problem);
  }
  Json doc = {{"runs", runs}};
  write_file(out_dir / "estimates.json", pretty_json(doc));
  return doc;
}

struct SweepRow {
  std::optional<double> beta;
  double objective = 0.0;
  std::optional<double> bound_value;
  double gamma = 0.0;
};

std::optional<double> parse_sweep_entry(const std::string& s) {
  if (s == "inf" || s == "none" || s == "unconstrained") return std::nullopt;
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || !(v >= 0.0)) {
    throw ConfigError("--sweep", "expected a nonnegative number or 'inf', got '" + s + "'", "");
  }
  return v;
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg,
                                const std::vector<std::optional<double>>& betas, int points,
                                const std::filesystem::path& out_dir, Json& doc) {
  const auto& p = cfg.problem;
  if (p.state_dim() < 2) throw ConfigError("system", "ellipses need at least two states", "");
  std::vector<SweepRow> rows;
  Json entries = Json::array();
  for (std::size_t k = 0; k < betas.size(); ++k) {
    DiscountedLQGProblem q = without_constraints(p);
    if (betas[k]) {
      if (p.moment_bounds.empty()) {
        throw ConfigError("bounds", "a beta sweep needs at least one moment bound", "");
      }
      q = p;
      q.moment_bounds[0].beta = *betas[k];
    }
    const PipelineResult r = run_pipeline(q, cfg.solver);
    SweepRow row;
    row.beta = betas[k];
    row.objective = r.primal_objective;
    if (!p.moment_bounds.empty()) row.bound_value = moment_cost(p.moment_bounds[0].cost, r.moments);
    row.gamma = betas[k] ? r.value.gamma(0) : 0.0;
    rows.push_back(row);

    const Vector center = r.moments.m_x.head(2);
    const Matrix Z = r.moments.Z_xx.topLeftCorner(2, 2);
    const Matrix pts = ellipse_points(center, Z, points);
    std::string csv = "x1,x2\n";
    for (Eigen::Index i = 0; i < pts.rows(); ++i) csv += fmt17(pts(i, 0)) + "," + fmt17(pts(i, 1)) + "\n";
    const std::string file = "ellipse_" + std::to_string(k) + ".csv";
    write_file(out_dir / file, csv);

    Json e;
    e["index"] = k;
    e["beta"] = row.beta ? Json(*row.beta) : Json(nullptr);
    e["objective"] = row.objective;
    e["bound_value"] = row.bound_value ? Json(*row.bound_value) : Json(nullptr);
    e["gamma"] = row.gamma;
    e["center"] = vector_json(center);
    e["Z_xx"] = matrix_json(Z);
    e["file"] = file;
    entries.push_back(std::move(e));
  }
  doc = {{"points", points}, {"entries", entries}};
  write_file(out_dir / "sweep.json", pretty_json(doc));
  return rows;
}

struct Check {
  std::string name;
  double value = 0.0;
  std::string requirement;
  bool passed = false;
};

int finish_report(const std::string& case_name, const std::vector<Check>& checks,
                  const std::filesystem::path& out_dir, std::ostream& out) {
  bool all = true;
  Json list = Json::array();
  for (const auto& c : checks) {
    all = all && c.passed;
    out << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << fmt17(c.value) << " ("
        << c.requirement << ")\n";
    list.push_back({{"name", c.name},
                    {"value", c.value},
                    {"requirement", c.requirement},
                    {"passed", c.passed}});
  }
  write_file(out_dir / "report.json",
             pretty_json({{"case", case_name}, {"checks", list}, {"passed", all}}));
  out << case_name << ": " << (all ? "PASS" : "FAIL") << "\n";
  return all ? kExitOk : kExitAcceptanceFailure;
}

Check relative_check(const std::string& name, double value, double reference, double tol) {
  std::ostringstream req;
  req << "within " << tol * 100 << "% of " << reference;
  return {name, value, req.str(), std::abs(value - reference) <= tol * std::abs(reference)};
}

int reproduce_two_state(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                        std::ostream& out) {
  const auto& p = cfg.problem;
  const PipelineResult unc = run_pipeline(without_constraints(p), cfg.solver);
  const PipelineResult con = run_pipeline(p, cfg.solver);
  write_file(out_dir / "result_unconstrained.json",
             pretty_json(result_json(unc, validate_problem(without_constraints(p)))));
  write_file(out_dir / "result_constrained.json", pretty_json(result_json(con, validate_problem(p))));

  // Sweep from the unconstrained value of the bounded cost down to beta.
  const double loose = moment_cost(p.moment_bounds.at(0).cost, unc.moments);
  const double tight = p.moment_bounds[0].beta;
  std::vector<std::optional<double>> betas{std::nullopt};
  constexpr int kSteps = 4;
  for (int k = 1; k <= kSteps; ++k) betas.push_back(loose + (tight - loose) * k / kSteps);
  Json sweep;
  const auto rows = run_sweep(cfg, betas, 200, out_dir, sweep);
  bool objective_monotone = true, bound_monotone = true;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    objective_monotone = objective_monotone && rows[k].objective >= rows[k - 1].objective;
    bound_monotone = bound_monotone && *rows[k].bound_value <= *rows[k - 1].bound_value;
  }

  std::vector<Check> checks;
  checks.push_back(relative_check("unconstrained_cost", unc.primal_objective, 378.0, 0.02));
  checks.push_back(relative_check("constrained_cost", con.primal_objective, 981.0, 0.02));
  checks.push_back({"duality_gap", std::max(unc.relative_gap, con.relative_gap), "<= 1e-6",
                    std::max(unc.relative_gap, con.relative_gap) <= 1e-6});
  checks.push_back({"sweep_objective_monotone", static_cast<double>(rows.size()),
                    "objective non-increasing in beta", objective_monotone});
  checks.push_back({"sweep_bound_monotone", static_cast<double>(rows.size()),
                    "bounded cost non-increasing as beta tightens", bound_monotone});
  return finish_report("two-state", checks, out_dir, out);
}

int reproduce_helicopter(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                         int threads, std::ostream& out) {
  const auto& p = cfg.problem;
  const PipelineResult unc = run_pipeline(without_constraints(p), cfg.solver);
  const PipelineResult con = run_pipeline(p, cfg.solver);
  write_file(out_dir / "result_unconstrained.json",
             pretty_json(result_json(unc, validate_problem(without_constraints(p)))));
  write_file(out_dir / "result_constrained.json", pretty_json(result_json(con, validate_problem(p))));
  simulate_all(cfg, out_dir, threads, out);

  const MomentBound& energy = p.moment_bounds.at(0);
  const double beta = energy.beta;
  const double con_energy = moment_cost(energy.cost, con.moments);
  const double unc_energy = moment_cost(energy.cost, unc.moments);
  const QuadraticStageCost regulation{p.cost.Q, Matrix::Zero(p.input_dim(), p.input_dim())};
  const double con_reg = moment_cost(regulation, con.moments);
  const double unc_reg = moment_cost(regulation, unc.moments);

  std::vector<Check> checks;
  checks.push_back({"constrained_energy", con_energy, "<= beta + 1e-6", con_energy <= beta + 1e-6});
  checks.push_back({"constraint_active", con.value.gamma(0), "gamma > 1e-6", con.value.gamma(0) > 1e-6});
  checks.push_back({"unconstrained_energy", unc_energy, "> beta", unc_energy > beta});
  checks.push_back({"regulation_cost_increase", con_reg - unc_reg,
                    "constrained Tr(Q0 Z_xx) > unconstrained", con_reg > unc_reg});
  checks.push_back({"duality_gap", std::max(unc.relative_gap, con.relative_gap), "<= 1e-6",
                    std::max(unc.relative_gap, con.relative_gap) <= 1e-6});
  return finish_report("helicopter", checks, out_dir, out);
}

ExperimentConfig load_bundled(const std::string& name) {
  const auto text = bundled_config(name);
  if (!text) throw ConfigError("", "no bundled config named '" + name + "'", "");
  return parse_config(*text, "bundled:" + name);
}

}  // namespace

std::optional<std::string> bundled_config(const std::string& name) {
  if (name == "scalar") return std::string(bundled::kScalar);
  if (name == "two-state") return std::string(bundled::kTwoState);
  if (name == "helicopter") return std::string(bundled::kHelicopter);
  return std::nullopt;
}

Matrix ellipse_points(const Vector& center, const Matrix& Z, int n) {
  if (center.size() != 2 || Z.rows() != 2 || Z.cols() != 2) {
    throw DimensionError("ellipse_points needs a 2-vector and a 2x2 matrix");
  }
  if (n < 1) throw std::invalid_argument("ellipse_points needs at least one point");
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (Z + Z.transpose()));
  const Vector root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Matrix L = es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
  Matrix pts(n, 2);
  for (int k = 0; k < n; ++k) {
    const double t = 2.0 * std::numbers::pi * k / n;
    const Vector dir = Eigen::Vector2d(std::cos(t), std::sin(t));
    pts.row(k) = (center + L * dir).transpose();
  }
  return pts;
}

int cmd_solve(const SolveArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ExperimentConfig cfg = load_config(args.config);
    const ValidationReport validation = validate_problem(cfg.problem);
    report_validation(validation, err);
    const PipelineResult r = run_pipeline(cfg.problem, cfg.solver);
    write_file(args.out_dir / "result.json", pretty_json(result_json(r, validation)));
    print_summary(out, "solve", r);
    return static_cast<int>(kExitOk);
  });
}

int cmd_riccati(const RiccatiArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ExperimentConfig cfg = load_config(args.config);
    report_validation(validate_problem(cfg.problem), err);
    if (has_constraints(cfg.problem)) err << "note: constraints are ignored by the oracle\n";
    const auto sol = oracle::solve_unconstrained(cfg.problem);
    print_matrix(out, "P", sol.dare.P);
    print_matrix(out, "K", sol.K);
    out << "cost = " << fmt17(sol.cost) << "\n";
    out << "iterations = " << sol.dare.iterations << "\n";
    return static_cast<int>(kExitOk);
  });
}

int cmd_simulate(const SimulateArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    ExperimentConfig cfg = load_config(args.config);
    report_validation(validate_problem(cfg.problem), err);
    if (args.trajectories) {
      if (*args.trajectories < 1) throw ConfigError("--trajectories", "must be at least 1", "");
      cfg.sim.n_traj = *args.trajectories;
    }
    if (args.seed) cfg.sim.seed = *args.seed;
    if (args.horizon) {
      if (*args.horizon == "auto") {
        cfg.sim.horizon.reset();
      } else {
        std::size_t used = 0;
        int h = -1;
        try {
          h = std::stoi(*args.horizon, &used);
        } catch (const std::exception&) {
          used = 0;
        }
        if (used != args.horizon->size() || h < 0) {
          throw ConfigError("--horizon", "expected 'auto' or a nonnegative integer", "");
        }
        cfg.sim.horizon = h;
      }
    }
    simulate_all(cfg, args.out_dir, args.threads, out);
    return static_cast<int>(kExitOk);
  });
}

int cmd_ellipse(const EllipseArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ExperimentConfig cfg = load_config(args.config);
    report_validation(validate_problem(cfg.problem), err);
    if (args.points < 1) throw ConfigError("--points", "must be at least 1", "");
    std::vector<std::optional<double>> betas;
    for (const auto& s : args.sweep) betas.push_back(parse_sweep_entry(s));
    if (betas.empty()) {
      betas.push_back(std::nullopt);
      if (!cfg.problem.moment_bounds.empty()) betas.push_back(cfg.problem.moment_bounds[0].beta);
    }
    Json doc;
    const auto rows = run_sweep(cfg, betas, args.points, args.out_dir, doc);
    for (std::size_t k = 0; k < rows.size(); ++k) {
      out << "ellipse_" << k << ": beta " << (rows[k].beta ? fmt17(*rows[k].beta) : "inf")
          << ", objective " << fmt17(rows[k].objective) << "\n";
    }
    return static_cast<int>(kExitOk);
  });
}

int cmd_reproduce(const ReproduceArgs& args, std::ostream& out, std::ostream& err) {
  if (args.case_name != "two-state" && args.case_name != "helicopter") {
    err << "error: unknown case '" << args.case_name << "' (expected two-state or helicopter)\n";
    return kExitInputError;
  }
  return guarded(err, [&] {
    const ExperimentConfig cfg = load_bundled(args.case_name);
    if (args.case_name == "two-state") return reproduce_two_state(cfg, args.out_dir, out);
    return reproduce_helicopter(cfg, args.out_dir, args.threads, out);
  });
}

}  // namespace occlqg::cli
