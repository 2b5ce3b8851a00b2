#include <iostream>

#include <CLI11.hpp>

#include "occlqg/cli/commands.hpp"

using namespace occlqg::cli;

int main(int argc, char** argv) {
  CLI::App app{"Discounted LQG control through occupation-measure semidefinite programs"};
  app.require_subcommand(1);

  SolveArgs solve;
  auto* solve_cmd = app.add_subcommand("solve", "Solve the primal and dual programs; writes result.json");
  solve_cmd->add_option("config", solve.config, "Experiment config (JSON)")->required();
  solve_cmd->add_option("--out", solve.out_dir, "Output directory");

  RiccatiArgs riccati;
  auto* riccati_cmd =
      app.add_subcommand("riccati", "Unconstrained optimum from the Riccati recursion");
  riccati_cmd->add_option("config", riccati.config, "Experiment config (JSON)")->required();

  SimulateArgs simulate;
  std::uint64_t seed = 0;
  int trajectories = 0;
  std::string horizon;
  auto* sim_cmd = app.add_subcommand(
      "simulate", "Monte Carlo rollouts; writes trajectory_<label>.csv and estimates.json");
  sim_cmd->add_option("config", simulate.config, "Experiment config (JSON)")->required();
  sim_cmd->add_option("--out", simulate.out_dir, "Output directory");
  auto* traj_opt = sim_cmd->add_option("--trajectories", trajectories, "Number of trajectories");
  auto* seed_opt = sim_cmd->add_option("--seed", seed, "Random seed");
  auto* horizon_opt = sim_cmd->add_option("--horizon", horizon, "'auto' or a step count");
  sim_cmd->add_option("--threads", simulate.threads, "Worker threads, 0 = all cores");

  EllipseArgs ellipse;
  auto* ellipse_cmd = app.add_subcommand(
      "ellipse", "Occupancy ellipses of the first two states over a sweep of the first bound");
  ellipse_cmd->add_option("config", ellipse.config, "Experiment config (JSON)")->required();
  ellipse_cmd->add_option("--out", ellipse.out_dir, "Output directory");
  ellipse_cmd->add_option("--points", ellipse.points, "Points per ellipse");
  ellipse_cmd->add_option("--sweep", ellipse.sweep, "Values of beta, or 'inf' for no constraint")
      ->delimiter(',');

  ReproduceArgs reproduce;
  auto* reproduce_cmd =
      app.add_subcommand("reproduce", "Run a bundled case study and check its results");
  reproduce_cmd->add_option("case", reproduce.case_name, "two-state or helicopter")->required();
  reproduce_cmd->add_option("--out", reproduce.out_dir, "Output directory");
  reproduce_cmd->add_option("--threads", reproduce.threads, "Worker threads, 0 = all cores");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInputError;
  }

  if (*solve_cmd) return cmd_solve(solve, std::cout, std::cerr);
  if (*riccati_cmd) return cmd_riccati(riccati, std::cout, std::cerr);
  if (*sim_cmd) {
    if (*traj_opt) simulate.trajectories = trajectories;
    if (*seed_opt) simulate.seed = seed;
    if (*horizon_opt) simulate.horizon = horizon;
    return cmd_simulate(simulate, std::cout, std::cerr);
  }
  if (*ellipse_cmd) return cmd_ellipse(ellipse, std::cout, std::cerr);
  return cmd_reproduce(reproduce, std::cout, std::cerr);
}
