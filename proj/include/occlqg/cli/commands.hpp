#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "occlqg/cli/config.hpp"

namespace occlqg::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitSolverFailure = 1,
  kExitInputError = 2,
  kExitAcceptanceFailure = 3,
};

struct SolveArgs {
  std::filesystem::path config;
  std::filesystem::path out_dir = ".";
};

/// Writes <out_dir>/result.json.
int cmd_solve(const SolveArgs& args, std::ostream& out, std::ostream& err);

struct RiccatiArgs {
  std::filesystem::path config;
};

/// Oracle only: prints P, K and the optimal cost of the unconstrained problem.
int cmd_riccati(const RiccatiArgs& args, std::ostream& out, std::ostream& err);

struct SimulateArgs {
  std::filesystem::path config;
  std::filesystem::path out_dir = ".";
  std::optional<int> trajectories;
  std::optional<std::uint64_t> seed;
  /// "auto" or a nonnegative integer.
  std::optional<std::string> horizon;
  /// 0 = hardware concurrency; outputs do not depend on it.
  int threads = 0;
};

/// Writes trajectory_<label>.csv (one realization) and estimates.json for
/// the optimal policy, or for the constrained and unconstrained policies when
/// the config has constraints.
int cmd_simulate(const SimulateArgs& args, std::ostream& out, std::ostream& err);

struct EllipseArgs {
  std::filesystem::path config;
  std::filesystem::path out_dir = ".";
  int points = 200;
  /// Values for the first bound's beta; "inf" or "none" drops all
  /// constraints. Empty = unconstrained plus the configured problem.
  std::vector<std::string> sweep;
};

/// Writes ellipse_<k>.csv per sweep entry and sweep.json.
int cmd_ellipse(const EllipseArgs& args, std::ostream& out, std::ostream& err);

struct ReproduceArgs {
  /// "two-state" or "helicopter".
  std::string case_name;
  std::filesystem::path out_dir = ".";
  int threads = 0;
};

/// Runs a bundled case study and checks its acceptance thresholds; writes
/// report.json plus the per-solve outputs.
int cmd_reproduce(const ReproduceArgs& args, std::ostream& out, std::ostream& err);

/// Bundled configs: "scalar", "two-state", "helicopter".
std::optional<std::string> bundled_config(const std::string& name);

/// Points c + L (cos t_k, sin t_k), t_k = 2 pi k / n, with L the symmetric
/// square root of the 2x2 matrix Z: the ellipse (x - c)^T Z^{-1} (x - c) = 1.
Matrix ellipse_points(const Vector& center, const Matrix& Z, int n);

}  // namespace occlqg::cli
