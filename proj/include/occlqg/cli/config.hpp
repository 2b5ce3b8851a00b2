#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "occlqg/problem.hpp"

namespace occlqg::cli {

/// Malformed or inconsistent configuration. what() carries
/// "<source>:<line>:<column>: <field>: <message>" when a location is known.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, std::string message, std::string location);

  const std::string& field() const { return field_; }
  const std::string& message() const { return message_; }
  const std::string& location() const { return location_; }

 private:
  std::string field_;
  std::string message_;
  std::string location_;
};

struct SolverSettings {
  double tol = 1e-9;
  int max_iter = 200;
};

struct SimSettings {
  int n_traj = 10000;
  std::uint64_t seed = 1;
  /// Empty = derived from the discount factor.
  std::optional<int> horizon;
};

/// Continuous-time data discretized by forward Euler:
/// A = I + t_s Ac, B = t_s Bc.
struct EulerModel {
  Matrix Ac;
  Matrix Bc;
  double t_s = 0.1;
};

struct ExperimentConfig {
  std::string description;
  /// Set when the system was given as {Ac, Bc, t_s}; problem.system then
  /// holds the discretized matrices.
  std::optional<EulerModel> euler;
  DiscountedLQGProblem problem;
  SolverSettings solver;
  SimSettings sim;
};

ExperimentConfig parse_config(std::string_view text, std::string_view source = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

/// Pretty-printed JSON that parse_config maps back to an identical config.
std::string emit_config(const ExperimentConfig& cfg);

bool same_config(const ExperimentConfig& a, const ExperimentConfig& b);

std::string_view to_string(ChanceMode mode);

}  // namespace occlqg::cli
