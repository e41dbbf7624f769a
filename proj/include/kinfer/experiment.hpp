#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "kinfer/kernel.hpp"
#include "kinfer/learn.hpp"

namespace kinfer {

// One JSON document drives every command; unknown keys are rejected.
struct ExperimentConfig {
  int d = 2;
  double L = 3.0;
  double T = 0.5;
  int m = 50;
  int substeps = 10;
  KernelSpec kernel{"trunc_lj", {}};
  std::vector<int> N_list{10};
  // Either an explicit D or one of the rules "2N", "3N-5".
  std::optional<int> D;
  std::string D_rule = "2N";
  std::vector<double> M_list{100.0};
  int theta = 5;
  std::uint64_t seed = 0;
  std::filesystem::path out = ".";
  std::optional<std::filesystem::path> trajectory;
  // Static polygon fixture for `diagnose`: "pair", "triangle" or "square".
  std::optional<std::string> fixture;
  double fixture_r = 1.0;
  bool exact_velocities = false;

  static ExperimentConfig from_json(const nlohmann::json& j);
  nlohmann::ordered_json to_json() const;

  int basis_dim_for(int count) const;
  RunSetup setup_for(int count, double M) const;
};

ExperimentConfig load_config(const std::filesystem::path& path);

struct RunManifest {
  std::string config_hash;
  std::vector<std::filesystem::path> artifacts;
  double wall_clock_seconds = 0.0;
  std::string tool_version;
  // Some QP solve stopped before meeting its tolerances.
  bool non_converged = false;
};

// FNV-1a over the canonical JSON dump of the config.
std::string config_hash(const ExperimentConfig& config);

RunManifest cmd_simulate(const ExperimentConfig& config);
RunManifest cmd_learn(const ExperimentConfig& config);
RunManifest cmd_sweep_m(const ExperimentConfig& config);
RunManifest cmd_montecarlo(const ExperimentConfig& config);
RunManifest cmd_diagnose(const ExperimentConfig& config);

// Runs a named command and writes manifest.json. Returns the process exit
// code: 0 success, 1 numerical non-convergence, 2 bad input or config, 3 I/O.
int run_command(const std::string& command, const ExperimentConfig& config, std::ostream& err);

}  // namespace kinfer
