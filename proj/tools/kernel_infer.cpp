#include <CLI11.hpp>
#include <iostream>

#include "kinfer/errors.hpp"
#include "kinfer/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Learn interaction kernels of first-order particle systems"};
  app.set_version_flag("--version", std::string(KINFER_VERSION));

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool exact = false;

  const std::vector<std::pair<std::string, std::string>> commands{
      {"simulate", "integrate the particle system and write trajectories"},
      {"learn", "fit the constrained spline estimator for each N"},
      {"sweep-m", "objective as a function of the constraint level M"},
      {"montecarlo", "average of independent fits with pointwise quantile bands"},
      {"diagnose", "coercivity fixtures, c_T and trajectory-bound checks"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "JSON config file")->required();
    sub->add_option("--out", out_dir, "output directory (overrides config)");
    sub->add_option("--seed", seed, "master seed (overrides config)");
    sub->add_flag("--exact-velocities", exact, "use exact velocities instead of finite differences");
  }
  app.require_subcommand(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  auto* sub = app.get_subcommand(command);
  kinfer::ExperimentConfig config;
  try {
    config = kinfer::load_config(config_path);
  } catch (const kinfer::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  if (sub->count("--out")) config.out = out_dir;
  if (sub->count("--seed")) config.seed = seed;
  if (exact) config.exact_velocities = true;

  return kinfer::run_command(command, config, std::cerr);
}
