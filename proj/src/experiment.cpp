#include "kinfer/experiment.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>
#include <ostream>
#include <set>

#include "kinfer/diagnostics.hpp"
#include "kinfer/errors.hpp"
#include "kinfer/measures.hpp"
#include "kinfer/parallel.hpp"
#include "kinfer/report_io.hpp"
#include "kinfer/rng.hpp"
#include "kinfer/trajectory_io.hpp"

#ifndef KINFER_VERSION
#define KINFER_VERSION "0.0.0"
#endif

namespace kinfer {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

template <typename T>
T get_as(const json& j, const char* key) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw InputError(std::string("config key '") + key + "' has the wrong type");
  }
}

template <typename T>
std::vector<T> scalar_or_list(const json& j, const char* key) {
  if (j.is_array()) return get_as<std::vector<T>>(j, key);
  return {get_as<T>(j, key)};
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
}

// Reference kernel for a trajectory: the configured kernel when the names match.
std::optional<Kernel> reference_for(const ExperimentConfig& config, const std::string& kernel_name) {
  if (kernel_name.empty() || kernel_name == config.kernel.name) return make_kernel(config.kernel);
  try {
    return make_kernel(kernel_name);
  } catch (const LookupError&) {
    return std::nullopt;
  }
}

void write_reconstruction(const fs::path& path, const SplineModel& model, const Kernel* truth) {
  auto out = open_output(path);
  out << (truth ? "r,a_true,a_hat\n" : "r,a_hat\n");
  constexpr int kPoints = 501;
  for (int k = 0; k < kPoints; ++k) {
    const double r = model.space.length() * k / (kPoints - 1);
    out << format_double(r);
    if (truth) out << ',' << format_double((*truth)(r));
    out << ',' << format_double(model(r)) << '\n';
  }
}

fs::path stem_for(const ExperimentConfig& config, const std::string& what, int count) {
  return config.out / (what + "_N" + std::to_string(count));
}

struct LearnedRun {
  Trajectory trajectory;
  LearnReport report;
};

LearnedRun learn_from(const ExperimentConfig& config, const Trajectory& traj, const Kernel* reference, double M) {
  VelocitySamples velocities;
  LearnOptions options;
  options.reference = reference;
  if (config.exact_velocities) {
    if (!reference) throw InputError("--exact-velocities needs a known reference kernel");
    velocities = exact_velocities(traj, *reference);
    options.velocities = &velocities;
  }
  return {traj, learn_kernel(traj, config.basis_dim_for(traj.particle_count), M, options)};
}

Trajectory simulate_run(const ExperimentConfig& config, const Kernel& kernel, int count, std::size_t run_id) {
  const std::uint64_t seed = derive_seed(config.seed, run_id);
  const Positions x0 = sample_initial(config.d, count, config.L, seed);
  return simulate(kernel, x0, config.T, config.m, config.substeps, seed);
}

Positions fixture_positions(const std::string& name, double r) {
  Positions x;
  if (name == "pair") {
    x.resize(2, 2);
    x << 0.0, 0.0, r, 0.0;
  } else if (name == "triangle") {
    x.resize(3, 2);
    x << 0.0, 0.0, r, 0.0, 0.5 * r, 0.5 * std::sqrt(3.0) * r;
  } else if (name == "square") {
    // side sqrt(2) r, circumradius r
    x.resize(4, 2);
    x << r, 0.0, 0.0, r, -r, 0.0, 0.0, -r;
  } else {
    throw InputError("unknown fixture '" + name + "' (pair, triangle, square)");
  }
  return x;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  if (!j.is_object()) throw InputError("config must be a JSON object");
  static const std::set<std::string> known{"d",     "L",          "T",     "m",    "substeps", "kernel",
                                           "N",     "N_list",     "D",     "M",    "M_list",   "theta",
                                           "seed",  "out",        "trajectory",    "fixture",  "fixture_r",
                                           "exact_velocities"};
  for (const auto& item : j.items()) {
    if (!known.count(item.key())) throw InputError("unknown config key '" + item.key() + "'");
  }
  if (j.contains("N") && j.contains("N_list")) throw InputError("give either N or N_list");
  if (j.contains("M") && j.contains("M_list")) throw InputError("give either M or M_list");

  ExperimentConfig c;
  if (j.contains("d")) c.d = get_as<int>(j["d"], "d");
  if (j.contains("L")) c.L = get_as<double>(j["L"], "L");
  if (j.contains("T")) c.T = get_as<double>(j["T"], "T");
  if (j.contains("m")) c.m = get_as<int>(j["m"], "m");
  if (j.contains("substeps")) c.substeps = get_as<int>(j["substeps"], "substeps");
  if (j.contains("kernel")) {
    const auto& k = j["kernel"];
    if (k.is_string()) {
      c.kernel = {k.get<std::string>(), {}};
    } else if (k.is_object()) {
      for (const auto& item : k.items()) {
        if (item.key() != "name" && item.key() != "params") throw InputError("unknown kernel key '" + item.key() + "'");
      }
      c.kernel.name = get_as<std::string>(k.at("name"), "kernel.name");
      if (k.contains("params")) c.kernel.params = get_as<std::map<std::string, double>>(k["params"], "kernel.params");
    } else {
      throw InputError("config key 'kernel' must be a name or {name, params}");
    }
  }
  if (j.contains("N")) c.N_list = scalar_or_list<int>(j["N"], "N");
  if (j.contains("N_list")) c.N_list = scalar_or_list<int>(j["N_list"], "N_list");
  if (j.contains("D")) {
    if (j["D"].is_string()) {
      c.D_rule = j["D"].get<std::string>();
    } else {
      c.D = get_as<int>(j["D"], "D");
    }
  }
  if (j.contains("M")) c.M_list = scalar_or_list<double>(j["M"], "M");
  if (j.contains("M_list")) c.M_list = scalar_or_list<double>(j["M_list"], "M_list");
  if (j.contains("theta")) c.theta = get_as<int>(j["theta"], "theta");
  if (j.contains("seed")) c.seed = get_as<std::uint64_t>(j["seed"], "seed");
  if (j.contains("out")) c.out = get_as<std::string>(j["out"], "out");
  if (j.contains("trajectory")) c.trajectory = get_as<std::string>(j["trajectory"], "trajectory");
  if (j.contains("fixture")) c.fixture = get_as<std::string>(j["fixture"], "fixture");
  if (j.contains("fixture_r")) c.fixture_r = get_as<double>(j["fixture_r"], "fixture_r");
  if (j.contains("exact_velocities")) c.exact_velocities = get_as<bool>(j["exact_velocities"], "exact_velocities");

  if (c.d < 1 || !(c.L > 0.0) || !(c.T > 0.0) || c.m < 1 || c.substeps < 1) {
    throw InputError("d, L, T, m and substeps must be positive");
  }
  if (c.N_list.empty()) throw InputError("N list is empty");
  for (int n : c.N_list) {
    if (n < 1) throw InputError("particle counts must be positive");
    if (c.basis_dim_for(n) < 2) throw InputError("D rule yields fewer than two basis functions for N = " + std::to_string(n));
  }
  if (c.M_list.empty()) throw InputError("M list is empty");
  for (double M : c.M_list) {
    if (!(M > 0.0)) throw InputError("M values must be positive");
  }
  if (!(c.fixture_r > 0.0)) throw InputError("fixture_r must be positive");
  make_kernel(c.kernel);  // validates name and parameters
  return c;
}

ordered_json ExperimentConfig::to_json() const {
  ordered_json j;
  j["d"] = d;
  j["L"] = L;
  j["T"] = T;
  j["m"] = m;
  j["substeps"] = substeps;
  ordered_json params = ordered_json::object();
  for (const auto& [k, v] : kernel.params) params[k] = v;
  j["kernel"] = {{"name", kernel.name}, {"params", params}};
  j["N"] = N_list;
  if (D) {
    j["D"] = *D;
  } else {
    j["D"] = D_rule;
  }
  j["M"] = M_list;
  j["theta"] = theta;
  j["seed"] = seed;
  j["out"] = out.string();
  if (trajectory) j["trajectory"] = trajectory->string();
  if (fixture) j["fixture"] = *fixture;
  j["fixture_r"] = fixture_r;
  j["exact_velocities"] = exact_velocities;
  return j;
}

int ExperimentConfig::basis_dim_for(int count) const {
  if (D) return *D;
  if (D_rule == "2N") return 2 * count;
  if (D_rule == "3N-5") return 3 * count - 5;
  throw InputError("unknown D rule '" + D_rule + "' (use an integer, \"2N\" or \"3N-5\")");
}

RunSetup ExperimentConfig::setup_for(int count, double M) const {
  return RunSetup{d, L, T, m, substeps, count, basis_dim_for(count), M};
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw InputError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return ExperimentConfig::from_json(j);
}

std::string config_hash(const ExperimentConfig& config) {
  const std::string text = config.to_json().dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

RunManifest cmd_simulate(const ExperimentConfig& config) {
  const Kernel kernel = make_kernel(config.kernel);
  std::vector<Trajectory> runs(config.N_list.size());
  parallel_for(runs.size(), [&](std::size_t k) { runs[k] = simulate_run(config, kernel, config.N_list[k], k); });
  ensure_dir(config.out);
  RunManifest manifest;
  for (std::size_t k = 0; k < runs.size(); ++k) {
    const fs::path csv = stem_for(config, "traj", config.N_list[k]).string() + ".csv";
    save_trajectory(csv, runs[k]);
    manifest.artifacts.push_back(csv);
    manifest.artifacts.push_back(fs::path(csv).replace_extension(".json"));
  }
  return manifest;
}

RunManifest cmd_learn(const ExperimentConfig& config) {
  const double M = config.M_list.front();
  std::vector<LearnedRun> runs;
  std::vector<std::optional<Kernel>> references;

  if (config.trajectory) {
    if (!fs::exists(*config.trajectory)) throw InputError("trajectory file not found: " + config.trajectory->string());
    Trajectory traj = load_trajectory(*config.trajectory);
    references.push_back(reference_for(config, traj.kernel_name));
    const Kernel* ref = references.back() ? &*references.back() : nullptr;
    runs.push_back(learn_from(config, traj, ref, M));
  } else {
    const Kernel kernel = make_kernel(config.kernel);
    runs.resize(config.N_list.size());
    references.assign(config.N_list.size(), kernel);
    parallel_for(runs.size(), [&](std::size_t k) {
      runs[k] = learn_from(config, simulate_run(config, kernel, config.N_list[k], k), &kernel, M);
    });
  }

  ensure_dir(config.out);
  RunManifest manifest;
  for (std::size_t k = 0; k < runs.size(); ++k) {
    const int count = runs[k].trajectory.particle_count;
    const fs::path report = stem_for(config, "learn", count).string() + ".json";
    const fs::path recon = stem_for(config, "reconstruction", count).string() + ".csv";
    write_json(report, to_json(runs[k].report));
    write_reconstruction(recon, runs[k].report.model, references[k] ? &*references[k] : nullptr);
    manifest.artifacts.push_back(report);
    manifest.artifacts.push_back(recon);
    manifest.non_converged |= !runs[k].report.converged;
  }
  return manifest;
}

RunManifest cmd_sweep_m(const ExperimentConfig& config) {
  const Kernel kernel = make_kernel(config.kernel);
  std::vector<SweepResult> sweeps(config.N_list.size());
  for (std::size_t k = 0; k < sweeps.size(); ++k) {
    const Trajectory traj = simulate_run(config, kernel, config.N_list[k], k);
    VelocitySamples velocities;
    LearnOptions options;
    options.reference = &kernel;
    if (config.exact_velocities) {
      velocities = exact_velocities(traj, kernel);
      options.velocities = &velocities;
    }
    sweeps[k] = m_sweep(traj, config.basis_dim_for(config.N_list[k]), config.M_list, options);
  }
  ensure_dir(config.out);
  RunManifest manifest;
  for (std::size_t k = 0; k < sweeps.size(); ++k) {
    const fs::path path = stem_for(config, "sweep_m", config.N_list[k]).string() + ".csv";
    auto out = open_output(path);
    out << "M,objective,Mstar\n";
    for (std::size_t i = 0; i < sweeps[k].M.size(); ++i) {
      out << format_double(sweeps[k].M[i]) << ',' << format_double(sweeps[k].objective[i]) << ','
          << format_double(sweeps[k].M_star) << '\n';
      manifest.non_converged |= !sweeps[k].reports[i].converged;
    }
    manifest.artifacts.push_back(path);
  }
  return manifest;
}

RunManifest cmd_montecarlo(const ExperimentConfig& config) {
  if (config.theta < 2) throw InputError("montecarlo needs theta >= 2");
  const Kernel kernel = make_kernel(config.kernel);
  const int count = config.N_list.front();
  const auto result =
      montecarlo_average(kernel, config.setup_for(count, config.M_list.front()), config.theta, config.seed,
                         config.exact_velocities);
  ensure_dir(config.out);
  RunManifest manifest;
  const fs::path band = stem_for(config, "montecarlo", count).string() + ".csv";
  {
    auto out = open_output(band);
    out << "r,mean,lo,hi\n";
    for (int l = 0; l < result.mean.space.dim(); ++l) {
      out << format_double(result.mean.space.knot(l)) << ',' << format_double(result.mean.coeffs[l]) << ','
          << format_double(result.lo[l]) << ',' << format_double(result.hi[l]) << '\n';
    }
  }
  ordered_json j;
  j["mean"] = to_json(result.mean);
  j["runs"] = ordered_json::array();
  for (const auto& r : result.runs) {
    j["runs"].push_back(to_json(r));
    manifest.non_converged |= !r.converged;
  }
  const fs::path summary = stem_for(config, "montecarlo", count).string() + ".json";
  write_json(summary, j);
  manifest.artifacts = {band, summary};
  return manifest;
}

RunManifest cmd_diagnose(const ExperimentConfig& config) {
  const Kernel kernel = make_kernel(config.kernel);
  RunManifest manifest;

  if (config.fixture) {
    const Positions x = fixture_positions(*config.fixture, config.fixture_r);
    const Misfit K = Misfit::between(kernel, zero_kernel());
    const auto rep = coercivity_at(x, K);
    const double r = config.fixture_r;
    ordered_json j;
    j["fixture"] = *config.fixture;
    j["r"] = r;
    j["coercivity"] = to_json(rep);
    if (*config.fixture == "triangle") {
      j["identity"] = "lhs = K(r)^2 / 3";
      j["predicted_lhs"] = K(r) * K(r) / 3.0;
    } else if (*config.fixture == "square") {
      const double s = K(2.0 * r) + std::numbers::sqrt2 * K(std::numbers::sqrt2 * r);
      j["identity"] = "lhs = (K(2r) + sqrt(2) K(sqrt(2) r))^2 / 16";
      j["predicted_lhs"] = s * s / 16.0;
    } else {
      j["identity"] = "lhs / rhs is configuration independent";
      j["predicted_ratio"] = 0.5;
    }
    ensure_dir(config.out);
    const fs::path path = config.out / ("coercivity_" + *config.fixture + ".json");
    write_json(path, j);
    manifest.artifacts.push_back(path);
    return manifest;
  }

  struct Row {
    int count;
    CoercivityReport coercivity;
    std::optional<double> cT;
    LearnReport report;
    BoundCheck bound;
  };
  std::vector<Row> rows(config.N_list.size());
  parallel_for(rows.size(), [&](std::size_t k) {
    const int count = config.N_list[k];
    const LearnedRun run = learn_from(config, simulate_run(config, kernel, count, k), &kernel, config.M_list.front());
    Row row{count, discrete_coercivity(run.trajectory, Misfit::between(kernel, run.report.model)), std::nullopt,
            run.report, {}};
    if (count >= 2) {
      try {
        row.cT = estimate_cT(run.trajectory, kernel, run.report.model);
      } catch (const DegenerateMisfitError&) {
      }
    }
    row.bound = trajectory_bound_check(kernel, run.report.model.as_kernel(), run.trajectory.positions.front(),
                                       config.T, config.m, config.substeps);
    rows[k] = std::move(row);
  });

  ensure_dir(config.out);
  const fs::path csv = config.out / "coercivity.csv";
  {
    auto out = open_output(csv);
    out << "N,lhs,rhs,ratio\n";
    for (const auto& row : rows) {
      out << row.count << ',' << format_double(row.coercivity.lhs) << ','
          << format_double(row.coercivity.rhs_unscaled) << ',' << format_double(row.coercivity.ratio) << '\n';
    }
  }
  ordered_json j = ordered_json::array();
  for (const auto& row : rows) {
    ordered_json r;
    r["N"] = row.count;
    r["coercivity"] = to_json(row.coercivity);
    r["empirical_cT"] = row.cT ? ordered_json(*row.cT) : ordered_json(nullptr);
    r["objective"] = row.report.objective;
    r["l2_rho_error"] = row.report.l2_rho_error ? ordered_json(*row.report.l2_rho_error) : ordered_json(nullptr);
    r["trajectory_bound"] = to_json(row.bound);
    j.push_back(r);
    manifest.non_converged |= !row.report.converged;
  }
  const fs::path report = config.out / "diagnose.json";
  write_json(report, j);
  manifest.artifacts = {csv, report};
  return manifest;
}

int run_command(const std::string& command, const ExperimentConfig& config, std::ostream& err) {
  const auto start = std::chrono::steady_clock::now();
  try {
    RunManifest manifest;
    if (command == "simulate") {
      manifest = cmd_simulate(config);
    } else if (command == "learn") {
      manifest = cmd_learn(config);
    } else if (command == "sweep-m") {
      manifest = cmd_sweep_m(config);
    } else if (command == "montecarlo") {
      manifest = cmd_montecarlo(config);
    } else if (command == "diagnose") {
      manifest = cmd_diagnose(config);
    } else {
      err << "unknown command '" << command << "'\n";
      return 2;
    }
    manifest.config_hash = config_hash(config);
    manifest.tool_version = KINFER_VERSION;
    manifest.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    ordered_json j;
    j["command"] = command;
    j["config_hash"] = manifest.config_hash;
    j["config"] = config.to_json();
    j["artifacts"] = ordered_json::array();
    for (const auto& a : manifest.artifacts) j["artifacts"].push_back(a.string());
    j["wall_clock_seconds"] = manifest.wall_clock_seconds;
    j["tool_version"] = manifest.tool_version;
    j["converged"] = !manifest.non_converged;
    write_json(config.out / "manifest.json", j);

    if (manifest.non_converged) {
      err << "warning: a constrained least-squares solve did not converge; see the reports\n";
      return 1;
    }
    return 0;
  } catch (const BlowUpError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace kinfer
