#include "kinfer/trajectory_io.hpp"

#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <vector>

#include "kinfer/errors.hpp"

namespace kinfer {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_double(const std::string& text, int line_no) {
  const char* begin = text.c_str();
  char* end = nullptr;
  errno = 0;
  const double value = std::strtod(begin, &end);
  if (end == begin || *end != '\0' || errno == ERANGE) {
    throw InputError("trajectory CSV line " + std::to_string(line_no) + ": bad number '" + text + "'");
  }
  return value;
}

std::filesystem::path sidecar_path(const std::filesystem::path& csv_path) {
  auto p = csv_path;
  p.replace_extension(".json");
  return p;
}

}  // namespace

std::string format_double(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  out << "t,particle";
  for (int l = 0; l < traj.dim; ++l) out << ",c" << l;
  out << '\n';
  for (std::size_t k = 0; k < traj.positions.size(); ++k) {
    const auto& x = traj.positions[k];
    const std::string t = format_double(traj.times[k]);
    for (int i = 0; i < traj.particle_count; ++i) {
      out << t << ',' << i;
      for (int l = 0; l < traj.dim; ++l) out << ',' << format_double(x(i, l));
      out << '\n';
    }
  }
}

void save_trajectory(const std::filesystem::path& csv_path, const Trajectory& traj) {
  std::ofstream csv(csv_path);
  if (!csv) throw IoError("cannot write " + csv_path.string());
  write_trajectory_csv(csv, traj);
  if (!csv) throw IoError("write failed for " + csv_path.string());

  nlohmann::ordered_json meta;
  meta["d"] = traj.dim;
  meta["N"] = traj.particle_count;
  meta["T"] = traj.horizon();
  meta["m"] = traj.intervals();
  meta["seed"] = traj.seed;
  meta["kernel_name"] = traj.kernel_name;
  meta["step_dt"] = traj.step_dt;
  std::ofstream side(sidecar_path(csv_path));
  if (!side) throw IoError("cannot write " + sidecar_path(csv_path).string());
  side << meta.dump(2) << '\n';
}

Trajectory load_trajectory(const std::filesystem::path& csv_path) {
  std::ifstream in(csv_path);
  if (!in) throw IoError("cannot open trajectory file " + csv_path.string());

  std::string line;
  if (!std::getline(in, line)) throw InputError("trajectory CSV is empty: " + csv_path.string());
  const auto header = split_csv_line(line);
  if (header.size() < 3 || header[0] != "t" || header[1] != "particle") {
    throw InputError("trajectory CSV header must start with t,particle,c0");
  }
  const int dim = static_cast<int>(header.size()) - 2;
  for (int l = 0; l < dim; ++l) {
    if (header[l + 2] != "c" + std::to_string(l)) throw InputError("unexpected column '" + header[l + 2] + "'");
  }

  std::vector<double> times;
  std::vector<std::vector<double>> rows;  // per snapshot, flattened N x d
  int line_no = 1;
  int expected_particle = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (static_cast<int>(fields.size()) != dim + 2) {
      throw InputError("trajectory CSV line " + std::to_string(line_no) + ": wrong field count");
    }
    const double t = parse_double(fields[0], line_no);
    int particle = -1;
    auto [ptr, ec] = std::from_chars(fields[1].data(), fields[1].data() + fields[1].size(), particle);
    if (ec != std::errc() || ptr != fields[1].data() + fields[1].size()) {
      throw InputError("trajectory CSV line " + std::to_string(line_no) + ": bad particle index");
    }
    if (particle == 0) {
      if (!rows.empty() && expected_particle != static_cast<int>(rows.front().size()) / dim) {
        throw InputError("trajectory CSV: snapshots have different particle counts");
      }
      times.push_back(t);
      rows.emplace_back();
      expected_particle = 0;
    } else if (rows.empty() || t != times.back()) {
      throw InputError("trajectory CSV line " + std::to_string(line_no) + ": snapshot must start at particle 0");
    }
    if (particle != expected_particle) {
      throw InputError("trajectory CSV line " + std::to_string(line_no) + ": particles out of order");
    }
    ++expected_particle;
    for (int l = 0; l < dim; ++l) rows.back().push_back(parse_double(fields[l + 2], line_no));
  }
  if (rows.size() < 2) throw InputError("trajectory needs at least two snapshots");

  Trajectory traj;
  traj.dim = dim;
  traj.particle_count = static_cast<int>(rows.front().size()) / dim;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (static_cast<int>(rows[k].size()) != traj.particle_count * dim) {
      throw InputError("trajectory CSV: snapshots have different particle counts");
    }
    if (k > 0 && !(times[k] > times[k - 1])) throw InputError("trajectory times must increase");
    traj.positions.push_back(Eigen::Map<const Positions>(rows[k].data(), traj.particle_count, dim));
  }
  traj.times = std::move(times);

  const auto side = sidecar_path(csv_path);
  if (std::ifstream meta_in{side}) {
    try {
      const auto meta = nlohmann::json::parse(meta_in);
      traj.seed = meta.value("seed", std::uint64_t{0});
      traj.kernel_name = meta.value("kernel_name", std::string{});
      traj.step_dt = meta.value("step_dt", 0.0);
      if (meta.value("N", traj.particle_count) != traj.particle_count || meta.value("d", dim) != dim) {
        throw InputError("sidecar " + side.string() + " disagrees with the CSV shape");
      }
    } catch (const nlohmann::json::exception& e) {
      throw InputError("bad sidecar " + side.string() + ": " + e.what());
    }
  }
  return traj;
}

}  // namespace kinfer
