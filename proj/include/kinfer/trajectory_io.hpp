#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "kinfer/dynamics.hpp"

namespace kinfer {

// Decimal rendering with 17 significant digits; parses back to the same double.
std::string format_double(double value);

// CSV `t,particle,c0,...,c{d-1}`, one row per (snapshot, particle).
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);

// Writes `<stem>.csv` and the `<stem>.json` sidecar (d, N, T, m, seed,
// kernel_name, step_dt).
void save_trajectory(const std::filesystem::path& csv_path, const Trajectory& traj);

// Reads the CSV and, when present, its sidecar. Throws IoError when the file
// cannot be opened and InputError when its content is malformed.
Trajectory load_trajectory(const std::filesystem::path& csv_path);

}  // namespace kinfer
