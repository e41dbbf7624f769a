#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "kinfer/kernel.hpp"

namespace kinfer {

// Particle configuration: one row per particle, one column per coordinate.
using Positions = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Positions of N particles in R^d at m + 1 uniform instants 0 = t_0 < ... < t_m = T.
struct Trajectory {
  int dim = 0;
  int particle_count = 0;
  std::vector<double> times;
  std::vector<Positions> positions;
  std::uint64_t seed = 0;
  std::string kernel_name;
  double step_dt = 0.0;

  // Number of intervals m.
  int intervals() const { return static_cast<int>(times.size()) - 1; }
  double horizon() const { return times.back(); }
};

// Backward differences; values[k - 1] is the sample at t_k, k = 1..m.
struct VelocitySamples {
  std::vector<Positions> values;
};

// (1/N) sum_{j != i} a(|x_i - x_j|) (x_j - x_i). Coincident particles
// contribute nothing, even for kernels singular at the origin.
Eigen::VectorXd eval_force(const Kernel& kernel, int index, const Positions& positions);

// eval_force for every particle. Each row is summed in an order fixed by the
// positions alone, so relabelling particles permutes the result bit-exactly.
Positions velocity_field(const Kernel& kernel, const Positions& positions);

// C0 exp(2 |a|_inf T) with C0 = max_i |x_i(0)|.
double radius_bound(const Kernel& kernel, const Positions& initial, double horizon);

// Fixed-step classical RK4 with dt = T / (m * substeps). Throws BlowUpError
// when a particle leaves ten times the radius bound.
Trajectory simulate(const Kernel& kernel, const Positions& initial, double horizon, int intervals, int substeps,
                    std::uint64_t seed = 0);

// I.i.d. uniform on [-L, L]^d drawn from CounterRng(seed).
Positions sample_initial(int dim, int count, double half_width, std::uint64_t seed);

VelocitySamples finite_difference_velocities(const Trajectory& traj);

// Model velocities a evaluated along the recorded snapshots t_1..t_m.
VelocitySamples exact_velocities(const Trajectory& traj, const Kernel& kernel);

// Largest |x_i(t_k) - x_j(t_k)| over all snapshots.
double max_pairwise_distance(const Trajectory& traj);

}  // namespace kinfer
