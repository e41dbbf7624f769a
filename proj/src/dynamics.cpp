#include "kinfer/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "kinfer/errors.hpp"
#include "kinfer/rng.hpp"

namespace kinfer {

namespace {

double checked_eval(const Kernel& kernel, double r) {
  const double value = kernel(r);
  if (!std::isfinite(value)) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "kernel '" << kernel.name << "' is not finite at r = " << r;
    throw EvaluationError(msg.str());
  }
  return value;
}

// Lexicographic order of the rows; identical rows are interchangeable.
std::vector<int> canonical_order(const Positions& x) {
  std::vector<int> order(x.rows());
  std::iota(order.begin(), order.end(), 0);
  const auto d = x.cols();
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    for (Eigen::Index l = 0; l < d; ++l) {
      if (x(a, l) != x(b, l)) return x(a, l) < x(b, l);
    }
    return false;
  });
  return order;
}

void accumulate_force(const Kernel& kernel, const Positions& x, Eigen::Index i, const std::vector<int>& order,
                      double* out) {
  const auto d = x.cols();
  const double inv_n = 1.0 / static_cast<double>(x.rows());
  std::fill(out, out + d, 0.0);
  for (int j : order) {
    if (j == i) continue;
    double r2 = 0.0;
    for (Eigen::Index l = 0; l < d; ++l) {
      const double diff = x(j, l) - x(i, l);
      r2 += diff * diff;
    }
    if (r2 == 0.0) continue;
    const double a = checked_eval(kernel, std::sqrt(r2));
    for (Eigen::Index l = 0; l < d; ++l) out[l] += a * (x(j, l) - x(i, l));
  }
  for (Eigen::Index l = 0; l < d; ++l) out[l] *= inv_n;
}

}  // namespace

Eigen::VectorXd eval_force(const Kernel& kernel, int index, const Positions& positions) {
  if (index < 0 || index >= positions.rows()) throw InputError("particle index out of range");
  Eigen::VectorXd out(positions.cols());
  accumulate_force(kernel, positions, index, canonical_order(positions), out.data());
  return out;
}

Positions velocity_field(const Kernel& kernel, const Positions& positions) {
  Positions out(positions.rows(), positions.cols());
  const auto order = canonical_order(positions);
  for (Eigen::Index i = 0; i < positions.rows(); ++i) {
    accumulate_force(kernel, positions, i, order, out.row(i).data());
  }
  return out;
}

double radius_bound(const Kernel& kernel, const Positions& initial, double horizon) {
  const double c0 = initial.rows() > 0 ? initial.rowwise().norm().maxCoeff() : 0.0;
  return c0 * std::exp(2.0 * kernel.sup_bound * horizon);
}

Trajectory simulate(const Kernel& kernel, const Positions& initial, double horizon, int intervals, int substeps,
                    std::uint64_t seed) {
  if (!(horizon > 0.0)) throw InputError("simulation horizon must be positive");
  if (intervals < 1 || substeps < 1) throw InputError("need at least one snapshot interval and one substep");
  if (initial.rows() < 1 || initial.cols() < 1) throw InputError("empty initial configuration");
  if (!initial.allFinite()) throw InputError("initial positions must be finite");

  const double dt = horizon / (static_cast<double>(intervals) * substeps);
  const double limit = 10.0 * radius_bound(kernel, initial, horizon);

  Trajectory traj;
  traj.dim = static_cast<int>(initial.cols());
  traj.particle_count = static_cast<int>(initial.rows());
  traj.seed = seed;
  traj.kernel_name = kernel.name;
  traj.step_dt = dt;
  traj.times.reserve(intervals + 1);
  traj.positions.reserve(intervals + 1);
  traj.times.push_back(0.0);
  traj.positions.push_back(initial);

  Positions x = initial;
  for (int k = 1; k <= intervals; ++k) {
    for (int s = 0; s < substeps; ++s) {
      const Positions k1 = velocity_field(kernel, x);
      const Positions k2 = velocity_field(kernel, x + (0.5 * dt) * k1);
      const Positions k3 = velocity_field(kernel, x + (0.5 * dt) * k2);
      const Positions k4 = velocity_field(kernel, x + dt * k3);
      x += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    const double radius = x.rowwise().norm().maxCoeff();
    if (!std::isfinite(radius) || radius > limit) {
      std::ostringstream msg;
      msg << "trajectory left the radius bound at t = " << horizon * k / intervals << " (radius " << radius
          << ", limit " << limit << "); reduce the step or check the kernel";
      throw BlowUpError(msg.str());
    }
    traj.times.push_back(horizon * k / intervals);
    traj.positions.push_back(x);
  }
  return traj;
}

Positions sample_initial(int dim, int count, double half_width, std::uint64_t seed) {
  if (!(half_width > 0.0)) throw InputError("sampling half-width must be positive");
  if (dim < 1 || count < 1) throw InputError("dimension and particle count must be positive");
  CounterRng rng(seed);
  Positions x(count, dim);
  for (int i = 0; i < count; ++i) {
    for (int l = 0; l < dim; ++l) x(i, l) = rng.uniform(-half_width, half_width);
  }
  return x;
}

VelocitySamples finite_difference_velocities(const Trajectory& traj) {
  if (traj.intervals() < 1) throw InputError("need at least two snapshots for velocities");
  VelocitySamples v;
  v.values.reserve(traj.intervals());
  for (int k = 1; k <= traj.intervals(); ++k) {
    v.values.push_back((traj.positions[k] - traj.positions[k - 1]) / (traj.times[k] - traj.times[k - 1]));
  }
  return v;
}

VelocitySamples exact_velocities(const Trajectory& traj, const Kernel& kernel) {
  VelocitySamples v;
  v.values.reserve(traj.intervals());
  for (int k = 1; k <= traj.intervals(); ++k) v.values.push_back(velocity_field(kernel, traj.positions[k]));
  return v;
}

double max_pairwise_distance(const Trajectory& traj) {
  double best = 0.0;
  for (const auto& x : traj.positions) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      for (Eigen::Index j = i + 1; j < x.rows(); ++j) best = std::max(best, (x.row(i) - x.row(j)).norm());
    }
  }
  return best;
}

}  // namespace kinfer
