#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>

#include "kinfer/dynamics.hpp"
#include "kinfer/errors.hpp"
#include "kinfer/learn.hpp"
#include "kinfer/measures.hpp"
#include "kinfer/spline.hpp"

namespace kinfer {

// K(r) = (a(r) - b(r)) r, with K(0) = 0 enforced.
struct Misfit {
  std::function<double(double)> profile;

  double operator()(double r) const { return r == 0.0 ? 0.0 : profile(r); }

  static Misfit between(const Kernel& a, const Kernel& b);
  static Misfit between(const Kernel& a, const SplineModel& b);
  // Misfit with K given directly.
  static Misfit from_profile(std::function<double(double)> K);
};

struct CoercivityReport {
  double lhs = 0.0;
  double rhs_unscaled = 0.0;
  double ratio = 0.0;
  // Distinct particles found at zero distance (their unit vector is zero).
  int coincident_pairs = 0;
};

// Single configuration:
//   lhs = (1/N) sum_i |(1/N) sum_{j != i} K(r_ij) (x_i - x_j)/r_ij|^2
//   rhs = (1/N^2) sum_i sum_j K(r_ij)^2
CoercivityReport coercivity_at(const Positions& x, const Misfit& K);

// Time average of coercivity_at over the snapshots t_1..t_m.
CoercivityReport discrete_coercivity(const Trajectory& traj, const Misfit& K);

class DegenerateMisfitError : public Error {
 public:
  using Error::Error;
};

// E(learned) / |a - learned|^2_{L2(rho^N)}. Velocities default to backward
// differences. Throws DegenerateMisfitError when the denominator is < 1e-14.
double estimate_cT(const Trajectory& traj, const Kernel& reference, const SplineModel& learned,
                   const VelocitySamples* velocities = nullptr);

// |K_row X|^2 / N for a row of misfit values and N unit vectors (rows of X).
double normalized_quadratic_form(const Eigen::VectorXd& k_row, const Eigen::MatrixXd& directions);

struct MonteCarloEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
};

// Gaussian K rows and uniformly random unit-vector rows of X_i in R^d.
MonteCarloEstimate random_matrix_mc(int count, int dim, int trials, std::uint64_t seed);

struct BoundCheck {
  double lhs = 0.0;          // sup_k (1/N) sum_i |x_i(t_k) - xhat_i(t_k)|^2
  double energy = 0.0;       // continuous-time error functional of the candidate
  double log_constant = 0.0; // log(2 T^2) + 8 T^2 (|ahat|^2 + (R Lip(ahat))^2)
  double rhs = 0.0;          // constant * energy (may overflow to inf)
  double radius = 0.0;       // R for the candidate
  double sup = 0.0;          // |ahat|_{L_inf([0, 2R])}
  double lipschitz = 0.0;    // Lip_{[0, 2R]}(ahat)
  bool holds = true;
  // log(rhs) - log(lhs); +inf when lhs = 0.
  double log_slack = 0.0;
};

// Simulates both systems from x0 and compares the trajectory deviation with
// the stability bound. The energy is integrated by the trapezoidal rule over
// the m + 1 snapshots of the reference trajectory, with exact velocities.
BoundCheck trajectory_bound_check(const Kernel& reference, const Kernel& candidate, const Positions& x0,
                                  double horizon, int intervals, int substeps = 10);

// (F[a] * mu)(x) = sum_j w_j F[a](x - y_j), F[a](z) = -a(|z|) z.
Eigen::VectorXd convolve_force(const Kernel& a, const DiscreteMeasure& mu, std::span<const double> x);

struct LipschitzCheck {
  double max_ratio = 0.0;
  double lipschitz = 0.0;  // dense-grid Lip of F[a] on B(0, R + r)
  double w1 = 0.0;
  int violations = 0;
};

// Samples x uniformly in B(0, r); ratio |F[a]*mu(x) - F[a]*nu(x)| / W1(mu, nu).
LipschitzCheck convolution_lipschitz_check(const Kernel& a, const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                           double r, double R, int samples, std::uint64_t seed);

}  // namespace kinfer
