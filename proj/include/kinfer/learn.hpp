#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "kinfer/dynamics.hpp"
#include "kinfer/qp.hpp"
#include "kinfer/spline.hpp"

namespace kinfer {

// Least-squares data of the discrete error functional:
//   E(a) = scale * |C a - v|^2,  scale = 1 / (m N).
// Row ((k-1) N + j) d + l of C holds, for basis index lambda,
//   (1/N) sum_i phi_lambda(|x_j(t_k) - x_i(t_k)|) (x_i(t_k) - x_j(t_k))_l,
// so C times the nodal values of a approximates the model velocities.
struct LearnProblem {
  SplineSpace space;
  Eigen::MatrixXd C;
  Eigen::VectorXd v;
  double scale = 0.0;
  Eigen::MatrixXd diff;
  double M = 1.0;
};

// Uses backward-difference velocities.
LearnProblem assemble(const Trajectory& traj, const SplineSpace& space, double M = 1.0);
// Uses the supplied velocity samples (k = 1..m) instead.
LearnProblem assemble(const Trajectory& traj, const SplineSpace& space, const VelocitySamples& velocities,
                      double M = 1.0);
// Several independent trajectories observed under the same kernel.
LearnProblem assemble(std::span<const Trajectory> trajs, const SplineSpace& space, double M = 1.0);

// Row-stacks problems over the same space; the result evaluates to the
// (rows / d)-weighted mean of the individual functionals.
LearnProblem stack(std::span<const LearnProblem> problems);

double error_functional(const LearnProblem& problem, const Eigen::VectorXd& coeffs);

struct LearnReport {
  SplineModel model;
  double objective = 0.0;
  double kkt_residual = 0.0;
  int iterations = 0;
  bool converged = false;
  std::optional<double> l2_rho_error;
};

struct MinimizeOptions {
  QpOptions qp;
  // Weight of the vanishing ridge term selecting the minimum-norm minimizer.
  double ridge = 1e-12;
};

// min scale |C a - v|^2  s.t.  2|a|_inf + |D a|_inf <= M, through the
// epigraph form -s <= a <= s, -t <= D a <= t, 2s + t <= M. M = 0 is
// treated as 1e-12.
LearnReport minimize(const LearnProblem& problem, const MinimizeOptions& options = {});

struct LearnOptions {
  const Kernel* reference = nullptr;            // fills l2_rho_error
  const VelocitySamples* velocities = nullptr;  // replaces backward differences
  MinimizeOptions minimize;
};

// Builds the space on [0, 2 R_obs], R_obs the largest observed pairwise
// distance, then assembles and minimizes.
LearnReport learn_kernel(const Trajectory& traj, int basis_dim, double M, const LearnOptions& options = {});

// |a - model|_{L2(rho^N)} with rho^N the empirical pairwise-distance measure.
double l2_rho_error(const Trajectory& traj, const Kernel& reference, const SplineModel& model);

struct SweepResult {
  std::vector<double> M;
  std::vector<double> objective;
  std::vector<LearnReport> reports;
  // Smallest M whose objective is within 1e-6 of the last one.
  double M_star = 0.0;
};

SweepResult m_sweep(const Trajectory& traj, int basis_dim, const std::vector<double>& M_list,
                    const LearnOptions& options = {});

// Shared parameters of a simulate-then-learn run.
struct RunSetup {
  int dim = 2;
  double half_width = 1.0;
  double horizon = 0.5;
  int intervals = 50;
  int substeps = 10;
  int count = 10;
  int basis_dim = 20;
  double M = 100.0;
};

// Samples, simulates and learns with seed derive_seed(master_seed, run_id).
struct RunOutcome {
  Trajectory trajectory;
  LearnReport report;
};
RunOutcome run_once(const Kernel& kernel, const RunSetup& setup, std::uint64_t master_seed, std::uint64_t run_id,
                    bool exact_velocities = false);

struct MonteCarloResult {
  SplineModel mean;
  Eigen::VectorXd stdev;  // unbiased, per knot
  Eigen::VectorXd lo;     // mean - 1.96 stdev / sqrt(runs)
  Eigen::VectorXd hi;
  std::vector<LearnReport> runs;  // re-interpolated onto the common space
};

// Averages already-learned models after resampling them onto the space with
// the largest domain.
MonteCarloResult average_models(const std::vector<LearnReport>& runs);

MonteCarloResult montecarlo_average(const Kernel& kernel, const RunSetup& setup, int runs, std::uint64_t master_seed,
                                    bool exact_velocities = false);

}  // namespace kinfer
