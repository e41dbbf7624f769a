#include "kinfer/learn.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "kinfer/errors.hpp"
#include "kinfer/measures.hpp"
#include "kinfer/parallel.hpp"
#include "kinfer/rng.hpp"

namespace kinfer {

namespace {

constexpr double kMinimumM = 1e-12;

struct Normal {
  Eigen::MatrixXd gram;  // C'C
  Eigen::VectorXd ctv;   // C'v
  double vv = 0.0;
};

Normal normal_equations(const LearnProblem& pb) {
  return {pb.C.transpose() * pb.C, pb.C.transpose() * pb.v, pb.v.squaredNorm()};
}

LearnReport minimize_with(const LearnProblem& pb, const Normal& ne, const MinimizeOptions& options) {
  const int dim = pb.space.dim();
  const double M = std::max(pb.M, kMinimumM);
  if (!(pb.M >= 0.0)) throw InputError("constraint level M must be non-negative");

  // variables (a_0..a_{D-1}, s, t)
  const int n = dim + 2;
  const int rows = 2 * dim + 2 * (dim - 1) + 1;
  QpProblem qp;
  qp.P = Eigen::MatrixXd::Zero(n, n);
  qp.P.topLeftCorner(dim, dim) = 2.0 * pb.scale * ne.gram;
  qp.P.topLeftCorner(dim, dim).diagonal().array() += 2.0 * options.ridge;
  qp.q = Eigen::VectorXd::Zero(n);
  qp.q.head(dim) = -2.0 * pb.scale * ne.ctv;
  qp.G = Eigen::MatrixXd::Zero(rows, n);
  qp.h = Eigen::VectorXd::Zero(rows);
  int r = 0;
  for (int l = 0; l < dim; ++l, r += 2) {
    qp.G(r, l) = 1.0;
    qp.G(r, dim) = -1.0;
    qp.G(r + 1, l) = -1.0;
    qp.G(r + 1, dim) = -1.0;
  }
  for (int l = 0; l + 1 < dim; ++l, r += 2) {
    qp.G(r, l) = 1.0;
    qp.G(r, l + 1) = -1.0;
    qp.G(r, dim + 1) = -1.0;
    qp.G(r + 1, l) = -1.0;
    qp.G(r + 1, l + 1) = 1.0;
    qp.G(r + 1, dim + 1) = -1.0;
  }
  qp.G(r, dim) = 2.0;
  qp.G(r, dim + 1) = 1.0;
  qp.h[r] = M;

  const QpResult res = solve_qp(qp, options.qp);

  LearnReport report{SplineModel{pb.space, res.x.head(dim), pb.M, {}}, 0.0, res.kkt_residual(), res.iterations,
                     res.converged, std::nullopt};
  // the interior-point iterate may overshoot the constraint by rounding
  const double used = constraint_value(report.model.coeffs);
  if (used > M) report.model.coeffs *= M / used;
  report.objective = error_functional(pb, report.model.coeffs);
  return report;
}

void check_domain(const Trajectory& traj, const SplineSpace& space) {
  double widest = 0.0;
  for (int k = 1; k <= traj.intervals(); ++k) {
    const auto& x = traj.positions[k];
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      for (Eigen::Index j = i + 1; j < x.rows(); ++j) widest = std::max(widest, (x.row(i) - x.row(j)).norm());
    }
  }
  if (widest > space.length()) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "spline domain [0, " << space.length() << "] does not cover the observed distance " << widest;
    throw AssemblyError(msg.str());
  }
}

}  // namespace

LearnProblem assemble(const Trajectory& traj, const SplineSpace& space, const VelocitySamples& velocities, double M) {
  const int m = traj.intervals();
  const int n = traj.particle_count;
  const int d = traj.dim;
  if (m < 1) throw InputError("assembly needs at least two snapshots");
  if (static_cast<int>(velocities.values.size()) != m) throw InputError("need one velocity sample per interval");
  check_domain(traj, space);

  LearnProblem pb{space, Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m) * n * d, space.dim()),
                  Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m) * n * d), 1.0 / (static_cast<double>(m) * n),
                  difference_matrix(space), M};
  const double inv_n = 1.0 / n;
  for (int k = 1; k <= m; ++k) {
    const auto& x = traj.positions[k];
    const auto& vel = velocities.values[k - 1];
    for (int j = 0; j < n; ++j) {
      const Eigen::Index row = (static_cast<Eigen::Index>(k - 1) * n + j) * d;
      for (int l = 0; l < d; ++l) pb.v[row + l] = vel(j, l);
      for (int i = 0; i < n; ++i) {
        if (i == j) continue;
        const double r = (x.row(j) - x.row(i)).norm();
        const auto cell = space.locate(r);
        if (!cell) continue;
        for (int l = 0; l < d; ++l) {
          const double diff = (x(i, l) - x(j, l)) * inv_n;
          pb.C(row + l, cell->index) += (1.0 - cell->t) * diff;
          pb.C(row + l, cell->index + 1) += cell->t * diff;
        }
      }
    }
  }
  return pb;
}

LearnProblem assemble(const Trajectory& traj, const SplineSpace& space, double M) {
  return assemble(traj, space, finite_difference_velocities(traj), M);
}

LearnProblem assemble(std::span<const Trajectory> trajs, const SplineSpace& space, double M) {
  std::vector<LearnProblem> parts;
  for (const auto& t : trajs) parts.push_back(assemble(t, space, M));
  return stack(parts);
}

LearnProblem stack(std::span<const LearnProblem> problems) {
  if (problems.empty()) throw InputError("nothing to stack");
  Eigen::Index rows = 0;
  double weight = 0.0;
  for (const auto& p : problems) {
    if (!(p.space == problems.front().space)) throw InputError("stacked problems must share one spline space");
    rows += p.C.rows();
    weight += 1.0 / p.scale;
  }
  LearnProblem out{problems.front().space, Eigen::MatrixXd(rows, problems.front().space.dim()),
                   Eigen::VectorXd(rows), 1.0 / weight, problems.front().diff, problems.front().M};
  Eigen::Index at = 0;
  for (const auto& p : problems) {
    out.C.middleRows(at, p.C.rows()) = p.C;
    out.v.segment(at, p.v.size()) = p.v;
    at += p.C.rows();
  }
  return out;
}

double error_functional(const LearnProblem& problem, const Eigen::VectorXd& coeffs) {
  if (coeffs.size() != problem.C.cols()) throw InputError("coefficient vector has the wrong length");
  return problem.scale * (problem.C * coeffs - problem.v).squaredNorm();
}

LearnReport minimize(const LearnProblem& problem, const MinimizeOptions& options) {
  return minimize_with(problem, normal_equations(problem), options);
}

double l2_rho_error(const Trajectory& traj, const Kernel& reference, const SplineModel& model) {
  const auto rho = empirical_rho(traj);
  return l2_rho_norm([&](double s) { return reference(s) - model(s); }, rho.rho);
}

namespace {

SplineSpace observed_space(const Trajectory& traj, int basis_dim) {
  const double widest = max_pairwise_distance(traj);
  return SplineSpace(widest > 0.0 ? widest : 1.0, basis_dim);
}

LearnProblem assemble_for(const Trajectory& traj, const SplineSpace& space, double M, const LearnOptions& options) {
  return options.velocities ? assemble(traj, space, *options.velocities, M) : assemble(traj, space, M);
}

}  // namespace

LearnReport learn_kernel(const Trajectory& traj, int basis_dim, double M, const LearnOptions& options) {
  const LearnProblem pb = assemble_for(traj, observed_space(traj, basis_dim), M, options);
  LearnReport report = minimize(pb, options.minimize);
  report.model.kernel_name = traj.kernel_name;
  if (options.reference) report.l2_rho_error = l2_rho_error(traj, *options.reference, report.model);
  return report;
}

SweepResult m_sweep(const Trajectory& traj, int basis_dim, const std::vector<double>& M_list,
                    const LearnOptions& options) {
  if (M_list.empty()) throw InputError("empty M list");
  for (std::size_t i = 0; i < M_list.size(); ++i) {
    if (!(M_list[i] > 0.0)) throw InputError("M values must be positive");
    if (i > 0 && M_list[i] < M_list[i - 1]) throw InputError("M values must be ascending");
  }
  LearnProblem pb = assemble_for(traj, observed_space(traj, basis_dim), M_list.front(), options);
  const Normal ne = normal_equations(pb);

  SweepResult out;
  out.M = M_list;
  out.reports.resize(M_list.size());
  parallel_for(M_list.size(), [&](std::size_t i) {
    LearnProblem local = pb;
    local.M = M_list[i];
    out.reports[i] = minimize_with(local, ne, options.minimize);
    out.reports[i].model.kernel_name = traj.kernel_name;
    if (options.reference) out.reports[i].l2_rho_error = l2_rho_error(traj, *options.reference, out.reports[i].model);
  });
  for (const auto& r : out.reports) out.objective.push_back(r.objective);
  const double last = out.objective.back();
  out.M_star = out.M.back();
  for (std::size_t i = 0; i < out.M.size(); ++i) {
    if (std::abs(out.objective[i] - last) <= 1e-6) {
      out.M_star = out.M[i];
      break;
    }
  }
  return out;
}

RunOutcome run_once(const Kernel& kernel, const RunSetup& setup, std::uint64_t master_seed, std::uint64_t run_id,
                    bool exact) {
  const std::uint64_t seed = derive_seed(master_seed, run_id);
  const Positions x0 = sample_initial(setup.dim, setup.count, setup.half_width, seed);
  RunOutcome out{simulate(kernel, x0, setup.horizon, setup.intervals, setup.substeps, seed), {}};
  VelocitySamples velocities;
  LearnOptions options;
  options.reference = &kernel;
  if (exact) {
    velocities = exact_velocities(out.trajectory, kernel);
    options.velocities = &velocities;
  }
  out.report = learn_kernel(out.trajectory, setup.basis_dim, setup.M, options);
  return out;
}

MonteCarloResult average_models(const std::vector<LearnReport>& runs) {
  if (runs.size() < 2) throw InputError("Monte Carlo averaging needs at least two runs");
  double half = 0.0;
  for (const auto& r : runs) {
    if (r.model.space.dim() != runs.front().model.space.dim()) throw InputError("runs use different basis sizes");
    half = std::max(half, r.model.space.half_length());
  }
  const SplineSpace common(half, runs.front().model.space.dim());
  const double count = static_cast<double>(runs.size());

  MonteCarloResult out;
  for (const auto& r : runs) {
    LearnReport resampled = r;
    resampled.model = reinterpolate(r.model, common);
    resampled.model.constraint_M = r.model.constraint_M;
    out.runs.push_back(std::move(resampled));
  }
  // Shifted by the first run: identical runs give their common model exactly.
  const Eigen::VectorXd shift = out.runs.front().model.coeffs;
  Eigen::VectorXd offset = Eigen::VectorXd::Zero(common.dim());
  for (const auto& r : out.runs) offset += r.model.coeffs - shift;
  const Eigen::VectorXd mean = shift + offset / count;
  Eigen::VectorXd var = Eigen::VectorXd::Zero(common.dim());
  for (const auto& r : out.runs) var += (r.model.coeffs - mean).cwiseAbs2();
  var /= count - 1.0;

  out.mean = SplineModel{common, mean, runs.front().model.constraint_M, runs.front().model.kernel_name};
  out.stdev = var.cwiseSqrt();
  const Eigen::VectorXd half_width = 1.96 * out.stdev / std::sqrt(count);
  out.lo = mean - half_width;
  out.hi = mean + half_width;
  return out;
}

MonteCarloResult montecarlo_average(const Kernel& kernel, const RunSetup& setup, int runs, std::uint64_t master_seed,
                                    bool exact) {
  if (runs < 2) throw InputError("Monte Carlo averaging needs at least two runs");
  std::vector<LearnReport> reports(runs);
  parallel_for(runs, [&](std::size_t theta) {
    reports[theta] = run_once(kernel, setup, master_seed, theta, exact).report;
  });
  return average_models(reports);
}

}  // namespace kinfer
