#include "kinfer/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "kinfer/rng.hpp"

namespace kinfer {

Misfit Misfit::between(const Kernel& a, const Kernel& b) {
  auto fa = a.evaluator;
  auto fb = b.evaluator;
  return Misfit{[fa, fb](double r) { return (fa(r) - fb(r)) * r; }};
}

Misfit Misfit::between(const Kernel& a, const SplineModel& b) {
  auto fa = a.evaluator;
  return Misfit{[fa, b](double r) { return (fa(r) - b(r)) * r; }};
}

Misfit Misfit::from_profile(std::function<double(double)> K) {
  return Misfit{std::move(K)};
}

CoercivityReport coercivity_at(const Positions& x, const Misfit& K) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  if (n < 2) throw InputError("coercivity needs at least two particles");
  CoercivityReport rep;
  Eigen::VectorXd acc(d);
  for (Eigen::Index i = 0; i < n; ++i) {
    acc.setZero();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      const Eigen::VectorXd diff = (x.row(i) - x.row(j)).transpose();
      const double r = diff.norm();
      const double k = K(r);
      rep.rhs_unscaled += k * k;
      if (r == 0.0) {
        ++rep.coincident_pairs;
        continue;
      }
      acc += (k / r) * diff;
    }
    rep.lhs += (acc / static_cast<double>(n)).squaredNorm();
  }
  rep.lhs /= static_cast<double>(n);
  rep.rhs_unscaled /= static_cast<double>(n * n);
  rep.coincident_pairs /= 2;
  rep.ratio = rep.rhs_unscaled > 0.0 ? rep.lhs / rep.rhs_unscaled : 0.0;
  return rep;
}

CoercivityReport discrete_coercivity(const Trajectory& traj, const Misfit& K) {
  const int m = traj.intervals();
  if (m < 1) throw InputError("coercivity needs at least two snapshots");
  CoercivityReport total;
  for (int k = 1; k <= m; ++k) {
    const auto rep = coercivity_at(traj.positions[k], K);
    total.lhs += rep.lhs;
    total.rhs_unscaled += rep.rhs_unscaled;
    total.coincident_pairs += rep.coincident_pairs;
  }
  total.lhs /= m;
  total.rhs_unscaled /= m;
  total.ratio = total.rhs_unscaled > 0.0 ? total.lhs / total.rhs_unscaled : 0.0;
  return total;
}

double estimate_cT(const Trajectory& traj, const Kernel& reference, const SplineModel& learned,
                   const VelocitySamples* velocities) {
  const double l2 = l2_rho_error(traj, reference, learned);
  const double denom = l2 * l2;
  if (denom < 1e-14) throw DegenerateMisfitError("learned kernel matches the reference on the support of rho");
  const LearnProblem pb =
      velocities ? assemble(traj, learned.space, *velocities, 1.0) : assemble(traj, learned.space, 1.0);
  return error_functional(pb, learned.coeffs) / denom;
}

double normalized_quadratic_form(const Eigen::VectorXd& k_row, const Eigen::MatrixXd& directions) {
  if (directions.rows() != k_row.size()) throw InputError("one direction per misfit entry required");
  return (directions.transpose() * k_row).squaredNorm() / static_cast<double>(k_row.size());
}

MonteCarloEstimate random_matrix_mc(int count, int dim, int trials, std::uint64_t seed) {
  if (count < 1 || dim < 1 || trials < 2) throw InputError("need N, d >= 1 and at least two trials");
  CounterRng rng(seed);
  Eigen::VectorXd k_row(count);
  Eigen::MatrixXd x(count, dim);
  double sum = 0.0, sum_sq = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    for (int j = 0; j < count; ++j) {
      k_row[j] = rng.normal();
      double norm = 0.0;
      do {
        for (int l = 0; l < dim; ++l) x(j, l) = rng.normal();
        norm = x.row(j).norm();
      } while (norm == 0.0);
      x.row(j) /= norm;
    }
    const double value = normalized_quadratic_form(k_row, x);
    sum += value;
    sum_sq += value * value;
  }
  MonteCarloEstimate est;
  est.mean = sum / trials;
  const double var = (sum_sq - trials * est.mean * est.mean) / (trials - 1);
  est.stderr_ = std::sqrt(std::max(var, 0.0) / trials);
  return est;
}

BoundCheck trajectory_bound_check(const Kernel& reference, const Kernel& candidate, const Positions& x0,
                                  double horizon, int intervals, int substeps) {
  const Trajectory truth = simulate(reference, x0, horizon, intervals, substeps);
  const Trajectory approx = simulate(candidate, x0, horizon, intervals, substeps);
  const double n = static_cast<double>(x0.rows());

  BoundCheck out;
  for (std::size_t k = 0; k < truth.positions.size(); ++k) {
    out.lhs = std::max(out.lhs, (truth.positions[k] - approx.positions[k]).rowwise().squaredNorm().sum() / n);
  }

  // (1/T) int (1/N) sum_i |v_hat_i - v_i|^2 dt along the true trajectory
  std::vector<double> integrand;
  for (const auto& x : truth.positions) {
    const Positions gap = velocity_field(candidate, x) - velocity_field(reference, x);
    integrand.push_back(gap.rowwise().squaredNorm().sum() / n);
  }
  double integral = 0.0;
  for (std::size_t k = 1; k < integrand.size(); ++k) {
    integral += 0.5 * (integrand[k] + integrand[k - 1]) * (truth.times[k] - truth.times[k - 1]);
  }
  out.energy = integral / horizon;

  out.radius = radius_bound(candidate, x0, horizon);
  if (!std::isfinite(out.radius)) throw InputError("trajectory bound needs a bounded candidate kernel");
  out.sup = candidate.sup_on(0.0, 2.0 * out.radius);
  out.lipschitz = candidate.lipschitz_bound_on(0.0, 2.0 * out.radius);
  const double t2 = horizon * horizon;
  out.log_constant = std::log(2.0 * t2) + 8.0 * t2 * (out.sup * out.sup + std::pow(out.radius * out.lipschitz, 2));
  out.rhs = std::exp(out.log_constant) * out.energy;
  if (out.energy == 0.0) out.rhs = 0.0;

  if (out.lhs == 0.0) {
    out.holds = true;
    out.log_slack = std::numeric_limits<double>::infinity();
  } else if (out.energy == 0.0) {
    out.holds = false;
    out.log_slack = -std::numeric_limits<double>::infinity();
  } else {
    out.log_slack = out.log_constant + std::log(out.energy) - std::log(out.lhs);
    out.holds = out.log_slack >= 0.0;
  }
  return out;
}

Eigen::VectorXd convolve_force(const Kernel& a, const DiscreteMeasure& mu, std::span<const double> x) {
  if (static_cast<int>(x.size()) != mu.dim) throw InputError("evaluation point has the wrong dimension");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(mu.dim);
  Eigen::VectorXd z(mu.dim);
  for (std::size_t j = 0; j < mu.size(); ++j) {
    const auto y = mu.location(j);
    for (int l = 0; l < mu.dim; ++l) z[l] = x[l] - y[l];
    const double r = z.norm();
    if (r == 0.0) continue;
    out -= mu.weights[j] * a(r) * z;
  }
  return out;
}

LipschitzCheck convolution_lipschitz_check(const Kernel& a, const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                           double r, double R, int samples, std::uint64_t seed) {
  if (mu.dim != nu.dim) throw InputError("measures live in different dimensions");
  LipschitzCheck out;
  out.w1 = wasserstein1(mu, nu);
  out.lipschitz = force_lipschitz_on_ball(a, R + r);
  CounterRng rng(seed);
  std::vector<double> x(mu.dim);
  for (int s = 0; s < samples; ++s) {
    double norm2;
    do {
      norm2 = 0.0;
      for (auto& c : x) {
        c = rng.uniform(-r, r);
        norm2 += c * c;
      }
    } while (norm2 > r * r);
    const double numerator = (convolve_force(a, mu, x) - convolve_force(a, nu, x)).norm();
    if (out.w1 == 0.0) {
      if (numerator > 1e-12) throw Error("W1 vanishes but the convolutions differ");
      continue;
    }
    const double ratio = numerator / out.w1;
    out.max_ratio = std::max(out.max_ratio, ratio);
    if (ratio > out.lipschitz * (1.0 + 1e-9)) ++out.violations;
  }
  return out;
}

}  // namespace kinfer
