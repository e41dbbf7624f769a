#pragma once

// Brute-force reference computations. Slow, but written independently of
// the library routines they check.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "kinfer/diagnostics.hpp"
#include "kinfer/dynamics.hpp"
#include "kinfer/learn.hpp"
#include "kinfer/measures.hpp"
#include "kinfer/spline.hpp"

namespace oracle {

using kinfer::DiscreteMeasure;

inline double distance(const DiscreteMeasure& mu, std::size_t i, const DiscreteMeasure& nu, std::size_t j) {
  double s = 0.0;
  for (int c = 0; c < mu.dim; ++c) {
    const double diff = mu.locations[i * mu.dim + c] - nu.locations[j * nu.dim + c];
    s += diff * diff;
  }
  return std::sqrt(s);
}

// Minimum cost over the vertices of the transportation polytope. A vertex
// has at most n + m - 1 positive cells; every such cell subset is tried.
inline double transport_by_vertices(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  const int n = static_cast<int>(mu.size());
  const int m = static_cast<int>(nu.size());
  const int cells = n * m;
  const int basis = n + m - 1;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n + m, cells);
  Eigen::VectorXd b(n + m);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      A(i, i * m + j) = 1.0;
      A(n + j, i * m + j) = 1.0;
    }
    b[i] = mu.weights[i];
  }
  for (int j = 0; j < m; ++j) b[n + j] = nu.weights[j];

  double best = std::numeric_limits<double>::infinity();
  std::vector<int> pick(cells, 0);
  std::fill(pick.end() - std::min(basis, cells), pick.end(), 1);
  do {
    std::vector<int> chosen;
    for (int c = 0; c < cells; ++c) {
      if (pick[c]) chosen.push_back(c);
    }
    Eigen::MatrixXd sub(n + m, chosen.size());
    for (std::size_t k = 0; k < chosen.size(); ++k) sub.col(k) = A.col(chosen[k]);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(sub);
    if (qr.rank() < static_cast<Eigen::Index>(chosen.size())) continue;
    const Eigen::VectorXd x = qr.solve(b);
    if ((sub * x - b).cwiseAbs().maxCoeff() > 1e-12 || x.minCoeff() < -1e-12) continue;
    double cost = 0.0;
    for (std::size_t k = 0; k < chosen.size(); ++k) {
      cost += x[k] * distance(mu, chosen[k] / m, nu, chosen[k] % m);
    }
    best = std::min(best, cost);
  } while (std::next_permutation(pick.begin(), pick.end()));
  return best;
}

// Equal-weight measures of the same size: the optimum sits on a permutation.
inline double transport_by_permutations(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  const int n = static_cast<int>(mu.size());
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double cost = 0.0;
    for (int i = 0; i < n; ++i) cost += distance(mu, i, nu, perm[i]);
    best = std::min(best, cost / n);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

// |a - b| integrated over u in [u0, u1] for a(u) = alpha + beta u and constant b.
inline double abs_linear_minus_const(double alpha, double beta, double b, double u0, double u1) {
  auto prim = [&](double u0_, double u1_) {
    const double s = alpha - b;
    return s * (u1_ - u0_) + 0.5 * beta * (u1_ * u1_ - u0_ * u0_);
  };
  if (beta != 0.0) {
    const double root = (b - alpha) / beta;
    if (root > u0 && root < u1) return std::abs(prim(u0, root)) + std::abs(prim(root, u1));
  }
  return std::abs(prim(u0, u1));
}

// W1 between an equal-weight sample and U[lo, hi] as the integral of the
// quantile-function gap, evaluated piece by piece in closed form.
inline double quantile_w1_to_uniform(std::vector<double> samples, double lo, double hi) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double total = 0.0;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    total += abs_linear_minus_const(lo, hi - lo, samples[k], k / n, (k + 1) / n);
  }
  return total;
}

// E = 1/(mN) sum_k sum_i |v_i(t_k) - (1/N) sum_j a(r_ij)(x_j - x_i)|^2, by direct double sums.
inline double direct_error_functional(const kinfer::Trajectory& traj, const kinfer::VelocitySamples& vel,
                                      const std::function<double(double)>& a) {
  const int N = traj.particle_count;
  const int d = traj.dim;
  const int m = traj.intervals();
  double total = 0.0;
  for (int k = 1; k <= m; ++k) {
    const auto& x = traj.positions[k];
    for (int i = 0; i < N; ++i) {
      for (int c = 0; c < d; ++c) {
        double model = 0.0;
        for (int j = 0; j < N; ++j) {
          if (j == i) continue;
          double r2 = 0.0;
          for (int e = 0; e < d; ++e) r2 += (x(j, e) - x(i, e)) * (x(j, e) - x(i, e));
          model += a(std::sqrt(r2)) * (x(j, c) - x(i, c));
        }
        const double diff = vel.values[k - 1](i, c) - model / N;
        total += diff * diff;
      }
    }
  }
  return total / (static_cast<double>(m) * N);
}

inline double qp_objective(const kinfer::LearnProblem& p, const Eigen::VectorXd& a) {
  return p.scale * (p.C * a - p.v).squaredNorm();
}

// Grid search over the feasible box [-M/2, M/2]^D (D <= 3), followed by two
// rounds of local grid refinement around the incumbent.
inline double grid_search_objective(const kinfer::LearnProblem& p, double M, double step = 1e-3) {
  const int D = static_cast<int>(p.C.cols());
  const Eigen::MatrixXd gram = p.scale * p.C.transpose() * p.C;
  const Eigen::VectorXd lin = -2.0 * p.scale * p.C.transpose() * p.v;
  const double c0 = p.scale * p.v.squaredNorm();
  auto objective = [&](const Eigen::VectorXd& a) { return a.dot(gram * a) + lin.dot(a) + c0; };
  auto feasible = [&](const Eigen::VectorXd& a) { return kinfer::constraint_value(a) <= M; };

  Eigen::VectorXd best = Eigen::VectorXd::Zero(D);
  double best_value = objective(best);
  auto scan = [&](const Eigen::VectorXd& center, double half, double h) {
    const int steps = static_cast<int>(std::round(2.0 * half / h));
    Eigen::VectorXd a(D);
    std::vector<int> idx(D, 0);
    while (true) {
      for (int l = 0; l < D; ++l) a[l] = center[l] - half + idx[l] * h;
      if (feasible(a)) {
        const double value = objective(a);
        if (value < best_value) {
          best_value = value;
          best = a;
        }
      }
      int l = 0;
      while (l < D && ++idx[l] > steps) idx[l++] = 0;
      if (l == D) break;
    }
  };
  scan(Eigen::VectorXd::Zero(D), M / 2.0, step);
  // Re-centre each refinement until it stops improving; the optimum may slide along a face.
  for (double h : {step, step / 100.0}) {
    for (int pass = 0; pass < 200; ++pass) {
      const double before = best_value;
      scan(Eigen::VectorXd(best), h, h / 100.0);
      if (best_value >= before) break;
    }
  }
  return best_value;
}

// Minimum-norm least-squares solution, by complete orthogonal decomposition.
inline Eigen::VectorXd min_norm_lstsq(const kinfer::LearnProblem& p) {
  return p.C.completeOrthogonalDecomposition().solve(p.v);
}

// Coercivity lhs and rhs of one configuration by literal double sums.
inline std::pair<double, double> coercivity_terms(const kinfer::Positions& x, const std::function<double(double)>& K) {
  const int N = static_cast<int>(x.rows());
  const int d = static_cast<int>(x.cols());
  double lhs = 0.0;
  double rhs = 0.0;
  for (int i = 0; i < N; ++i) {
    Eigen::VectorXd s = Eigen::VectorXd::Zero(d);
    for (int j = 0; j < N; ++j) {
      if (j == i) continue;
      const Eigen::VectorXd diff = (x.row(i) - x.row(j)).transpose();
      const double r = diff.norm();
      s += K(r) * diff / r;
      rhs += K(r) * K(r);
    }
    lhs += (s / N).squaredNorm();
  }
  return {lhs / N, rhs / (static_cast<double>(N) * N)};
}

}  // namespace oracle
