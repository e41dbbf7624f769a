#include "kinfer/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "kinfer/errors.hpp"

namespace kinfer {

namespace {

// Largest alpha in (0, 1] with v + alpha dv >= 0 componentwise.
double max_step(const Eigen::VectorXd& v, const Eigen::VectorXd& dv) {
  double alpha = 1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (dv[i] < 0.0) alpha = std::min(alpha, -v[i] / dv[i]);
  }
  return alpha;
}

// Reduced Newton system (P + G' W G) dx = rhs with a few refinement sweeps.
class ReducedSystem {
 public:
  ReducedSystem(const Eigen::MatrixXd& P, const Eigen::MatrixXd& G, const Eigen::VectorXd& w)
      : matrix_(P + G.transpose() * w.asDiagonal() * G) {
    const double shift = 1e-14 * std::max(1.0, matrix_.diagonal().cwiseAbs().maxCoeff());
    factor_.compute(matrix_ + shift * Eigen::MatrixXd::Identity(matrix_.rows(), matrix_.cols()));
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const {
    Eigen::VectorXd x = factor_.solve(rhs);
    for (int sweep = 0; sweep < 3; ++sweep) x += factor_.solve(rhs - matrix_ * x);
    return x;
  }

 private:
  Eigen::MatrixXd matrix_;
  Eigen::LDLT<Eigen::MatrixXd> factor_;
};

}  // namespace

double QpResult::kkt_residual() const { return std::max({primal_residual, dual_residual, gap}); }

QpResult solve_qp(const QpProblem& pb, const QpOptions& options) {
  const Eigen::Index n = pb.P.rows();
  const Eigen::Index m = pb.G.rows();
  if (pb.P.cols() != n || pb.q.size() != n || pb.G.cols() != n || pb.h.size() != m) {
    throw InputError("QP dimensions are inconsistent");
  }

  // starting point from the least-squares KKT system with W = I
  Eigen::VectorXd x = ReducedSystem(pb.P, pb.G, Eigen::VectorXd::Ones(m)).solve(-pb.q + pb.G.transpose() * pb.h);
  Eigen::VectorXd s = pb.h - pb.G * x;
  Eigen::VectorXd z = -s;
  auto shift_positive = [](Eigen::VectorXd& v) {
    const double lowest = v.size() ? v.minCoeff() : 1.0;
    if (lowest <= 0.0) v.array() += 1.0 - lowest;
  };
  shift_positive(s);
  shift_positive(z);

  QpResult best;
  best.x = x;
  double best_kkt = std::numeric_limits<double>::infinity();
  int since_improvement = 0;

  for (int iter = 0;; ++iter) {
    const Eigen::VectorXd r_dual = pb.P * x + pb.q + pb.G.transpose() * z;
    const Eigen::VectorXd r_primal = pb.G * x + s - pb.h;
    const double gap = s.dot(z);
    const double kkt = std::max({r_dual.lpNorm<Eigen::Infinity>(), r_primal.lpNorm<Eigen::Infinity>(), gap});

    if (kkt < best_kkt || iter == 0) {
      best_kkt = kkt;
      best.x = x;
      best.slack = s;
      best.dual = z;
      best.iterations = iter;
      best.primal_residual = r_primal.lpNorm<Eigen::Infinity>();
      best.dual_residual = r_dual.lpNorm<Eigen::Infinity>();
      best.gap = gap;
      since_improvement = 0;
    } else {
      ++since_improvement;
    }
    if (best.primal_residual <= options.tolerance && best.dual_residual <= options.tolerance &&
        best.gap <= options.tolerance) {
      best.converged = true;
      best.iterations = iter;
      return best;
    }
    if (iter >= options.max_iterations || since_improvement > options.stall_iterations) {
      best.iterations = iter;
      return best;
    }

    const Eigen::VectorXd w = z.cwiseQuotient(s);
    const ReducedSystem system(pb.P, pb.G, w);
    auto newton = [&](const Eigen::VectorXd& r_comp, Eigen::VectorXd& dx, Eigen::VectorXd& ds, Eigen::VectorXd& dz) {
      const Eigen::VectorXd t = (-r_comp + z.cwiseProduct(r_primal)).cwiseQuotient(s);
      dx = system.solve(-r_dual - pb.G.transpose() * t);
      ds = -r_primal - pb.G * dx;
      dz = (-r_comp - z.cwiseProduct(ds)).cwiseQuotient(s);
    };

    const double mu = gap / static_cast<double>(m);
    Eigen::VectorXd dx, ds, dz;
    newton(s.cwiseProduct(z), dx, ds, dz);
    const double alpha_aff = std::min(max_step(s, ds), max_step(z, dz));
    const double mu_aff = (s + alpha_aff * ds).dot(z + alpha_aff * dz) / static_cast<double>(m);
    const double sigma = std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3);

    const Eigen::VectorXd r_comp = s.cwiseProduct(z) + ds.cwiseProduct(dz) - Eigen::VectorXd::Constant(m, sigma * mu);
    newton(r_comp, dx, ds, dz);
    const double alpha = std::min(1.0, 0.99 * std::min(max_step(s, ds), max_step(z, dz)));

    x += alpha * dx;
    s += alpha * ds;
    z += alpha * dz;
  }
}

}  // namespace kinfer
