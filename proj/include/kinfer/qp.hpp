#pragma once

#include <Eigen/Dense>

namespace kinfer {

// min 1/2 x'Px + q'x  subject to  Gx <= h, with P positive semidefinite.
struct QpProblem {
  Eigen::MatrixXd P;
  Eigen::VectorXd q;
  Eigen::MatrixXd G;
  Eigen::VectorXd h;
};

struct QpOptions {
  // Absolute bound on primal infeasibility, dual infeasibility and s'z.
  double tolerance = 1e-9;
  int max_iterations = 20000;
  // Give up after this many iterations without improving the KKT residual.
  int stall_iterations = 200;
};

struct QpResult {
  Eigen::VectorXd x;
  Eigen::VectorXd slack;  // h - Gx at the returned iterate
  Eigen::VectorXd dual;   // multipliers z >= 0
  int iterations = 0;
  bool converged = false;
  double primal_residual = 0.0;  // |Gx + s - h|_inf
  double dual_residual = 0.0;    // |Px + q + G'z|_inf
  double gap = 0.0;              // s'z

  double kkt_residual() const;
};

// Mehrotra predictor-corrector primal-dual interior-point method with an
// infeasible start. Returns the best iterate seen, flagged non-converged
// when the tolerances were not met.
QpResult solve_qp(const QpProblem& problem, const QpOptions& options = {});

}  // namespace kinfer
