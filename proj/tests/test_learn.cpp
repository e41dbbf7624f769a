#include <doctest.h>

#include <cmath>

#include "kinfer/errors.hpp"
#include "kinfer/learn.hpp"
#include "kinfer/qp.hpp"
#include "kinfer/rng.hpp"
#include "oracles.hpp"

using namespace kinfer;

namespace {

LearnProblem random_problem(CounterRng& rng, int D, int rows, double M) {
  LearnProblem p;
  p.space = SplineSpace(1.0, D);
  p.C.resize(rows, D);
  p.v.resize(rows);
  for (Eigen::Index i = 0; i < p.C.size(); ++i) p.C.data()[i] = rng.normal();
  for (auto& x : p.v) x = 2.0 * rng.normal();
  p.scale = 1.0 / rows;
  p.diff = difference_matrix(p.space);
  p.M = M;
  return p;
}

Trajectory random_trajectory(std::uint64_t seed, int dim, int count, int intervals, const Kernel& a) {
  return simulate(a, sample_initial(dim, count, 2.0, seed), 0.5, intervals, 4, seed);
}

LearnProblem problem_for(const Trajectory& traj, int D, double M, const VelocitySamples* vel = nullptr) {
  const SplineSpace space(std::max(max_pairwise_distance(traj), 1e-3), D);
  return vel ? assemble(traj, space, *vel, M) : assemble(traj, space, M);
}

}  // namespace

TEST_CASE("quadratic program: projection onto a box") {
  QpProblem qp;
  qp.P = Eigen::MatrixXd::Identity(2, 2);
  qp.q = Eigen::Vector2d(-3.0, 0.5);  // minimizer (3, -0.5) without constraints
  qp.G.resize(2, 2);
  qp.G << 1, 0, 0, -1;
  qp.h = Eigen::Vector2d(1.0, 0.0);
  const auto res = solve_qp(qp);
  CHECK(res.converged);
  CHECK(res.kkt_residual() <= 1e-9);
  CHECK(res.x[0] == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(res.x[1] == doctest::Approx(0.0).scale(1.0).epsilon(1e-8));
  CHECK(res.dual[0] == doctest::Approx(2.0).epsilon(1e-7));
}

TEST_CASE("assembly of trivial systems") {
  SUBCASE("single particle") {
    const auto traj = random_trajectory(1, 2, 1, 4, trunc_lj_kernel());
    const auto p = assemble(traj, SplineSpace(1.0, 5));
    CHECK(p.C.rows() == 2 * 1 * 4);
    CHECK(p.C.cwiseAbs().maxCoeff() == 0.0);
    CHECK(p.v.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("two particles, one interval, flat coefficients") {
    Positions x0(2, 1);
    x0 << 0.2, 1.1;
    const auto traj = simulate(constant_kernel(0.3), x0, 0.1, 1, 10);
    const auto p = assemble(traj, SplineSpace(1.0, 2));
    REQUIRE(p.C.rows() == 2);
    const Eigen::VectorXd flat = p.C * Eigen::Vector2d(1.0, 1.0);
    const auto& x1 = traj.positions[1];
    CHECK(flat[0] == doctest::Approx((x1(1, 0) - x1(0, 0)) / 2.0).epsilon(1e-15));
    CHECK(flat[1] == doctest::Approx((x1(0, 0) - x1(1, 0)) / 2.0).epsilon(1e-15));
    CHECK(p.scale == 0.5);
  }
  SUBCASE("domain too small") {
    const auto traj = random_trajectory(2, 2, 6, 3, zero_kernel());
    CHECK_THROWS_AS(assemble(traj, SplineSpace(0.4 * max_pairwise_distance(traj), 5)), AssemblyError);
  }
}

TEST_CASE("(C, v) evaluation equals the direct double sum") {
  CounterRng rng(55);
  for (std::uint64_t rep = 0; rep < 20; ++rep) {
    const int dim = 1 + static_cast<int>(rep % 3);
    const int count = 2 + static_cast<int>(rep % 7);
    const auto traj = random_trajectory(rep, dim, count, 3 + static_cast<int>(rep % 5), trunc_lj_kernel());
    const auto p = problem_for(traj, 4 + static_cast<int>(rep), 10.0);
    SplineModel model;
    model.space = p.space;
    model.coeffs.resize(p.space.dim());
    for (auto& c : model.coeffs) c = rng.uniform(-3.0, 3.0);
    const double direct = oracle::direct_error_functional(traj, finite_difference_velocities(traj), model);
    CHECK(std::abs(error_functional(p, model.coeffs) - direct) <= 1e-10 * direct);
    CHECK(error_functional(p, Eigen::VectorXd::Zero(p.space.dim())) ==
          doctest::Approx(p.scale * p.v.squaredNorm()).epsilon(1e-15));
  }
}

TEST_CASE("error functional vanishes on an exact fit") {
  CounterRng rng(6);
  auto p = random_problem(rng, 4, 20, 10.0);
  const Eigen::VectorXd a = Eigen::Vector4d(0.5, -0.2, 0.1, 0.3);
  p.v = p.C * a;
  CHECK(error_functional(p, a) <= 1e-28);
}

TEST_CASE("error functional at the true kernel is second order in the snapshot step") {
  const Kernel a = affine_kernel(0.8, -0.3);
  const Positions x0 = sample_initial(2, 8, 2.0, 17);
  double previous = 0.0;
  for (int m : {10, 20, 40}) {
    const auto traj = simulate(a, x0, 0.5, m, 160 / m);
    const auto p = problem_for(traj, 7, 10.0);
    const double e = error_functional(p, interpolate(a, p.space).coeffs);
    if (previous > 0.0) {
      CHECK(previous / e >= 3.0);
      CHECK(previous / e <= 5.0);
    }
    previous = e;
  }
}

TEST_CASE("multi-trajectory assembly equals stacking") {
  const Kernel a = trunc_lj_kernel();
  const std::vector<Trajectory> runs{random_trajectory(3, 2, 5, 4, a), random_trajectory(4, 2, 7, 6, a)};
  const double R = std::max(max_pairwise_distance(runs[0]), max_pairwise_distance(runs[1]));
  const SplineSpace space(R, 9);
  const auto joint = assemble(runs, space, 5.0);
  const std::vector<LearnProblem> parts{assemble(runs[0], space, 5.0), assemble(runs[1], space, 5.0)};
  const auto stacked = stack(parts);
  CHECK(joint.C == stacked.C);
  CHECK(joint.v == stacked.v);
  CHECK(joint.scale == doctest::Approx(1.0 / (4 * 5 + 6 * 7)).epsilon(1e-15));

  const Eigen::VectorXd c = interpolate(a, space).coeffs;
  const double w0 = 2.0 * 5 * 4, w1 = 2.0 * 7 * 6;
  const double mean = (w0 * error_functional(parts[0], c) + w1 * error_functional(parts[1], c)) / (w0 + w1);
  CHECK(error_functional(joint, c) == doctest::Approx(mean).epsilon(1e-13));
}

TEST_CASE("minimize: boundary and closed-loop instances") {
  CounterRng rng(21);
  SUBCASE("M = 0") {
    auto p = random_problem(rng, 5, 30, 0.0);
    const auto rep = minimize(p);
    CHECK(rep.model.coeffs.cwiseAbs().maxCoeff() <= 1e-9);
    CHECK(rep.objective == doctest::Approx(p.scale * p.v.squaredNorm()).epsilon(1e-9));
  }
  SUBCASE("strictly feasible exact fit is recovered") {
    auto p = random_problem(rng, 6, 40, 10.0);
    Eigen::VectorXd truth(6);
    truth << 0.4, -0.3, 0.2, 0.5, -0.1, 0.0;
    p.v = p.C * truth;
    const auto rep = minimize(p);
    CHECK(rep.converged);
    CHECK((rep.model.coeffs - truth).cwiseAbs().maxCoeff() <= 1e-6);
    CHECK(rep.objective <= 1e-12);
  }
  SUBCASE("loose constraint gives the least-squares objective") {
    for (int rep = 0; rep < 10; ++rep) {
      auto p = random_problem(rng, 3 + rep, 12 + 3 * rep, 1.0);
      const Eigen::VectorXd ls = oracle::min_norm_lstsq(p);
      p.M = 10.0 * constraint_value(ls);
      const auto res = minimize(p);
      CHECK(res.objective == doctest::Approx(oracle::qp_objective(p, ls)).epsilon(1e-8).scale(1.0));
    }
  }
}

TEST_CASE("minimize: KKT residual and feasibility on random instances") {
  CounterRng rng(99);
  for (int rep = 0; rep < 100; ++rep) {
    const int D = 2 + rep % 25;
    const auto p = random_problem(rng, D, D + 5 + rep % 13, rng.uniform(0.05, 5.0));
    const auto res = minimize(p);
    CHECK(res.converged);
    CHECK(res.kkt_residual <= 1e-9);
    CHECK(constraint_value(res.model.coeffs) <= p.M + 1e-9);
    CHECK(res.objective >= 0.0);
  }
}

TEST_CASE("minimize matches grid search for D <= 3") {
  CounterRng rng(7);
  for (int rep = 0; rep < 6; ++rep) {
    const int D = 2 + rep % 2;
    const double M = D == 2 ? 1.0 : 0.2;
    const auto p = random_problem(rng, D, 8, M);
    const auto res = minimize(p);
    const double grid = oracle::grid_search_objective(p, M);
    CHECK(res.objective <= grid + 1e-9);
    CHECK(grid - res.objective <= 1e-6);
  }
}

TEST_CASE("minimize beats feasible probes") {
  const Kernel a = trunc_lj_kernel();
  const auto traj = random_trajectory(12, 2, 10, 10, a);
  const auto p = problem_for(traj, 20, 100.0);
  const auto res = minimize(p);
  CounterRng rng(1);
  for (int rep = 0; rep < 100; ++rep) {
    Eigen::VectorXd c(20);
    for (auto& x : c) x = rng.uniform(-1.0, 1.0);
    c *= rng.uniform(0.0, 1.0) * p.M / constraint_value(c);
    CHECK(res.objective <= error_functional(p, c) + 1e-9);
  }
  Eigen::VectorXd truth = interpolate(a, p.space).coeffs;
  if (constraint_value(truth) > p.M) truth *= p.M / constraint_value(truth);
  CHECK(res.objective <= error_functional(p, truth) + 1e-9);
}

TEST_CASE("objective is monotone in M") {
  const auto traj = random_trajectory(31, 2, 12, 10, trunc_lj_kernel());
  const std::vector<double> Ms{0.5, 1.0, 2.0, 5.0, 10.0, 50.0, 100.0, 100.0};
  const auto sweep = m_sweep(traj, 24, Ms);
  REQUIRE(sweep.objective.size() == Ms.size());
  for (std::size_t i = 1; i < Ms.size(); ++i) CHECK(sweep.objective[i] <= sweep.objective[i - 1] + 1e-6);
  CHECK(std::abs(sweep.objective[6] - sweep.objective[7]) <= 1e-9);
  CHECK(sweep.M_star <= 100.0);

  const auto single = m_sweep(traj, 24, {3.0});
  CHECK(single.objective.size() == 1);
  CHECK(single.M_star == 3.0);
  CHECK_THROWS_AS(m_sweep(traj, 24, {2.0, 1.0}), InputError);
  CHECK_THROWS_AS(m_sweep(traj, 24, {-1.0, 1.0}), InputError);
}

TEST_CASE("learn_kernel closed loops") {
  SUBCASE("kernel inside the trial space, exact velocities") {
    const Kernel a = constant_kernel(0.7);
    const auto traj = random_trajectory(8, 2, 9, 10, a);
    const auto vel = exact_velocities(traj, a);
    LearnOptions opts;
    opts.velocities = &vel;
    opts.reference = &a;
    const auto rep = learn_kernel(traj, 12, 10.0, opts);
    CHECK(rep.objective <= 1e-10);
    // knots whose hat function meets an observed distance
    const auto p = assemble(traj, rep.model.space, vel);
    int covered = 0;
    for (int l = 0; l < p.space.dim(); ++l) {
      if (p.C.col(l).cwiseAbs().maxCoeff() == 0.0) continue;
      ++covered;
      CHECK(std::abs(rep.model.coeffs[l] - 0.7) <= 1e-5);
    }
    CHECK(covered >= 6);
    REQUIRE(rep.l2_rho_error);
    CHECK(*rep.l2_rho_error <= 1e-5);
  }
  SUBCASE("zero kernel") {
    const auto traj = random_trajectory(9, 2, 9, 10, zero_kernel());
    const auto rep = learn_kernel(traj, 18, 100.0);
    CHECK(rep.model.coeffs.cwiseAbs().maxCoeff() <= 1e-6);
  }
  SUBCASE("N-sweep configuration at N = 80") {
    const auto out = run_once(trunc_lj_kernel(), RunSetup{2, 3.0, 0.5, 50, 10, 80, 160, 100.0}, 0, 80);
    CHECK(out.report.converged);
    CHECK(out.report.model.space.dim() == 160);
    CHECK(constraint_value(out.report.model) <= 100.0 + 1e-9);
    CHECK(out.report.l2_rho_error.has_value());
  }
}

TEST_CASE("M sweep at N = 20, D = 60, T = 1") {
  const Kernel a = trunc_lj_kernel();
  const auto traj = simulate(a, sample_initial(2, 20, 3.0, derive_seed(0, 20)), 1.0, 50, 10);
  std::vector<double> Ms;
  for (int k = 10; k <= 40; k += 5) Ms.push_back(2.7 * k);
  const auto sweep = m_sweep(traj, 60, Ms);
  for (std::size_t i = 1; i < Ms.size(); ++i) CHECK(sweep.objective[i] <= sweep.objective[i - 1] + 1e-6);
  for (const auto& rep : sweep.reports) CHECK(rep.converged);
}

TEST_CASE("run_once is deterministic") {
  const RunSetup setup{2, 3.0, 0.5, 10, 5, 8, 16, 100.0};
  const auto a = run_once(trunc_lj_kernel(), setup, 42, 3);
  const auto b = run_once(trunc_lj_kernel(), setup, 42, 3);
  CHECK(a.report.model.coeffs == b.report.model.coeffs);
  CHECK(a.trajectory.seed == derive_seed(42, 3));
}

TEST_CASE("Monte Carlo averaging") {
  const RunSetup setup{2, 3.0, 0.5, 10, 5, 8, 16, 100.0};
  const auto one = run_once(trunc_lj_kernel(), setup, 1, 0).report;

  const auto same = average_models({one, one, one});
  CHECK(same.stdev.cwiseAbs().maxCoeff() == 0.0);
  CHECK(same.mean.coeffs == one.model.coeffs);
  CHECK(same.lo == same.hi);

  LearnReport plus = one, minus = one;
  plus.model.coeffs = Eigen::VectorXd::Constant(one.model.space.dim(), 0.6);
  minus.model.coeffs = -plus.model.coeffs;
  const auto pm = average_models({plus, minus});
  CHECK(pm.mean.coeffs.cwiseAbs().maxCoeff() == 0.0);
  CHECK(pm.stdev[0] == doctest::Approx(0.6 * std::sqrt(2.0)).epsilon(1e-15));
  CHECK(pm.hi[0] == doctest::Approx(1.96 * 0.6).epsilon(1e-14));

  CHECK_THROWS_AS(average_models({one}), InputError);
  CHECK_THROWS_AS(montecarlo_average(trunc_lj_kernel(), setup, 1, 0), InputError);
}

TEST_CASE("Monte Carlo at N = 50, D = 150 completes") {
  const auto mc = montecarlo_average(trunc_lj_kernel(), RunSetup{2, 2.0, 0.5, 50, 10, 50, 150, 1000.0}, 5, 0);
  CHECK(mc.runs.size() == 5);
  for (const auto& r : mc.runs) {
    CHECK(r.converged);
    CHECK(r.model.space == mc.mean.space);
  }
  CHECK((mc.hi - mc.lo).minCoeff() >= 0.0);
}
