#pragma once

#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

namespace kinfer {

// Radial interaction kernel a: [0, inf) -> R. The force exerted on a particle
// at x by a particle at y is a(|x - y|) (y - x).
struct Kernel {
  std::string name;
  std::function<double(double)> evaluator;
  // Upper bound on |a| over [0, inf).
  double sup_bound = 0.0;
  bool singular_at_zero = false;
  // a vanishes identically beyond this distance.
  double support_radius = std::numeric_limits<double>::infinity();

  double operator()(double r) const { return evaluator(r); }

  // Dense-grid estimates over [lo, hi] (10^4 points by default).
  double sup_on(double lo, double hi, int points = 10000) const;
  double lipschitz_bound_on(double lo, double hi, int points = 10000) const;
};

// Named kernel plus numeric parameters overriding the catalog defaults.
struct KernelSpec {
  std::string name;
  std::map<std::string, double> params;
};

Kernel make_kernel(const KernelSpec& spec);
inline Kernel make_kernel(const std::string& name) { return make_kernel(KernelSpec{name, {}}); }

// Names and default parameters of every catalog entry.
std::map<std::string, std::map<std::string, double>> builtin_kernels();

Kernel zero_kernel();
Kernel constant_kernel(double c);
// a(r) = c0 + c1 r; reproduced exactly by linear splines.
Kernel affine_kernel(double c0, double c1);

struct TruncLjParams {
  double G = 1.0;
  double r0 = 1.0;
  double cap = 100.0;
  double r_cut = 4.0;
  double ramp = 0.5;
};
// clip(G (r0^8/r^8 - r0^4/r^4), -cap, cap), smoothly ramped to zero on
// [r_cut, r_cut + ramp].
Kernel trunc_lj_kernel(const TruncLjParams& p = {});

struct OscSingParams {
  double omega = 20.0;
  double cap = 100.0;
};
// r^{-1/2} (1 + sin(omega r)) with the r^{-1/2} factor capped at `cap`,
// i.e. below r = 1/cap^2.
Kernel osc_sing_kernel(const OscSingParams& p = {});

// a + b, with bounds combined conservatively.
Kernel sum_kernels(const Kernel& a, const Kernel& b, std::string name = {});

// Lipschitz estimate of the radial profile r -> r a(r) and of a itself, i.e.
// the Lipschitz constant of F[a](z) = -a(|z|) z on the ball of radius `radius`.
double force_lipschitz_on_ball(const Kernel& a, double radius, int points = 10000);

}  // namespace kinfer
