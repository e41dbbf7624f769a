#include "kinfer/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "kinfer/errors.hpp"

namespace kinfer {

namespace {

double smooth_cutoff(double r, double r_cut, double width) {
  if (r <= r_cut) return 1.0;
  if (r >= r_cut + width) return 0.0;
  const double s = (r - r_cut) / width;
  return 1.0 - s * s * (3.0 - 2.0 * s);
}

double param(const std::map<std::string, double>& given, const std::map<std::string, double>& defaults,
             const std::string& key) {
  auto it = given.find(key);
  return it != given.end() ? it->second : defaults.at(key);
}

}  // namespace

double Kernel::sup_on(double lo, double hi, int points) const {
  hi = std::min(hi, support_radius);
  if (hi < lo) return 0.0;
  double best = 0.0;
  for (int k = 0; k < points; ++k) {
    const double r = lo + (hi - lo) * k / (points - 1);
    best = std::max(best, std::abs(evaluator(r)));
  }
  return best;
}

double Kernel::lipschitz_bound_on(double lo, double hi, int points) const {
  // beyond the support the kernel is identically zero
  hi = std::min(hi, support_radius);
  if (hi <= lo) return 0.0;
  const double h = (hi - lo) / (points - 1);
  double best = 0.0;
  double prev = evaluator(lo);
  for (int k = 1; k < points; ++k) {
    const double cur = evaluator(lo + h * k);
    best = std::max(best, std::abs(cur - prev) / h);
    prev = cur;
  }
  return best;
}

Kernel zero_kernel() {
  return Kernel{"zero", [](double) { return 0.0; }, 0.0, false, 0.0};
}

Kernel constant_kernel(double c) {
  return Kernel{"constant", [c](double) { return c; }, std::abs(c), false};
}

Kernel affine_kernel(double c0, double c1) {
  // sup_bound is infinite unless the slope vanishes; callers work on compacts.
  const double sup = c1 == 0.0 ? std::abs(c0) : std::numeric_limits<double>::infinity();
  return Kernel{"affine", [c0, c1](double r) { return c0 + c1 * r; }, sup, false};
}

Kernel trunc_lj_kernel(const TruncLjParams& p) {
  auto eval = [p](double r) {
    double core;
    if (r <= 0.0) {
      core = p.cap;
    } else {
      const double q4 = std::pow(p.r0 / r, 4);
      core = std::clamp(p.G * (q4 * q4 - q4), -p.cap, p.cap);
    }
    return core * smooth_cutoff(r, p.r_cut, p.ramp);
  };
  return Kernel{"trunc_lj", eval, p.cap, false, p.r_cut + p.ramp};
}

Kernel osc_sing_kernel(const OscSingParams& p) {
  auto eval = [p](double r) {
    const double radial = r > 0.0 ? std::min(1.0 / std::sqrt(r), p.cap) : p.cap;
    return radial * (1.0 + std::sin(p.omega * r));
  };
  return Kernel{"osc_sing", eval, 2.0 * p.cap, true};
}

Kernel sum_kernels(const Kernel& a, const Kernel& b, std::string name) {
  if (name.empty()) name = a.name + "+" + b.name;
  auto fa = a.evaluator;
  auto fb = b.evaluator;
  return Kernel{std::move(name), [fa, fb](double r) { return fa(r) + fb(r); }, a.sup_bound + b.sup_bound,
                a.singular_at_zero || b.singular_at_zero, std::max(a.support_radius, b.support_radius)};
}

std::map<std::string, std::map<std::string, double>> builtin_kernels() {
  return {
      {"trunc_lj", {{"G", 1.0}, {"r0", 1.0}, {"cap", 100.0}, {"r_cut", 4.0}, {"ramp", 0.5}}},
      {"osc_sing", {{"omega", 20.0}, {"cap", 100.0}}},
      {"zero", {}},
      {"constant", {{"c", 1.0}}},
      {"affine", {{"c0", 1.0}, {"c1", 0.0}}},
  };
}

Kernel make_kernel(const KernelSpec& spec) {
  const auto catalog = builtin_kernels();
  auto it = catalog.find(spec.name);
  if (it == catalog.end()) throw LookupError("unknown kernel '" + spec.name + "'");
  const auto& defaults = it->second;
  for (const auto& [key, value] : spec.params) {
    if (!defaults.count(key)) throw InputError("kernel '" + spec.name + "' has no parameter '" + key + "'");
    if (!std::isfinite(value)) throw InputError("kernel parameter '" + key + "' is not finite");
  }
  auto get = [&](const char* key) { return param(spec.params, defaults, key); };

  if (spec.name == "zero") return zero_kernel();
  if (spec.name == "constant") return constant_kernel(get("c"));
  if (spec.name == "affine") return affine_kernel(get("c0"), get("c1"));
  if (spec.name == "osc_sing") return osc_sing_kernel({get("omega"), get("cap")});
  return trunc_lj_kernel({get("G"), get("r0"), get("cap"), get("r_cut"), get("ramp")});
}

double force_lipschitz_on_ball(const Kernel& a, double radius, int points) {
  // DF[a](z) has eigenvalues -a(s) and -(s a(s))' with s = |z|.
  const double hi = std::min(radius, a.support_radius);
  double best = a.sup_on(0.0, hi, points);
  if (hi <= 0.0) return best;
  const double h = hi / (points - 1);
  double prev = 0.0;
  for (int k = 1; k < points; ++k) {
    const double s = h * k;
    const double cur = s * a(s);
    best = std::max(best, std::abs(cur - prev) / h);
    prev = cur;
  }
  return best;
}

}  // namespace kinfer
