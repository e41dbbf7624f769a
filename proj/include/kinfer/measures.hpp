#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "kinfer/dynamics.hpp"

namespace kinfer {

// Weighted atoms in R^dim; locations are stored row-major, one atom per row.
struct DiscreteMeasure {
  int dim = 1;
  std::vector<double> locations;
  std::vector<double> weights;

  std::size_t size() const { return weights.size(); }
  std::span<const double> location(std::size_t i) const {
    return {locations.data() + i * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)};
  }
  double total_mass() const;

  // Uniform probability measure on the rows of `x`.
  static DiscreteMeasure empirical(const Positions& x);
  static DiscreteMeasure on_line(std::vector<double> points, std::vector<double> weights);
};

// Time-averaged law of pairwise distances (rho_bar) and its s^2-weighted
// version (rho). Both share the same sorted atoms.
struct RhoPair {
  DiscreteMeasure rho_bar;
  DiscreteMeasure rho;
};

// Exact Wasserstein-1 distance between probability measures: quantile
// coupling on the line, network simplex otherwise (at most 2000 atoms in
// total, SizeError beyond that).
double wasserstein1(const DiscreteMeasure& mu, const DiscreteMeasure& nu);

// The two exact routes, exposed individually. The network simplex works in
// any dimension, including 1.
double wasserstein1_line(const DiscreteMeasure& mu, const DiscreteMeasure& nu);
double wasserstein1_network_simplex(const DiscreteMeasure& mu, const DiscreteMeasure& nu);

// W1 between the empirical measure of `samples` and the uniform law on [lo, hi].
double wasserstein1_to_uniform(std::span<const double> samples, double lo, double hi);

// Atoms at |x_i(t_k) - x_j(t_k)| for k = 1..m and all ordered pairs (i, j),
// each of weight 1 / (m N^2); coincident atoms are merged.
RhoPair empirical_rho(const Trajectory& traj);

// sqrt(sum_atoms weight * f(s)^2).
double l2_rho_norm(const std::function<double(double)>& f, const DiscreteMeasure& rho);

// CSV `s,weight_bar,weight_rho`, sorted by s.
void write_rho_csv(std::ostream& out, const RhoPair& pair);

struct MeanFieldRow {
  int particle_count = 0;
  // W1(mu^N(T), mu^{N_ref}(T)).
  double w1_final = 0.0;
  // W1(mu_0^N, mu_0) for d = 1; NaN otherwise.
  double w1_initial = 0.0;
};

// Simulates every N in `counts` from the uniform law on [-L, L]^d (seed of
// run k derived from `seed` and k) and compares final empirical measures
// against the largest N.
std::vector<MeanFieldRow> meanfield_convergence(const Kernel& kernel, int dim, double half_width,
                                                const std::vector<int>& counts, double horizon, int intervals,
                                                int substeps, std::uint64_t seed);

}  // namespace kinfer
