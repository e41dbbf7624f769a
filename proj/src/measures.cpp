#include "kinfer/measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <tuple>

#include "kinfer/errors.hpp"
#include "kinfer/rng.hpp"
#include "kinfer/trajectory_io.hpp"

namespace kinfer {

namespace {

constexpr std::size_t kMaxSimplexAtoms = 2000;

void require_probability(const DiscreteMeasure& m, const char* which) {
  for (double w : m.weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw InputError(std::string(which) + " has a negative or non-finite weight");
  }
  if (std::abs(m.total_mass() - 1.0) > 1e-9) {
    throw InputError(std::string(which) + " is not a probability measure");
  }
  if (m.locations.size() != m.weights.size() * static_cast<std::size_t>(m.dim)) {
    throw InputError(std::string(which) + " has inconsistent location storage");
  }
}

struct Atom1d {
  double x;
  double w;
};

std::vector<Atom1d> sorted_atoms(const DiscreteMeasure& m) {
  std::vector<Atom1d> atoms(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) atoms[i] = {m.locations[i], m.weights[i]};
  std::sort(atoms.begin(), atoms.end(), [](const Atom1d& a, const Atom1d& b) { return a.x < b.x; });
  return atoms;
}

// Transportation problem between supplies and demands with dense costs,
// solved by the network simplex on the bipartite graph. Basic cells always
// form a spanning tree over the n + m nodes (rows first, then columns).
class TransportSimplex {
 public:
  TransportSimplex(std::vector<double> supply, std::vector<double> demand, std::vector<double> cost)
      : n_(supply.size()), m_(demand.size()), supply_(std::move(supply)), demand_(std::move(demand)),
        cost_(std::move(cost)), basic_(n_ * m_, 0) {}

  double solve() {
    northwest_corner();
    const double cost_scale = std::max(1.0, *std::max_element(cost_.begin(), cost_.end()));
    const double tol = 1e-13 * cost_scale;
    const std::size_t max_pivots = 50 * (n_ + m_) * (n_ + m_) + 1000;
    std::size_t degenerate_run = 0;
    for (std::size_t pivot = 0;; ++pivot) {
      if (pivot > max_pivots) throw Error("network simplex failed to terminate");
      compute_potentials();
      const bool bland = degenerate_run > n_ + m_;
      std::size_t enter = kNone;
      double best = -tol;
      for (std::size_t c = 0; c < n_ * m_; ++c) {
        if (basic_[c]) continue;
        const double rc = cost_[c] - u_[c / m_] - v_[c % m_];
        if (rc < best) {
          best = rc;
          enter = c;
          if (bland) break;
        }
      }
      if (enter == kNone) break;
      const double step = pivot_on(enter, bland);
      degenerate_run = step > 0.0 ? 0 : degenerate_run + 1;
    }
    double total = 0.0;
    for (const auto& cell : cells_) total += cell.flow * cost_[cell.index];
    return total;
  }

 private:
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  struct Cell {
    std::size_t index;
    double flow;
  };

  void northwest_corner() {
    std::size_t i = 0, j = 0;
    double ra = supply_[0], rb = demand_[0];
    while (true) {
      const double f = std::min(ra, rb);
      add_cell(i * m_ + j, std::max(f, 0.0));
      ra -= f;
      rb -= f;
      if (i == n_ - 1 && j == m_ - 1) break;
      if (i == n_ - 1 || (j < m_ - 1 && rb < ra)) {
        ++j;
        rb = demand_[j];
      } else {
        ++i;
        ra = supply_[i];
      }
    }
  }

  void add_cell(std::size_t index, double flow) {
    cells_.push_back({index, flow});
    basic_[index] = 1;
  }

  void build_adjacency() {
    adjacency_.assign(n_ + m_, {});
    for (std::size_t k = 0; k < cells_.size(); ++k) {
      const std::size_t row = cells_[k].index / m_, col = n_ + cells_[k].index % m_;
      adjacency_[row].push_back(k);
      adjacency_[col].push_back(k);
    }
  }

  std::size_t other_end(std::size_t cell, std::size_t node) const {
    const std::size_t row = cells_[cell].index / m_, col = n_ + cells_[cell].index % m_;
    return node == row ? col : row;
  }

  void compute_potentials() {
    build_adjacency();
    u_.assign(n_, 0.0);
    v_.assign(m_, 0.0);
    std::vector<char> seen(n_ + m_, 0);
    std::vector<std::size_t> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
      const std::size_t node = stack.back();
      stack.pop_back();
      for (std::size_t k : adjacency_[node]) {
        const std::size_t next = other_end(k, node);
        if (seen[next]) continue;
        seen[next] = 1;
        const double c = cost_[cells_[k].index];
        if (next >= n_) {
          v_[next - n_] = c - u_[node];
        } else {
          u_[next] = c - v_[node - n_];
        }
        stack.push_back(next);
      }
    }
  }

  // Returns the flow moved around the cycle.
  double pivot_on(std::size_t enter, bool bland) {
    const std::size_t row = enter / m_, col = n_ + enter % m_;
    // tree path from col back to row
    std::vector<std::size_t> parent_cell(n_ + m_, kNone);
    std::vector<char> seen(n_ + m_, 0);
    std::vector<std::size_t> queue{col};
    seen[col] = 1;
    for (std::size_t q = 0; q < queue.size() && !seen[row]; ++q) {
      const std::size_t node = queue[q];
      for (std::size_t k : adjacency_[node]) {
        const std::size_t next = other_end(k, node);
        if (seen[next]) continue;
        seen[next] = 1;
        parent_cell[next] = k;
        queue.push_back(next);
      }
    }
    std::vector<std::size_t> path;  // cells from row back to col
    for (std::size_t node = row; node != col;) {
      const std::size_t k = parent_cell[node];
      path.push_back(k);
      node = other_end(k, node);
    }
    // path[0] touches the entering row: signs alternate -, +, -, ... along it
    double theta = std::numeric_limits<double>::infinity();
    std::size_t leave = kNone;
    for (std::size_t p = 0; p < path.size(); p += 2) {
      const auto& cell = cells_[path[p]];
      const bool better = cell.flow < theta || (bland && cell.flow == theta && cell.index < cells_[leave].index);
      if (better) {
        theta = cell.flow;
        leave = path[p];
      }
    }
    for (std::size_t p = 0; p < path.size(); ++p) {
      auto& flow = cells_[path[p]].flow;
      flow = p % 2 == 0 ? std::max(flow - theta, 0.0) : flow + theta;
    }
    basic_[cells_[leave].index] = 0;
    cells_[leave] = {enter, theta};
    basic_[enter] = 1;
    return theta;
  }

  std::size_t n_, m_;
  std::vector<double> supply_, demand_, cost_;
  std::vector<char> basic_;
  std::vector<Cell> cells_;
  std::vector<std::vector<std::size_t>> adjacency_;
  std::vector<double> u_, v_;
};

DiscreteMeasure drop_empty_atoms(const DiscreteMeasure& m) {
  DiscreteMeasure out;
  out.dim = m.dim;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m.weights[i] <= 0.0) continue;
    out.weights.push_back(m.weights[i]);
    const auto loc = m.location(i);
    out.locations.insert(out.locations.end(), loc.begin(), loc.end());
  }
  return out;
}

}  // namespace

double DiscreteMeasure::total_mass() const {
  // pairwise summation keeps the error at O(log n) ulps
  std::vector<double> w = weights;
  if (w.empty()) return 0.0;
  while (w.size() > 1) {
    std::vector<double> next((w.size() + 1) / 2);
    for (std::size_t i = 0; i < next.size(); ++i) next[i] = w[2 * i] + (2 * i + 1 < w.size() ? w[2 * i + 1] : 0.0);
    w.swap(next);
  }
  return w[0];
}

DiscreteMeasure DiscreteMeasure::empirical(const Positions& x) {
  DiscreteMeasure m;
  m.dim = static_cast<int>(x.cols());
  m.locations.assign(x.data(), x.data() + x.size());
  m.weights.assign(x.rows(), 1.0 / static_cast<double>(x.rows()));
  return m;
}

DiscreteMeasure DiscreteMeasure::on_line(std::vector<double> points, std::vector<double> weights) {
  if (points.size() != weights.size()) throw InputError("points and weights differ in length");
  DiscreteMeasure m;
  m.dim = 1;
  m.locations = std::move(points);
  m.weights = std::move(weights);
  return m;
}

double wasserstein1_line(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  if (mu.dim != 1 || nu.dim != 1) throw InputError("quantile coupling needs measures on the line");
  require_probability(mu, "first measure");
  require_probability(nu, "second measure");
  const auto a = sorted_atoms(mu);
  const auto b = sorted_atoms(nu);
  // W1 = integral of |F_mu - F_nu| over the line
  std::size_t i = 0, j = 0;
  double fa = 0.0, fb = 0.0, total = 0.0;
  double x = std::min(a.front().x, b.front().x);
  while (i < a.size() || j < b.size()) {
    const double next = std::min(i < a.size() ? a[i].x : std::numeric_limits<double>::infinity(),
                                 j < b.size() ? b[j].x : std::numeric_limits<double>::infinity());
    total += std::abs(fa - fb) * (next - x);
    x = next;
    while (i < a.size() && a[i].x == x) fa += a[i++].w;
    while (j < b.size() && b[j].x == x) fb += b[j++].w;
  }
  return total;
}

double wasserstein1_network_simplex(const DiscreteMeasure& mu_in, const DiscreteMeasure& nu_in) {
  if (mu_in.dim != nu_in.dim) throw InputError("measures live in different dimensions");
  require_probability(mu_in, "first measure");
  require_probability(nu_in, "second measure");
  // Fixed argument order, so that W1(mu, nu) == W1(nu, mu) bit for bit.
  const bool swap = std::tie(nu_in.weights, nu_in.locations) < std::tie(mu_in.weights, mu_in.locations);
  const auto mu = drop_empty_atoms(swap ? nu_in : mu_in);
  const auto nu = drop_empty_atoms(swap ? mu_in : nu_in);
  if (mu.size() + nu.size() > kMaxSimplexAtoms) {
    throw SizeError("exact transport limited to " + std::to_string(kMaxSimplexAtoms) +
                    " atoms in total; project to 1D or subsample");
  }
  std::vector<double> cost(mu.size() * nu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const auto p = mu.location(i);
    for (std::size_t j = 0; j < nu.size(); ++j) {
      const auto q = nu.location(j);
      double r2 = 0.0;
      for (int l = 0; l < mu.dim; ++l) r2 += (p[l] - q[l]) * (p[l] - q[l]);
      cost[i * nu.size() + j] = std::sqrt(r2);
    }
  }
  // rebalance the last demand so both sides carry identical mass
  auto demand = nu.weights;
  const double gap = std::accumulate(mu.weights.begin(), mu.weights.end(), 0.0) -
                     std::accumulate(demand.begin(), demand.end(), 0.0);
  demand.back() = std::max(demand.back() + gap, 0.0);
  return TransportSimplex(mu.weights, std::move(demand), std::move(cost)).solve();
}

double wasserstein1(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  if (mu.dim != nu.dim) throw InputError("measures live in different dimensions");
  if (mu.dim == 1) return wasserstein1_line(mu, nu);
  return wasserstein1_network_simplex(mu, nu);
}

double wasserstein1_to_uniform(std::span<const double> samples, double lo, double hi) {
  if (samples.empty()) throw InputError("no samples");
  if (!(hi > lo)) throw InputError("uniform law needs lo < hi");
  std::vector<double> x(samples.begin(), samples.end());
  std::sort(x.begin(), x.end());
  const double width = hi - lo;
  const double n = static_cast<double>(x.size());
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    // integral over u in [u0, u1] of |x_i - (lo + width u)|
    const double u0 = i / n, u1 = (i + 1) / n;
    const double c = x[i] - lo;
    auto primitive = [&](double u) { return c * u - 0.5 * width * u * u; };
    const double cross = std::clamp(c / width, u0, u1);
    total += std::abs(primitive(cross) - primitive(u0)) + std::abs(primitive(u1) - primitive(cross));
  }
  return total;
}

RhoPair empirical_rho(const Trajectory& traj) {
  const int m = traj.intervals();
  if (m < 1) throw InputError("empirical rho needs at least two snapshots");
  const std::size_t n = static_cast<std::size_t>(traj.particle_count);
  std::vector<double> dist;
  dist.reserve(static_cast<std::size_t>(m) * n * n);
  for (int k = 1; k <= m; ++k) {
    const auto& x = traj.positions[k];
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) dist.push_back((x.row(i) - x.row(j)).norm());
    }
  }
  std::sort(dist.begin(), dist.end());
  const double denom = static_cast<double>(m) * static_cast<double>(n) * static_cast<double>(n);

  RhoPair pair;
  for (std::size_t a = 0; a < dist.size();) {
    std::size_t b = a;
    while (b < dist.size() && dist[b] == dist[a]) ++b;
    const double s = dist[a];
    const double w = static_cast<double>(b - a) / denom;
    pair.rho_bar.locations.push_back(s);
    pair.rho_bar.weights.push_back(w);
    pair.rho.locations.push_back(s);
    pair.rho.weights.push_back(s * s * w);
    a = b;
  }
  return pair;
}

double l2_rho_norm(const std::function<double(double)>& f, const DiscreteMeasure& rho) {
  if (rho.dim != 1) throw InputError("rho must live on the half-line");
  double total = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i) {
    if (rho.weights[i] == 0.0) continue;
    const double value = f(rho.locations[i]);
    if (!std::isfinite(value)) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "function is not finite at s = " << rho.locations[i];
      throw EvaluationError(msg.str());
    }
    total += rho.weights[i] * value * value;
  }
  return std::sqrt(total);
}

void write_rho_csv(std::ostream& out, const RhoPair& pair) {
  out << "s,weight_bar,weight_rho\n";
  std::vector<std::size_t> order(pair.rho_bar.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return pair.rho_bar.locations[a] < pair.rho_bar.locations[b]; });
  for (std::size_t i : order) {
    out << format_double(pair.rho_bar.locations[i]) << ',' << format_double(pair.rho_bar.weights[i]) << ','
        << format_double(pair.rho.weights[i]) << '\n';
  }
}

std::vector<MeanFieldRow> meanfield_convergence(const Kernel& kernel, int dim, double half_width,
                                                const std::vector<int>& counts, double horizon, int intervals,
                                                int substeps, std::uint64_t seed) {
  if (counts.empty()) throw InputError("empty particle-count list");
  if (!std::is_sorted(counts.begin(), counts.end())) throw InputError("particle counts must increase");
  std::vector<DiscreteMeasure> finals;
  std::vector<MeanFieldRow> rows;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    const Positions x0 = sample_initial(dim, counts[k], half_width, derive_seed(seed, k));
    const Trajectory traj = simulate(kernel, x0, horizon, intervals, substeps, derive_seed(seed, k));
    finals.push_back(DiscreteMeasure::empirical(traj.positions.back()));
    MeanFieldRow row;
    row.particle_count = counts[k];
    row.w1_initial = dim == 1 ? wasserstein1_to_uniform({x0.data(), static_cast<std::size_t>(x0.size())},
                                                        -half_width, half_width)
                              : std::numeric_limits<double>::quiet_NaN();
    rows.push_back(row);
  }
  for (std::size_t k = 0; k < rows.size(); ++k) rows[k].w1_final = wasserstein1(finals[k], finals.back());
  return rows;
}

}  // namespace kinfer
