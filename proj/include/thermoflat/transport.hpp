#pragma once

// Delta-functionals over explicit ergodic decompositions, the affine
// pressures, order-parameter distributions, the finite transport problem
// with cost P_NL and its dual, and Monte-Carlo Birkhoff sampling.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "thermoflat/linearizer.hpp"
#include "thermoflat/parallel.hpp"

namespace thermoflat {

/// F = g o tau for a list of potentials.
struct FSpec {
  ConvexSpec g;
  std::vector<CylinderPotential> potentials;
};

class DiscreteDualMeasure {
 public:
  DiscreteDualMeasure() = default;
  DiscreteDualMeasure(std::vector<DualPoint> support, Vector weights)
      : support_(std::move(support)), weights_(std::move(weights)) {
    if (support_.empty() || support_.size() != weights_.size())
      throw ModelError("dual measure: support and weights must be nonempty and of equal length");
    double s = 0.0;
    for (double w : weights_) {
      if (!(w >= 0.0)) throw ModelError("dual measure: negative weight");
      s += w;
    }
    if (std::abs(s - 1.0) > Tolerances::probability_sum) throw ModelError("dual measure: weights must sum to 1");
    for (std::size_t i = 0; i < support_.size(); ++i) {
      if (support_[i].size() != support_[0].size()) throw ModelError("dual measure: mixed dimensions");
      for (std::size_t j = 0; j < i; ++j)
        if (support_[i].size() > 0 && support_[i].max_abs_diff(support_[j]) == 0.0)
          throw ModelError("dual measure: repeated support point");
    }
  }

  /// Pushes weights through, merging points within `radius` (max norm) of an
  /// earlier representative. Radius 0 merges exact duplicates only.
  static DiscreteDualMeasure clustered(const std::vector<DualPoint>& points, const Vector& weights,
                                       double radius) {
    if (points.size() != weights.size()) throw ModelError("dual measure: length mismatch");
    std::vector<DualPoint> sup;
    Vector w;
    for (std::size_t i = 0; i < points.size(); ++i) {
      std::size_t j = 0;
      for (; j < sup.size(); ++j)
        if (sup[j].size() == 0 || sup[j].max_abs_diff(points[i]) <= radius) break;
      if (j == sup.size()) {
        sup.push_back(points[i]);
        w.push_back(0.0);
      }
      w[j] += weights[i];
    }
    const double s = std::accumulate(w.begin(), w.end(), 0.0);
    for (double& v : w) v /= s;
    return {std::move(sup), std::move(w)};
  }

  static DiscreteDualMeasure dirac(DualPoint p) { return {{std::move(p)}, {1.0}}; }

  const std::vector<DualPoint>& support() const { return support_; }
  const Vector& weights() const { return weights_; }
  std::size_t size() const { return support_.size(); }
  std::size_t dim() const { return support_.empty() ? 0 : support_.front().size(); }

  DualPoint mean() const {
    Vector m(dim(), 0.0);
    for (std::size_t i = 0; i < size(); ++i)
      for (std::size_t j = 0; j < dim(); ++j) m[j] += weights_[i] * support_[i][j];
    return DualPoint(std::move(m));
  }

 private:
  std::vector<DualPoint> support_;
  Vector weights_;
};

/// Transport plan n[i][j] over rows x columns.
struct Coupling {
  std::size_t rows = 0, cols = 0;
  Vector n;

  double operator()(std::size_t i, std::size_t j) const { return n[i * cols + j]; }
  double& operator()(std::size_t i, std::size_t j) { return n[i * cols + j]; }

  /// Largest violation of the marginal constraints or of nonnegativity.
  double marginal_error(const Vector& a, const Vector& b) const {
    double err = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < cols; ++j) {
        s += (*this)(i, j);
        err = std::max(err, -(*this)(i, j));
      }
      err = std::max(err, std::abs(s - a[i]));
    }
    for (std::size_t j = 0; j < cols; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < rows; ++i) s += (*this)(i, j);
      err = std::max(err, std::abs(s - b[j]));
    }
    return err;
  }
};

// ---------------------------------------------------------------------------
// Delta-functionals

inline ExtReal delta_functional(const FSpec& f, const MixtureMeasure& mix) {
  if (!mix.all_ergodic()) throw ModelError("Δ-functional requires explicit ergodic decomposition");
  ExtReal s = 0.0;
  for (const auto& c : mix.components()) s = s + c.weight * f.g.value(expectations(c.measure, f.potentials));
  return s;
}

namespace detail {

inline int max_potential_memory(const std::vector<CylinderPotential>& phis) {
  int m = 1;
  for (const auto& p : phis) m = std::max(m, p.memory());
  return m;
}

inline ExtReal delta_from_words(const FSpec& f, const Vector& probs, std::size_t k, int n) {
  if (n < detail::max_potential_memory(f.potentials))
    throw ModelError("delta_via_birkhoff: n below the potential memory");
  const std::size_t total = probs.size();
  const std::size_t d = f.potentials.size();
  std::vector<ExtReal> terms(total, ExtReal(0.0));
  parallel_for(total, [&](std::size_t w) {
    if (probs[w] == 0.0) return;
    const auto word = index_word(w, k, n);
    Vector avg(d);
    for (std::size_t i = 0; i < d; ++i) avg[i] = birkhoff_average(f.potentials[i], word);
    terms[w] = probs[w] * f.g.value(avg);
  });
  ExtReal s = 0.0;
  for (const auto& t : terms) s = s + t;
  return s;
}

inline void check_enumerable(std::size_t k, int n) {
  if (n < 1 || n > 14) throw ModelError("delta_via_birkhoff: n must lie in [1, 14]");
  if (std::pow(static_cast<double>(k), n) > 2e6) throw ModelError("delta_via_birkhoff: k^n exceeds 2e6 words");
}

}  // namespace detail

/// sum_w mu[w] g(E_n(w)) over all words of length n, with periodic
/// Birkhoff averages.
inline ExtReal delta_via_birkhoff(const FSpec& f, const MarkovMeasure& mu, int n) {
  detail::check_enumerable(mu.k(), n);
  return detail::delta_from_words(f, mu.word_probabilities(n), mu.k(), n);
}

inline ExtReal delta_via_birkhoff(const FSpec& f, const MixtureMeasure& mix, int n) {
  detail::check_enumerable(mix.k(), n);
  return detail::delta_from_words(f, mix.word_probabilities(n), mix.k(), n);
}

inline ExtReal affine_pressure_flat(const ModelSpec& model, const MixtureMeasure& mix) {
  if (!mix.all_ergodic()) throw ModelError("Δ-functional requires explicit ergodic decomposition");
  ExtReal v = mixture_entropy(mix, model.alphabet);
  if (model.base) v = v + mixture_expectation(mix, *model.base);
  if (model.g_minus) {
    const ExtReal dm = delta_functional({*model.g_minus, model.minus}, mix);
    if (dm.is_pos_inf()) return ExtReal::neg_inf();
    v = v - dm;
  }
  if (model.g_plus) v = v + delta_functional({*model.g_plus, model.plus}, mix);
  return v;
}

inline ExtReal affine_pressure_sharp(const ModelSpec& model, const MixtureMeasure& mix) {
  if (!mix.all_ergodic()) throw ModelError("Δ-functional requires explicit ergodic decomposition");
  ExtReal v = mixture_entropy(mix, model.alphabet);
  if (model.base) v = v + mixture_expectation(mix, *model.base);
  if (model.g_minus) {
    Vector tau(model.minus.size());
    for (std::size_t i = 0; i < tau.size(); ++i) tau[i] = mixture_expectation(mix, model.minus[i]);
    const ExtReal gm = model.g_minus->value(tau);
    if (gm.is_pos_inf()) return ExtReal::neg_inf();
    v = v - gm;
  }
  if (model.g_plus) v = v + delta_functional({*model.g_plus, model.plus}, mix);
  return v;
}

// ---------------------------------------------------------------------------
// Order-parameter distributions

struct OrderParameterDistribution {
  DiscreteDualMeasure plus;
  DiscreteDualMeasure minus;
};

namespace detail {

inline DualPoint order_point(const std::optional<ConvexSpec>& g, const Vector& averages) {
  if (!g) return DualPoint::zeros(0);
  return DualPoint(gradient(*g, averages));
}

inline void require_differentiable(const ModelSpec& model) {
  if ((model.g_plus && !model.g_plus->differentiable()) || (model.g_minus && !model.g_minus->differentiable()))
    throw ModelError("order parameters require differentiable g");
}

}  // namespace detail

/// Pushforward of mixture weights over equilibria through mu -> grad g(tau(mu)).
inline OrderParameterDistribution order_parameter_distribution(const ModelSpec& model,
                                                               const std::vector<MarkovMeasure>& equilibria,
                                                               const Vector& weights, double radius = 1e-8) {
  detail::require_differentiable(model);
  if (equilibria.empty() || equilibria.size() != weights.size())
    throw ModelError("order_parameter_distribution: one weight per equilibrium required");
  std::vector<DualPoint> pp, pm;
  for (const auto& mu : equilibria) {
    pp.push_back(detail::order_point(model.g_plus, model.g_plus ? expectations(mu, model.plus) : Vector{}));
    pm.push_back(detail::order_point(model.g_minus, model.g_minus ? expectations(mu, model.minus) : Vector{}));
  }
  return {DiscreteDualMeasure::clustered(pp, weights, radius), DiscreteDualMeasure::clustered(pm, weights, radius)};
}

// ---------------------------------------------------------------------------
// Finite transportation problem

struct TransportResult {
  double value = 0.0;
  Coupling coupling;
  std::vector<Vector> cost;
};

namespace detail {

struct Cell {
  std::size_t i, j;
};

/// Flows on a spanning tree of the bipartite row/column graph, by leaf
/// peeling. Returns nullopt when the cells do not form a spanning tree.
inline std::optional<Vector> tree_flows(const std::vector<Cell>& cells, const Vector& a, const Vector& b) {
  const std::size_t m = a.size(), n = b.size();
  Vector supply(a), demand(b);
  std::vector<char> used(cells.size(), 0);
  std::vector<std::size_t> deg(m + n, 0);
  for (const auto& c : cells) {
    ++deg[c.i];
    ++deg[m + c.j];
  }
  Vector flow(cells.size(), 0.0);
  for (std::size_t round = 0; round < cells.size(); ++round) {
    // lowest-index unused cell incident to a leaf node
    std::size_t pick = cells.size();
    bool row_leaf = false;
    for (std::size_t e = 0; e < cells.size() && pick == cells.size(); ++e) {
      if (used[e]) continue;
      if (deg[cells[e].i] == 1) {
        pick = e;
        row_leaf = true;
      } else if (deg[m + cells[e].j] == 1) {
        pick = e;
        row_leaf = false;
      }
    }
    if (pick == cells.size()) return std::nullopt;  // cycle
    const Cell c = cells[pick];
    const double f = row_leaf ? supply[c.i] : demand[c.j];
    flow[pick] = f;
    supply[c.i] -= f;
    demand[c.j] -= f;
    used[pick] = 1;
    --deg[c.i];
    --deg[m + c.j];
  }
  for (double s : supply)
    if (std::abs(s) > 1e-12) return std::nullopt;
  for (double d : demand)
    if (std::abs(d) > 1e-12) return std::nullopt;
  return flow;
}

inline double plan_cost(const std::vector<Vector>& cost, const Coupling& c) {
  double s = 0.0;
  for (std::size_t i = 0; i < c.rows; ++i)
    for (std::size_t j = 0; j < c.cols; ++j)
      if (c(i, j) != 0.0) s += c(i, j) * cost[i][j];
  return s;
}

/// Exhaustive enumeration of basic feasible solutions (vertices).
inline TransportResult transport_vertices(const Vector& a, const Vector& b, const std::vector<Vector>& cost) {
  const std::size_t m = a.size(), n = b.size(), cells = m * n, basis = m + n - 1;
  TransportResult best;
  best.value = std::numeric_limits<double>::infinity();
  best.cost = cost;
  std::vector<char> mask(cells, 0);
  std::fill(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(basis), 1);
  do {
    std::vector<Cell> sel;
    for (std::size_t c = 0; c < cells; ++c)
      if (mask[c]) sel.push_back({c / n, c % n});
    const auto flow = tree_flows(sel, a, b);
    if (!flow) continue;
    if (std::any_of(flow->begin(), flow->end(), [](double f) { return f < -1e-14; })) continue;
    Coupling plan{m, n, Vector(cells, 0.0)};
    for (std::size_t e = 0; e < sel.size(); ++e) plan(sel[e].i, sel[e].j) = std::max(0.0, (*flow)[e]);
    const double v = plan_cost(cost, plan);
    if (v < best.value - 1e-15) {
      best.value = v;
      best.coupling = std::move(plan);
    }
  } while (std::prev_permutation(mask.begin(), mask.end()));
  if (!std::isfinite(best.value)) throw SolverError("transport: no feasible vertex");
  return best;
}

/// Northwest-corner start and the modified-distribution (u, v potentials)
/// improvement loop. Entering cell: first with negative reduced cost in
/// row-major order; leaving cell: first minimal flow on the cycle.
inline TransportResult transport_modi(const Vector& a, const Vector& b, const std::vector<Vector>& cost) {
  const std::size_t m = a.size(), n = b.size();
  std::vector<Cell> basis;
  Vector flow;
  {
    Vector sa(a), sb(b);
    std::size_t i = 0, j = 0;
    while (true) {
      const double f = std::min(sa[i], sb[j]);
      basis.push_back({i, j});
      flow.push_back(f);
      sa[i] -= f;
      sb[j] -= f;
      if (i == m - 1 && j == n - 1) break;
      if (i == m - 1) ++j;
      else if (j == n - 1) ++i;
      else if (sa[i] <= sb[j]) ++i;
      else ++j;
    }
  }
  double scale = 1.0;
  for (const auto& row : cost)
    for (double c : row) scale = std::max(scale, std::abs(c));
  const double eps = 1e-13 * scale;
  for (int iter = 0; iter < 100000; ++iter) {
    // potentials u_i + v_j = c_ij on basic cells
    Vector u(m, std::numeric_limits<double>::quiet_NaN()), v(n, std::numeric_limits<double>::quiet_NaN());
    u[0] = 0.0;
    for (bool changed = true; changed;) {
      changed = false;
      for (const auto& c : basis) {
        if (!std::isnan(u[c.i]) && std::isnan(v[c.j])) {
          v[c.j] = cost[c.i][c.j] - u[c.i];
          changed = true;
        } else if (std::isnan(u[c.i]) && !std::isnan(v[c.j])) {
          u[c.i] = cost[c.i][c.j] - v[c.j];
          changed = true;
        }
      }
    }
    std::optional<Cell> enter;
    for (std::size_t i = 0; i < m && !enter; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (cost[i][j] - u[i] - v[j] < -eps) {
          enter = Cell{i, j};
          break;
        }
    if (!enter) {
      TransportResult r;
      r.coupling = Coupling{m, n, Vector(m * n, 0.0)};
      for (std::size_t e = 0; e < basis.size(); ++e) r.coupling(basis[e].i, basis[e].j) = std::max(0.0, flow[e]);
      r.value = plan_cost(cost, r.coupling);
      r.cost = cost;
      return r;
    }
    // path in the basis tree from column enter.j to row enter.i (nodes: rows 0..m-1, cols m..)
    const std::size_t nodes = m + n, src = m + enter->j, dst = enter->i;
    std::vector<std::size_t> parent_edge(nodes, basis.size()), parent(nodes, nodes);
    std::vector<std::size_t> queue{src};
    std::vector<char> seen(nodes, 0);
    seen[src] = 1;
    for (std::size_t q = 0; q < queue.size(); ++q) {
      const std::size_t x = queue[q];
      for (std::size_t e = 0; e < basis.size(); ++e) {
        const std::size_t r = basis[e].i, c = m + basis[e].j;
        std::size_t y = nodes;
        if (x == r) y = c;
        else if (x == c) y = r;
        if (y == nodes || seen[y]) continue;
        seen[y] = 1;
        parent[y] = x;
        parent_edge[y] = e;
        queue.push_back(y);
      }
    }
    if (!seen[dst]) throw SolverError("transport: basis is not a spanning tree");
    std::vector<std::size_t> path;  // edges from src to dst
    for (std::size_t y = dst; y != src; y = parent[y]) path.push_back(parent_edge[y]);
    std::reverse(path.begin(), path.end());
    // signs along the cycle: entering +, path edges alternate starting with -
    double theta = std::numeric_limits<double>::infinity();
    std::size_t leave = basis.size();
    for (std::size_t k = 0; k < path.size(); k += 2)
      if (flow[path[k]] < theta) {
        theta = flow[path[k]];
        leave = path[k];
      }
    for (std::size_t k = 0; k < path.size(); ++k) flow[path[k]] += (k % 2 == 0 ? -theta : theta);
    basis[leave] = *enter;
    flow[leave] = theta;
  }
  throw SolverError("transport: improvement loop did not terminate");
}

}  // namespace detail

/// min over couplings of sum n_ij cost_ij with marginals a (rows) and b (columns).
inline TransportResult transport_solve(const Vector& a, const Vector& b, const std::vector<Vector>& cost) {
  if (a.empty() || b.empty() || cost.size() != a.size()) throw ModelError("transport: shape mismatch");
  for (const auto& row : cost) {
    if (row.size() != b.size()) throw ModelError("transport: shape mismatch");
    for (double c : row)
      if (!std::isfinite(c)) throw SolverError("transport: non-finite cost");
  }
  if (a.size() > 16 || b.size() > 16) throw ModelError("transport: supports above 16 x 16");
  if (a.size() <= 3 && b.size() <= 3) return detail::transport_vertices(a, b, cost);
  return detail::transport_modi(a, b, cost);
}

inline std::vector<Vector> transport_costs(const ModelSpec& model, const DiscreteDualMeasure& yp,
                                           const DiscreteDualMeasure& ym) {
  const Linearization lin(model);
  std::vector<Vector> cost(yp.size(), Vector(ym.size()));
  for (std::size_t i = 0; i < yp.size(); ++i)
    for (std::size_t j = 0; j < ym.size(); ++j) cost[i][j] = lin.p_nl(yp.support()[i], ym.support()[j]).to_double();
  return cost;
}

inline TransportResult kantorovich_primal(const ModelSpec& model, const DiscreteDualMeasure& yp,
                                          const DiscreteDualMeasure& ym) {
  return transport_solve(yp.weights(), ym.weights(), transport_costs(model, yp, ym));
}

struct DualViolation {
  std::size_t i, j;
  double amount;
};

struct DualReport {
  double dual_value = 0.0;
  double primal_value = 0.0;
  bool feasible = true;
  bool bounded = true;   ///< dual <= primal + 1e-8
  bool attains = false;  ///< |dual - primal| <= 1e-8
  std::vector<DualViolation> violations;
};

/// Checks P+(y+_i) - P-(y-_j) <= P_NL(y+_i, y-_j) and compares values.
inline DualReport kantorovich_dual_check(const ModelSpec& model, const DiscreteDualMeasure& yp,
                                         const DiscreteDualMeasure& ym, const Vector& p_plus, const Vector& p_minus) {
  if (p_plus.size() != yp.size() || p_minus.size() != ym.size())
    throw ModelError("dual check: one candidate value per support point required");
  const TransportResult primal = kantorovich_primal(model, yp, ym);
  DualReport r;
  r.primal_value = primal.value;
  for (std::size_t i = 0; i < yp.size(); ++i)
    for (std::size_t j = 0; j < ym.size(); ++j) {
      const double excess = p_plus[i] - p_minus[j] - primal.cost[i][j];
      if (excess > 1e-10) r.violations.push_back({i, j, excess});
    }
  r.feasible = r.violations.empty();
  for (std::size_t i = 0; i < yp.size(); ++i) r.dual_value += yp.weights()[i] * p_plus[i];
  for (std::size_t j = 0; j < ym.size(); ++j) r.dual_value -= ym.weights()[j] * p_minus[j];
  r.bounded = r.dual_value <= r.primal_value + 1e-8;
  r.attains = std::abs(r.dual_value - r.primal_value) <= 1e-8;
  return r;
}

/// (P+ = P_flat(y+), P- = 0) sampled on the supports.
inline std::pair<Vector, Vector> canonical_dual_pair(const ModelSpec& model, const DiscreteDualMeasure& yp,
                                                     const DiscreteDualMeasure& ym, const SolverConfig& config = {}) {
  const Linearization lin(model);
  const double rm = growth_radii(model, config).minus;
  Vector pp(yp.size());
  for (std::size_t i = 0; i < yp.size(); ++i) pp[i] = p_flat_of(lin, yp.support()[i], rm, config).value.to_double();
  return {pp, Vector(ym.size(), 0.0)};
}

// ---------------------------------------------------------------------------
// Birkhoff sampling

struct BirkhoffSamples {
  std::vector<DualPoint> plus;   ///< grad g+(E_n theta+) per path
  std::vector<DualPoint> minus;
  DiscreteDualMeasure y_plus;    ///< empirical law (exact duplicates merged)
  DiscreteDualMeasure y_minus;
};

struct SampleStats {
  double mean = 0.0;
  double variance = 0.0;  ///< unbiased
  double std_error = 0.0;
};

inline SampleStats sample_stats(const std::vector<DualPoint>& xs, std::size_t coord = 0) {
  SampleStats s;
  const double n = static_cast<double>(xs.size());
  if (xs.empty()) return s;
  for (const auto& x : xs) s.mean += x[coord];
  s.mean /= n;
  for (const auto& x : xs) s.variance += (x[coord] - s.mean) * (x[coord] - s.mean);
  s.variance = xs.size() > 1 ? s.variance / (n - 1) : 0.0;
  s.std_error = std::sqrt(s.variance / n);
  return s;
}

/// Samples paths of the chain; samples are drawn in fixed chunks whose
/// mt19937_64 streams are seeded by splitmix64(seed, chunk), so the result
/// does not depend on the worker count.
inline BirkhoffSamples birkhoff_sampling(const ModelSpec& model, const MarkovMeasure& mu, std::size_t n,
                                         std::size_t num_samples, std::uint64_t seed) {
  detail::require_differentiable(model);
  if (!mu.is_ergodic()) throw ModelError("birkhoff_sampling: measure must be ergodic");
  if (n == 0 || num_samples == 0) throw ModelError("birkhoff_sampling: n and num_samples must be positive");
  const int mem = std::max(model.g_plus ? detail::max_potential_memory(model.plus) : 1,
                           model.g_minus ? detail::max_potential_memory(model.minus) : 1);
  const std::size_t len = n + static_cast<std::size_t>(mem) - 1;
  constexpr std::size_t kChunk = 256;
  const std::size_t chunks = (num_samples + kChunk - 1) / kChunk;
  BirkhoffSamples out;
  out.plus.resize(num_samples);
  out.minus.resize(num_samples);
  auto averages = [&](const std::vector<CylinderPotential>& phis, const std::vector<int>& path) {
    Vector v(phis.size());
    for (std::size_t i = 0; i < phis.size(); ++i) v[i] = birkhoff_average_open(phis[i], path, n);
    return v;
  };
  parallel_for(chunks, [&](std::size_t c) {
    std::mt19937_64 rng(splitmix64(seed ^ splitmix64(c + 1)));
    for (std::size_t s = c * kChunk; s < std::min(num_samples, (c + 1) * kChunk); ++s) {
      const auto path = mu.sample_path(len, rng);
      out.plus[s] = model.g_plus ? DualPoint(gradient(*model.g_plus, averages(model.plus, path))) : DualPoint::zeros(0);
      out.minus[s] =
          model.g_minus ? DualPoint(gradient(*model.g_minus, averages(model.minus, path))) : DualPoint::zeros(0);
    }
  });
  const Vector w(num_samples, 1.0 / static_cast<double>(num_samples));
  out.y_plus = DiscreteDualMeasure::clustered(out.plus, w, 0.0);
  out.y_minus = DiscreteDualMeasure::clustered(out.minus, w, 0.0);
  return out;
}

struct HistogramBin {
  double center;
  std::size_t count;
};

/// Equal-width bins over [min, max] of one coordinate.
inline std::vector<HistogramBin> histogram(const std::vector<DualPoint>& xs, std::size_t bins,
                                           std::size_t coord = 0) {
  if (xs.empty() || bins == 0) return {};
  double lo = xs.front()[coord], hi = lo;
  for (const auto& x : xs) {
    lo = std::min(lo, x[coord]);
    hi = std::max(hi, x[coord]);
  }
  if (hi == lo) return {{lo, xs.size()}};
  const double w = (hi - lo) / static_cast<double>(bins);
  std::vector<HistogramBin> out(bins);
  for (std::size_t b = 0; b < bins; ++b) out[b] = {lo + (static_cast<double>(b) + 0.5) * w, 0};
  for (const auto& x : xs) {
    auto b = static_cast<std::size_t>((x[coord] - lo) / w);
    ++out[std::min(b, bins - 1)].count;
  }
  return out;
}

}  // namespace thermoflat
