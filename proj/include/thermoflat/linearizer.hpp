#pragma once

// Linearization of the nonlinear pressure and the thermodynamic game
//   P_NL(y+, y-) = P_L(base + y+.phi+ - y-.phi-) + g-*(y-) - g+*(y+),
//   Pb = sup_{y+} inf_{y-} P_NL,   P# = inf_{y-} sup_{y+} P_NL.
// Optimizers are searched in boxes certified by growth_radius.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "thermoflat/convex.hpp"
#include "thermoflat/measures.hpp"
#include "thermoflat/model.hpp"
#include "thermoflat/optim.hpp"
#include "thermoflat/parallel.hpp"
#include "thermoflat/ruelle.hpp"

namespace thermoflat {

struct SolverConfig {
  double tol = 1e-8;
  double sc_tol = 1e-6;
  double cluster_radius = 1e-4;
  double value_window = 1e-8;
  int grid = 17;
  int multistart_cap = 289;
  std::optional<double> radius_plus;
  std::optional<double> radius_minus;
  std::uint64_t seed = 0;
  /// extra starting points for the outer search (e.g. mean-field fixed points)
  std::vector<DualPoint> warm_starts;

  void validate() const {
    if (!(tol > 0) || !(sc_tol > 0) || !(cluster_radius > 0) || !(value_window > 0))
      throw ModelError("config: tolerances must be positive");
    if (grid < 5) throw ModelError("config: grid must be at least 5");
    if (multistart_cap < 1) throw ModelError("config: multistart cap must be positive");
    for (const auto& r : {radius_plus, radius_minus})
      if (r && !(*r > 0)) throw ModelError("config: radius overrides must be positive");
  }
};

struct ApproxPressureEval {
  DualPoint y_plus;
  DualPoint y_minus;
  CylinderPotential theta;
  double p_l = 0.0;
  ExtReal p_nl;
};

/// Cached dense form of the model used by every pressure evaluation.
class Linearization {
 public:
  explicit Linearization(const ModelSpec& model) : model_(&model) {
    model.validate();
    memory_ = model.base ? model.base->memory() : 1;
    for (const auto& p : model.plus) memory_ = std::max(memory_, p.memory());
    for (const auto& p : model.minus) memory_ = std::max(memory_, p.memory());
    base_ = model.base ? model.base->padded(memory_).table() : Vector(ipow(model.alphabet.size(), memory_), 0.0);
    for (std::size_t i = 0; i < model.n_plus(); ++i) plus_.push_back(model.plus[i].padded(memory_).table());
    for (std::size_t i = 0; i < model.n_minus(); ++i) minus_.push_back(model.minus[i].padded(memory_).table());
    for (double m : model.alphabet.weights()) log_m_.push_back(std::log(m));
  }
  /// The model is referenced, not copied.
  explicit Linearization(ModelSpec&&) = delete;

  const ModelSpec& model() const { return *model_; }
  std::size_t n_plus() const { return plus_.size(); }
  std::size_t n_minus() const { return minus_.size(); }

  Vector theta_table(std::span<const double> yp, std::span<const double> ym) const {
    if (yp.size() != plus_.size() || ym.size() != minus_.size())
      throw ModelError("approximating potential: dual dimension mismatch");
    Vector t = base_;
    for (std::size_t i = 0; i < plus_.size(); ++i)
      if (yp[i] != 0.0)
        for (std::size_t w = 0; w < t.size(); ++w) t[w] += yp[i] * plus_[i][w];
    for (std::size_t j = 0; j < minus_.size(); ++j)
      if (ym[j] != 0.0)
        for (std::size_t w = 0; w < t.size(); ++w) t[w] -= ym[j] * minus_[j][w];
    return t;
  }

  CylinderPotential theta(std::span<const double> yp, std::span<const double> ym) const {
    return {model_->alphabet, memory_, theta_table(yp, ym), "theta"};
  }

  double linear(std::span<const double> yp, std::span<const double> ym) const {
    Vector t = theta_table(yp, ym);
    if (memory_ == 1) {
      for (std::size_t a = 0; a < t.size(); ++a) t[a] += log_m_[a];
      return log_sum_exp(t);
    }
    return linear_pressure(CylinderPotential(model_->alphabet, memory_, std::move(t)));
  }

  ExtReal gstar_plus(std::span<const double> yp) const {
    return model_->g_plus ? conjugate(*model_->g_plus, yp) : ExtReal(0.0);
  }
  ExtReal gstar_minus(std::span<const double> ym) const {
    return model_->g_minus ? conjugate(*model_->g_minus, ym) : ExtReal(0.0);
  }

  /// -inf when y+ leaves dom g+*, otherwise +inf when y- leaves dom g-*.
  ExtReal p_nl(std::span<const double> yp, std::span<const double> ym) const {
    const ExtReal gp = gstar_plus(yp);
    if (gp.is_pos_inf()) return ExtReal::neg_inf();
    const ExtReal gm = gstar_minus(ym);
    if (gm.is_pos_inf()) return ExtReal::pos_inf();
    return ExtReal(linear(yp, ym)) + gm - gp;
  }

 private:
  const ModelSpec* model_;
  int memory_ = 1;
  Vector base_;
  std::vector<Vector> plus_, minus_;
  Vector log_m_;
};

inline CylinderPotential approximating_potential(const ModelSpec& model, const DualPoint& yp, const DualPoint& ym) {
  return Linearization(model).theta(yp, ym);
}

inline ExtReal p_nl(const ModelSpec& model, const DualPoint& yp, const DualPoint& ym) {
  return Linearization(model).p_nl(yp, ym);
}

inline ApproxPressureEval evaluate_approximation(const ModelSpec& model, const DualPoint& yp, const DualPoint& ym) {
  const Linearization lin(model);
  ApproxPressureEval e{yp, ym, lin.theta(yp, ym), lin.linear(yp, ym), lin.p_nl(yp, ym)};
  return e;
}

// ---------------------------------------------------------------- radii

struct GrowthRadii {
  double plus = 1.0;
  double minus = 1.0;
  std::optional<GrowthCertificate> cert_plus;
  std::optional<GrowthCertificate> cert_minus;
};

inline GrowthRadii growth_radii(const ModelSpec& model, const SolverConfig& config) {
  GrowthRadii r;
  if (model.g_minus) {
    if (config.radius_minus) {
      r.minus = *config.radius_minus;
    } else {
      r.cert_minus = growth_radius(*model.g_minus, ModelSpec::lipschitz(model.minus));
      r.minus = r.cert_minus->safe_radius;
    }
  }
  if (model.g_plus) {
    if (config.radius_plus) {
      r.plus = *config.radius_plus;
    } else {
      r.cert_plus = growth_radius(*model.g_plus, ModelSpec::lipschitz(model.plus));
      r.plus = r.cert_plus->safe_radius;
    }
  }
  return r;
}

// ---------------------------------------------------------------- inner layer

struct InnerResult {
  ExtReal value;
  /// clustered minimizers; a single empty point when g- is absent
  std::vector<DualPoint> minimizers;
};

namespace detail {

inline std::vector<DualPoint> to_duals(const std::vector<optim::Point>& pts) {
  std::vector<DualPoint> out;
  for (const auto& p : pts) out.emplace_back(p.x);
  return out;
}

/// Minimizers of a convex function on [-R, R]^n: scan, refine, then keep
/// the refined point together with scan points inside the value window.
inline std::vector<optim::Point> convex_minimizers(const optim::Objective& f, std::size_t n, double radius,
                                                   const SolverConfig& config) {
  if (n == 0) return {{{}, f(Vector{})}};
  const int scan = n == 1 ? 41 : 21;
  std::vector<optim::Point> pts;
  if (n <= 2) {
    const Vector ax = linspace(-radius, radius, scan);
    Vector x(n);
    const std::size_t total = n == 1 ? ax.size() : ax.size() * ax.size();
    for (std::size_t t = 0; t < total; ++t) {
      x[0] = ax[n == 1 ? t : t / ax.size()];
      if (n == 2) x[1] = ax[t % ax.size()];
      pts.push_back({x, f(x)});
    }
  }
  pts.push_back(optim::convex_min(f, n, radius, scan));
  return optim::cluster(std::move(pts), config.cluster_radius, config.value_window, false);
}

/// Maximizers of f on [-R, R]^n by a multistart grid plus local refinement.
/// Optionally records the grid scan.
inline std::vector<optim::Point> multistart_maximizers(const optim::Objective& f, std::size_t n, double radius,
                                                       const SolverConfig& config,
                                                       std::vector<std::pair<Vector, double>>* scan = nullptr) {
  if (n == 0) return {{{}, f(Vector{})}};
  int m = config.grid;
  while (m > 2 && std::pow(static_cast<double>(m), static_cast<double>(n)) > config.multistart_cap) --m;
  const Vector ax = linspace(-radius, radius, static_cast<std::size_t>(m));
  const double h = ax.size() > 1 ? ax[1] - ax[0] : radius;
  const std::size_t total = ipow(static_cast<std::size_t>(m), static_cast<int>(n));
  auto node = [&](std::size_t flat) {
    Vector x(n);
    for (std::size_t i = n; i-- > 0;) {
      x[i] = ax[flat % m];
      flat /= m;
    }
    return x;
  };
  std::vector<ExtReal> vals(total);
  parallel_for(total, [&](std::size_t t) { vals[t] = f(node(t)); });
  if (scan) {
    scan->clear();
    for (std::size_t t = 0; t < total; ++t) scan->emplace_back(node(t), vals[t].to_double());
  }

  // grid local maxima among finite values
  std::vector<Vector> starts;
  for (std::size_t t = 0; t < total; ++t) {
    if (!vals[t].is_finite()) continue;
    std::vector<std::size_t> idx(n);
    std::size_t rest = t;
    for (std::size_t i = n; i-- > 0;) {
      idx[i] = rest % m;
      rest /= m;
    }
    bool is_max = true;
    const std::size_t neighbours = ipow(3, static_cast<int>(n));
    for (std::size_t d = 0; d < neighbours && is_max; ++d) {
      std::size_t flat = 0, code = d;
      bool inside = true, self = true;
      for (std::size_t i = 0; i < n; ++i) {
        const long off = static_cast<long>(code % 3) - 1;
        code /= 3;
        if (off != 0) self = false;
        const long j = static_cast<long>(idx[i]) + off;
        if (j < 0 || j >= m) inside = false;
        flat = flat * m + static_cast<std::size_t>(std::clamp(j, 0L, static_cast<long>(m - 1)));
      }
      if (!inside || self) continue;
      if (vals[flat] > vals[t]) is_max = false;
    }
    if (is_max) starts.push_back(node(t));
  }
  for (const auto& w : config.warm_starts)
    if (w.size() == n) {
      Vector x = w.coords();
      for (double& c : x) c = std::clamp(c, -radius, radius);
      starts.push_back(x);
    }
  if (starts.empty()) {
    // nothing finite on the grid: fall back to the best node
    std::size_t best = 0;
    for (std::size_t t = 1; t < total; ++t)
      if (vals[t] > vals[best]) best = t;
    starts.push_back(node(best));
  }

  std::vector<optim::Point> refined(starts.size());
  parallel_for(starts.size(), [&](std::size_t s) {
    const Vector& x0 = starts[s];
    if (n == 1) {
      const auto p = optim::golden_max([&](double y) { return f(Vector{y}); }, std::max(-radius, x0[0] - h),
                                       std::min(radius, x0[0] + h));
      const ExtReal v0 = f(x0);
      refined[s] = p.value >= v0 ? optim::Point{{p.x}, p.value} : optim::Point{x0, v0};
    } else {
      optim::Point p = optim::nelder_mead_max(f, x0, 0.5 * h, -radius, radius);
      refined[s] = optim::coordinate_polish_max(f, p, 0.25 * h, -radius, radius);
    }
  });
  return optim::cluster(std::move(refined), config.cluster_radius, config.value_window, true);
}

inline ExtReal best_value(const std::vector<optim::Point>& pts, bool maximize) {
  ExtReal v = pts.front().value;
  for (const auto& p : pts) v = maximize ? max(v, p.value) : min(v, p.value);
  return v;
}

}  // namespace detail

/// Pb(y+) = inf_{y-} P_NL(y+, y-) over B(0, R-), with its minimizer set.
inline InnerResult p_flat_of(const Linearization& lin, const DualPoint& yp, double radius_minus,
                             const SolverConfig& config) {
  const ExtReal gp = lin.gstar_plus(yp);
  if (gp.is_pos_inf()) return {ExtReal::neg_inf(), {DualPoint::zeros(lin.n_minus())}};
  const optim::Objective f = [&](std::span<const double> ym) {
    const ExtReal gm = lin.gstar_minus(ym);
    if (gm.is_pos_inf()) return gm;
    return ExtReal(lin.linear(yp, ym)) + gm - gp;
  };
  const auto pts = detail::convex_minimizers(f, lin.n_minus(), radius_minus, config);
  return {detail::best_value(pts, false), detail::to_duals(pts)};
}

inline InnerResult p_flat_of(const ModelSpec& model, const DualPoint& yp, const SolverConfig& config = {}) {
  const Linearization lin(model);
  return p_flat_of(lin, yp, growth_radii(model, config).minus, config);
}

// ---------------------------------------------------------------- game

struct Equilibrium {
  DualPoint x_plus;
  DualPoint x_minus;
  MarkovMeasure measure;
  Vector tau_plus;
  Vector tau_minus;
  double residual_plus = 0.0;
  double residual_minus = 0.0;
  double p_value = 0.0;
};

struct GameSolution {
  double p_flat = 0.0;
  std::optional<double> p_sharp;
  std::optional<double> gap;
  std::vector<DualPoint> m_flat;
  std::vector<std::pair<DualPoint, std::vector<DualPoint>>> m_flat_of;
  std::vector<DualPoint> m_sharp;
  std::vector<std::pair<DualPoint, std::vector<DualPoint>>> m_sharp_of;
  std::vector<Equilibrium> equilibria;
  GrowthRadii radii;
  /// outer grid scan of (y+, Pb(y+))
  std::vector<std::pair<Vector, double>> scan;
  std::vector<std::string> diagnostics;
};

namespace detail {

inline double residual(const std::optional<ConvexSpec>& g, const Vector& tau, const DualPoint& x) {
  if (!g) return 0.0;
  try {
    return subdiff(*g, tau).distance(x);
  } catch (const ModelError&) {
    return std::numeric_limits<double>::infinity();
  }
}

inline std::string fmt(const DualPoint& p) {
  std::ostringstream os;
  os.precision(10);
  os << '(';
  for (std::size_t i = 0; i < p.size(); ++i) os << (i ? ", " : "") << p[i];
  os << ')';
  return os.str();
}

}  // namespace detail

/// Gibbs measure of the approximating potential at (x+, x-) together with
/// its order parameters and self-consistency residuals.
inline Equilibrium linear_equilibrium(const Linearization& lin, const DualPoint& xp, const DualPoint& xm) {
  const ModelSpec& model = lin.model();
  Equilibrium e;
  e.x_plus = xp;
  e.x_minus = xm;
  e.measure = rpf_solve(lin.theta(xp, xm)).gibbs;
  if (model.g_plus) e.tau_plus = order_parameters(model.plus, e.measure);
  if (model.g_minus) e.tau_minus = order_parameters(model.minus, e.measure);
  e.residual_plus = detail::residual(model.g_plus, e.tau_plus, xp);
  e.residual_minus = detail::residual(model.g_minus, e.tau_minus, xm);
  e.p_value = direct_nonlinear_pressure(model, e.measure).to_double();
  return e;
}

/// Max-min side of the game: Pb, Mb, Mb(x+) and the self-consistent
/// equilibrium measures.
inline GameSolution solve_flat(const ModelSpec& model, const SolverConfig& config = {}) {
  config.validate();
  const Linearization lin(model);
  GameSolution sol;
  sol.radii = growth_radii(model, config);
  const double rm = sol.radii.minus;
  const optim::Objective outer = [&](std::span<const double> yp) {
    return p_flat_of(lin, DualPoint(Vector(yp.begin(), yp.end())), rm, config).value;
  };
  const auto maxima = detail::multistart_maximizers(outer, lin.n_plus(), sol.radii.plus, config, &sol.scan);
  const ExtReal best = detail::best_value(maxima, true);
  if (!best.is_finite()) throw SolverError("solve_flat: nonlinear pressure is not finite");
  sol.p_flat = best.value();
  for (const auto& p : maxima) sol.m_flat.emplace_back(p.x);

  for (const DualPoint& xp : sol.m_flat) {
    const InnerResult inner = p_flat_of(lin, xp, rm, config);
    sol.m_flat_of.emplace_back(xp, inner.minimizers);
    for (const DualPoint& xm : inner.minimizers) {
      Equilibrium e = linear_equilibrium(lin, xp, xm);
      const double dp = std::abs(e.p_value - sol.p_flat);
      const bool ok = e.residual_plus < config.sc_tol && e.residual_minus < config.sc_tol && dp < config.tol;
      std::ostringstream os;
      os.precision(6);
      os << "candidate x+=" << detail::fmt(xp) << " x-=" << detail::fmt(xm) << " r+=" << e.residual_plus
         << " r-=" << e.residual_minus << " |P(mu)-Pb|=" << dp << (ok ? " admitted" : " rejected");
      sol.diagnostics.push_back(os.str());
      if (ok) sol.equilibria.push_back(std::move(e));
    }
  }
  if (sol.equilibria.empty()) {
    std::string msg = "no self-consistent optimizer found";
    for (const auto& d : sol.diagnostics) msg += "; " + d;
    throw SolverError(msg);
  }
  return sol;
}

struct SharpResult {
  double p_sharp = 0.0;
  std::vector<DualPoint> m_sharp;
  std::vector<std::pair<DualPoint, std::vector<DualPoint>>> m_sharp_of;
  std::string note;
};

/// Min-max side: P# = inf_{y-} sup_{y+} P_NL. With a single layer P# = Pb.
inline SharpResult solve_sharp(const ModelSpec& model, const SolverConfig& config = {}) {
  config.validate();
  const Linearization lin(model);
  const GrowthRadii radii = growth_radii(model, config);
  SharpResult out;
  if (!model.g_plus || !model.g_minus) out.note = "single layer: P# equals Pb by convention";
  const optim::Objective sup_plus = [&](std::span<const double> ym) {
    const optim::Objective f = [&](std::span<const double> yp) { return lin.p_nl(yp, ym); };
    return detail::best_value(detail::multistart_maximizers(f, lin.n_plus(), radii.plus, config), true);
  };
  const auto minima = detail::convex_minimizers(sup_plus, lin.n_minus(), radii.minus, config);
  const ExtReal v = detail::best_value(minima, false);
  if (!v.is_finite()) throw SolverError("solve_sharp: min-max value is not finite");
  out.p_sharp = v.value();
  for (const auto& p : minima) {
    out.m_sharp.emplace_back(p.x);
    const optim::Objective f = [&](std::span<const double> yp) { return lin.p_nl(yp, p.x); };
    out.m_sharp_of.emplace_back(DualPoint(p.x),
                                detail::to_duals(detail::multistart_maximizers(f, lin.n_plus(), radii.plus, config)));
  }
  return out;
}

/// Both sides of the game and the duality gap P# - Pb.
inline GameSolution solve_game(const ModelSpec& model, const SolverConfig& config = {}) {
  GameSolution sol = solve_flat(model, config);
  const SharpResult s = solve_sharp(model, config);
  sol.p_sharp = s.p_sharp;
  sol.m_sharp = s.m_sharp;
  sol.m_sharp_of = s.m_sharp_of;
  sol.gap = s.p_sharp - sol.p_flat;
  if (!s.note.empty()) sol.diagnostics.push_back(s.note);
  return sol;
}

// ---------------------------------------------------------------- mean field

struct MeanFieldResult {
  std::vector<std::pair<DualPoint, DualPoint>> trace;
  bool converged = false;
  int cycle_period = 0;  ///< 2..8 when a cycle was detected
  DualPoint y_plus;
  DualPoint y_minus;
};

/// Damped iteration y <- (1 - a) y + a grad g(tau(mu_y)) on both sides.
inline MeanFieldResult mean_field_iterate(const ModelSpec& model, const DualPoint& y0_plus,
                                          const DualPoint& y0_minus, double damping, int max_iters) {
  if (!(damping > 0.0 && damping <= 1.0)) throw ModelError("mean field: damping must lie in (0, 1]");
  if ((model.g_plus && !model.g_plus->differentiable()) || (model.g_minus && !model.g_minus->differentiable()))
    throw ModelError("mean field: requires differentiable g");
  const Linearization lin(model);
  MeanFieldResult r;
  Vector yp = y0_plus.coords(), ym = y0_minus.coords();
  if (yp.size() != lin.n_plus() || ym.size() != lin.n_minus()) throw ModelError("mean field: dimension mismatch");
  r.trace.emplace_back(DualPoint(yp), DualPoint(ym));
  for (int it = 0; it < max_iters; ++it) {
    const MarkovMeasure mu = rpf_solve(lin.theta(yp, ym)).gibbs;
    Vector np = yp, nm = ym;
    if (model.g_plus) {
      const Vector g = gradient(*model.g_plus, order_parameters(model.plus, mu));
      for (std::size_t i = 0; i < np.size(); ++i) np[i] = (1 - damping) * yp[i] + damping * g[i];
    }
    if (model.g_minus) {
      const Vector g = gradient(*model.g_minus, order_parameters(model.minus, mu));
      for (std::size_t i = 0; i < nm.size(); ++i) nm[i] = (1 - damping) * ym[i] + damping * g[i];
    }
    const DualPoint dp(np), dm(nm);
    const double step = std::max(dp.max_abs_diff(DualPoint(yp)), dm.max_abs_diff(DualPoint(ym)));
    yp = np;
    ym = nm;
    r.trace.emplace_back(dp, dm);
    if (step < 1e-10) {
      r.converged = true;
      break;
    }
    const std::size_t last = r.trace.size() - 1;
    for (std::size_t p = 2; p <= 8 && p <= last; ++p) {
      const auto& old = r.trace[last - p];
      if (std::max(old.first.max_abs_diff(dp), old.second.max_abs_diff(dm)) < 1e-10) {
        r.cycle_period = static_cast<int>(p);
        break;
      }
    }
    if (r.cycle_period) break;
  }
  r.y_plus = DualPoint(yp);
  r.y_minus = DualPoint(ym);
  return r;
}

// ---------------------------------------------------------------- decision rules

struct DecisionRule {
  /// (x+, x-(x+)) over Mb and the neighbourhood samples
  std::vector<std::pair<DualPoint, DualPoint>> table;
  double jump_coarse = 0.0;  ///< max adjacent |x- difference| at spacing h
  double jump_fine = 0.0;    ///< same at spacing h/2
  bool continuous = true;
};

/// Tabulates the inner minimizer x-(x+) around every point of Mb along each
/// coordinate axis (`samples` points per line at spacing `spacing`, plus the
/// halved spacing for the continuity check).
inline DecisionRule decision_rule(const ModelSpec& model, const GameSolution& solution, const SolverConfig& config,
                                  int samples = 9, double spacing = 0.02) {
  if (!model.g_minus || !model.g_minus->strictly_convex_conjugate())
    throw ModelError("decision rule: requires g- with strictly convex conjugate");
  if (samples < 3) throw ModelError("decision rule: at least 3 samples required");
  const Linearization lin(model);
  const double rm = solution.radii.minus;
  auto rule = [&](const DualPoint& xp) {
    const InnerResult in = p_flat_of(lin, xp, rm, config);
    if (in.minimizers.size() != 1)
      throw SolverError("decision rule: multivalued Mb(x+) although g-* is strictly convex");
    return in.minimizers.front();
  };
  DecisionRule out;
  for (const DualPoint& x : solution.m_flat) {
    out.table.emplace_back(x, rule(x));
    for (std::size_t axis = 0; axis < x.size(); ++axis) {
      for (int level = 0; level < 2; ++level) {
        const double h = level == 0 ? spacing : spacing / 2;
        const int count = level == 0 ? samples : 2 * samples - 1;
        DualPoint prev;
        for (int s = 0; s < count; ++s) {
          Vector y = x.coords();
          y[axis] += h * (s - (count - 1) / 2);
          const DualPoint xm = rule(DualPoint(y));
          if (level == 0) out.table.emplace_back(DualPoint(y), xm);
          if (s > 0) {
            double& jump = level == 0 ? out.jump_coarse : out.jump_fine;
            jump = std::max(jump, xm.max_abs_diff(prev));
          }
          prev = xm;
        }
      }
    }
  }
  out.continuous = out.jump_fine <= 0.75 * out.jump_coarse + 1e-12;
  return out;
}

}  // namespace thermoflat
