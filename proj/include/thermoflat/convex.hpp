#pragma once

// Convex nonlinearities: values, Legendre-Fenchel conjugates, discrete
// conjugation on tensor grids, subdifferentials and growth certificates.

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "thermoflat/common.hpp"
#include "thermoflat/extended_real.hpp"

namespace thermoflat {

/// Samples of a real function on a tensor-product grid. Values are stored
/// row-major: the last axis varies fastest.
class GridFunction {
 public:
  GridFunction() = default;
  GridFunction(std::vector<Vector> axes, Vector values) : axes_(std::move(axes)), values_(std::move(values)) {
    if (axes_.empty()) throw ModelError("grid: at least one axis required");
    std::size_t n = 1;
    for (const auto& ax : axes_) {
      if (ax.empty()) throw ModelError("grid: empty axis");
      for (std::size_t i = 1; i < ax.size(); ++i)
        if (!(ax[i] > ax[i - 1])) throw ModelError("grid: axis must be strictly increasing");
      n *= ax.size();
    }
    if (values_.size() != n) throw ModelError("grid: value count does not match axes");
    for (double v : values_)
      if (!std::isfinite(v)) throw ModelError("grid: non-finite sample");
  }

  /// Samples f on the tensor grid spanned by `axes`.
  static GridFunction sample(std::vector<Vector> axes, const std::function<double(std::span<const double>)>& f) {
    GridFunction probe;
    probe.axes_ = axes;
    std::size_t n = 1;
    for (const auto& ax : axes) n *= ax.size();
    Vector values(n);
    Vector x(axes.size());
    for (std::size_t i = 0; i < n; ++i) {
      probe.node_into(i, x);
      values[i] = f(x);
    }
    return GridFunction(std::move(axes), std::move(values));
  }

  std::size_t dim() const { return axes_.size(); }
  std::size_t size() const { return values_.size(); }
  const std::vector<Vector>& axes() const { return axes_; }
  const Vector& values() const { return values_; }

  std::size_t stride(std::size_t axis) const {
    std::size_t s = 1;
    for (std::size_t a = axis + 1; a < axes_.size(); ++a) s *= axes_[a].size();
    return s;
  }

  void node_into(std::size_t flat, std::span<double> x) const {
    for (std::size_t a = axes_.size(); a-- > 0;) {
      const std::size_t n = axes_[a].size();
      x[a] = axes_[a][flat % n];
      flat /= n;
    }
  }
  Vector node(std::size_t flat) const {
    Vector x(dim());
    node_into(flat, x);
    return x;
  }

  /// Multilinear interpolant; +inf outside the grid box.
  ExtReal interpolate(std::span<const double> x) const {
    if (x.size() != dim()) throw ModelError("grid: dimension mismatch");
    std::vector<std::size_t> lo(dim());
    Vector t(dim());
    for (std::size_t a = 0; a < dim(); ++a) {
      const Vector& ax = axes_[a];
      if (x[a] < ax.front() || x[a] > ax.back()) return ExtReal::pos_inf();
      if (ax.size() == 1) {
        lo[a] = 0;
        t[a] = 0.0;
        continue;
      }
      std::size_t i = static_cast<std::size_t>(std::upper_bound(ax.begin(), ax.end(), x[a]) - ax.begin());
      i = std::clamp<std::size_t>(i, 1, ax.size() - 1) - 1;
      lo[a] = i;
      t[a] = (x[a] - ax[i]) / (ax[i + 1] - ax[i]);
    }
    double acc = 0.0;
    for (std::size_t corner = 0; corner < (std::size_t{1} << dim()); ++corner) {
      double w = 1.0;
      std::size_t flat = 0;
      for (std::size_t a = 0; a < dim(); ++a) {
        const bool up = (corner >> a) & 1U;
        if (up && t[a] == 0.0) {
          w = 0.0;
          break;
        }
        w *= up ? t[a] : 1.0 - t[a];
        flat += (lo[a] + (up ? 1 : 0)) * stride(a);
      }
      if (w != 0.0) acc += w * values_[flat];
    }
    return acc;
  }

  /// Convexity along every axis: consecutive secant slopes are non-decreasing.
  bool is_convex(double tol = Tolerances::convexity) const {
    for (std::size_t a = 0; a < dim(); ++a) {
      const Vector& ax = axes_[a];
      const std::size_t st = stride(a);
      for (std::size_t flat = 0; flat < size(); ++flat) {
        const std::size_t i = (flat / st) % ax.size();
        if (i == 0 || i + 1 >= ax.size()) continue;
        const double left = (values_[flat] - values_[flat - st]) / (ax[i] - ax[i - 1]);
        const double right = (values_[flat + st] - values_[flat]) / (ax[i + 1] - ax[i]);
        const double scale = std::max({1.0, std::abs(left), std::abs(right)});
        if (right - left < -tol * scale) return false;
      }
    }
    return true;
  }

 private:
  std::vector<Vector> axes_;
  Vector values_;
};

/// Uniform axis of n points on [lo, hi].
inline Vector linspace(double lo, double hi, std::size_t n) {
  Vector v(n);
  if (n == 1) {
    v[0] = lo;
    return v;
  }
  for (std::size_t i = 0; i < n; ++i) v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return v;
}

/// Componentwise interval hull of a subdifferential.
struct SubdiffSet {
  Vector lower;
  Vector upper;
  bool is_singleton = false;

  /// Euclidean distance from y to the box [lower, upper].
  double distance(std::span<const double> y) const {
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double d = y[i] < lower[i] ? lower[i] - y[i] : (y[i] > upper[i] ? y[i] - upper[i] : 0.0);
      s += d * d;
    }
    return std::sqrt(s);
  }
};

/// Convex function g on R^N in one of the supported closed forms.
class ConvexSpec {
 public:
  struct Quadratic {
    double beta;
    std::size_t dim;
  };
  struct AbsSum {
    std::size_t dim;
  };
  struct Grid {
    GridFunction samples;
  };
  struct LinearShift {
    Vector slope;
    std::shared_ptr<const ConvexSpec> base;
  };
  using Kind = std::variant<Quadratic, AbsSum, Grid, LinearShift>;

  /// g(x) = beta |x|^2 / 2.
  static ConvexSpec quadratic(double beta, std::size_t dim = 1, std::string label = "") {
    if (!(beta > 0.0) || !std::isfinite(beta)) throw ModelError("quadratic: beta must be positive");
    if (dim == 0) throw ModelError("quadratic: dimension must be positive");
    return ConvexSpec(Quadratic{beta, dim}, std::move(label));
  }
  /// g(x) = sum_i |x_i|.
  static ConvexSpec abs_sum(std::size_t dim = 1, std::string label = "") {
    if (dim == 0) throw ModelError("abs_sum: dimension must be positive");
    return ConvexSpec(AbsSum{dim}, std::move(label));
  }
  /// Piecewise multilinear interpolant of convex samples; +inf off the grid.
  static ConvexSpec grid(GridFunction samples, std::string label = "") {
    for (const auto& ax : samples.axes())
      if (ax.size() < 3) throw ModelError("grid: at least 3 points per axis required");
    if (!samples.is_convex()) throw ModelError("grid: samples are not convex");
    return ConvexSpec(Grid{std::move(samples)}, std::move(label));
  }
  /// g(x) = <a, x> + base(x).
  static ConvexSpec linear_shift(Vector slope, ConvexSpec base, std::string label = "") {
    if (slope.size() != base.dim()) throw ModelError("linear_shift: slope dimension mismatch");
    for (double s : slope)
      if (!std::isfinite(s)) throw ModelError("linear_shift: non-finite slope");
    return ConvexSpec(LinearShift{std::move(slope), std::make_shared<const ConvexSpec>(std::move(base))},
                      std::move(label));
  }

  const Kind& kind() const { return kind_; }
  const std::string& label() const { return label_; }

  std::size_t dim() const {
    return std::visit(
        [](const auto& k) -> std::size_t {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, Quadratic> || std::is_same_v<T, AbsSum>) return k.dim;
          else if constexpr (std::is_same_v<T, Grid>) return k.samples.dim();
          else return k.slope.size();
        },
        kind_);
  }

  ExtReal value(std::span<const double> x) const {
    check_dim(x.size());
    return std::visit(
        [&](const auto& k) -> ExtReal {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, Quadratic>) return 0.5 * k.beta * dot(x, x);
          else if constexpr (std::is_same_v<T, AbsSum>) {
            double s = 0.0;
            for (double v : x) s += std::abs(v);
            return s;
          } else if constexpr (std::is_same_v<T, Grid>) return k.samples.interpolate(x);
          else return dot(k.slope, x) + k.base->value(x);
        },
        kind_);
  }

  /// True when g is Gateaux differentiable everywhere.
  bool differentiable() const {
    if (std::holds_alternative<Quadratic>(kind_)) return true;
    if (const auto* s = std::get_if<LinearShift>(&kind_)) return s->base->differentiable();
    return false;
  }

  /// True when g* is strictly convex (g differentiable with invertible gradient).
  bool strictly_convex_conjugate() const { return differentiable(); }

  void check_dim(std::size_t n) const {
    if (n != dim()) throw ModelError("convex function: dimension mismatch");
  }

 private:
  ConvexSpec(Kind k, std::string label) : kind_(std::move(k)), label_(std::move(label)) {}

  Kind kind_;
  std::string label_;
};

/// g*(y) = sup_x { <y, x> - g(x) }.
inline ExtReal conjugate(const ConvexSpec& g, std::span<const double> y) {
  g.check_dim(y.size());
  return std::visit(
      [&](const auto& k) -> ExtReal {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, ConvexSpec::Quadratic>) {
          return dot(y, y) / (2.0 * k.beta);
        } else if constexpr (std::is_same_v<T, ConvexSpec::AbsSum>) {
          for (double v : y)
            if (std::abs(v) > 1.0) return ExtReal::pos_inf();
          return 0.0;
        } else if constexpr (std::is_same_v<T, ConvexSpec::Grid>) {
          const GridFunction& s = k.samples;
          Vector x(s.dim());
          double best = -std::numeric_limits<double>::infinity();
          for (std::size_t i = 0; i < s.size(); ++i) {
            s.node_into(i, x);
            best = std::max(best, dot(y, x) - s.values()[i]);
          }
          return best;
        } else {
          Vector shifted(y.begin(), y.end());
          for (std::size_t i = 0; i < shifted.size(); ++i) shifted[i] -= k.slope[i];
          return conjugate(*k.base, shifted);
        }
      },
      g.kind());
}

/// Discrete Legendre-Fenchel transform: out(y_j) = max_i (<y_j, x_i> - g(x_i)).
///
/// Exact conjugate of the multilinear interpolant restricted to the grid box
/// (the maximum of a multilinear function over a cell sits at a corner). A
/// linear g therefore has a finite conjugate here, truncated by the box.
inline GridFunction discrete_lft(const GridFunction& g, const std::vector<Vector>& dual_axes) {
  if (dual_axes.size() != g.dim()) throw ModelError("discrete_lft: dimension mismatch");
  for (const auto& ax : dual_axes)
    if (ax.empty()) throw ModelError("discrete_lft: empty dual grid");
  std::vector<Vector> primal(g.size(), Vector(g.dim()));
  for (std::size_t i = 0; i < g.size(); ++i) g.node_into(i, primal[i]);
  return GridFunction::sample(dual_axes, [&](std::span<const double> y) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < primal.size(); ++i) best = std::max(best, dot(y, primal[i]) - g.values()[i]);
    return best;
  });
}

/// g** sampled on primal_axes, computed through the dual grid. Accepts
/// non-convex samples; the result is their lower convex envelope as seen
/// through the dual grid.
inline GridFunction biconjugate(const GridFunction& g, const std::vector<Vector>& primal_axes,
                                const std::vector<Vector>& dual_axes) {
  return discrete_lft(discrete_lft(g, dual_axes), primal_axes);
}

namespace detail {

inline SubdiffSet grid_subdiff(const GridFunction& s, std::span<const double> x) {
  SubdiffSet out{Vector(x.size()), Vector(x.size()), true};
  for (std::size_t a = 0; a < s.dim(); ++a) {
    const Vector& ax = s.axes()[a];
    if (!(x[a] > ax.front() && x[a] < ax.back()))
      throw ModelError("boundary subdifferential unavailable");
  }
  const ExtReal here = s.interpolate(x);
  for (std::size_t a = 0; a < s.dim(); ++a) {
    const Vector& ax = s.axes()[a];
    // nearest nodes strictly below and above x[a]
    auto it = std::lower_bound(ax.begin(), ax.end(), x[a]);
    const double prev = *(it - 1);
    auto jt = std::upper_bound(ax.begin(), ax.end(), x[a]);
    const double next = *jt;
    Vector xl(x.begin(), x.end()), xr(x.begin(), x.end());
    xl[a] = prev;
    xr[a] = next;
    out.lower[a] = (here - s.interpolate(xl)).value() / (x[a] - prev);
    out.upper[a] = (s.interpolate(xr) - here).value() / (next - x[a]);
    if (out.upper[a] - out.lower[a] > Tolerances::singleton) out.is_singleton = false;
  }
  return out;
}

}  // namespace detail

/// Componentwise interval hull of the subdifferential of g at x. On grids
/// the intervals are the one-sided secant slopes of the interpolant.
inline SubdiffSet subdiff(const ConvexSpec& g, std::span<const double> x) {
  g.check_dim(x.size());
  return std::visit(
      [&](const auto& k) -> SubdiffSet {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, ConvexSpec::Quadratic>) {
          Vector v(x.begin(), x.end());
          for (double& c : v) c *= k.beta;
          return {v, v, true};
        } else if constexpr (std::is_same_v<T, ConvexSpec::AbsSum>) {
          SubdiffSet out{Vector(x.size()), Vector(x.size()), true};
          for (std::size_t i = 0; i < x.size(); ++i) {
            if (x[i] > 0) out.lower[i] = out.upper[i] = 1.0;
            else if (x[i] < 0) out.lower[i] = out.upper[i] = -1.0;
            else {
              out.lower[i] = -1.0;
              out.upper[i] = 1.0;
              out.is_singleton = false;
            }
          }
          return out;
        } else if constexpr (std::is_same_v<T, ConvexSpec::Grid>) {
          return detail::grid_subdiff(k.samples, x);
        } else {
          SubdiffSet out = subdiff(*k.base, x);
          for (std::size_t i = 0; i < x.size(); ++i) {
            out.lower[i] += k.slope[i];
            out.upper[i] += k.slope[i];
          }
          return out;
        }
      },
      g.kind());
}

/// Gradient of a differentiable g.
inline Vector gradient(const ConvexSpec& g, std::span<const double> x) {
  if (!g.differentiable()) throw ModelError("gradient requested for a non-differentiable convex function");
  return subdiff(g, x).lower;
}

/// Certificate that maximizers of P_L(y) - g*(y) lie in the ball B(0, R)
/// whenever |P_L(y) - P_L(0)| <= lambda |y|.
struct GrowthCertificate {
  double lambda = 0.0;
  double safe_radius = 1.0;
  double margin = 0.0;
  /// (inner shell radius, sup over the shell of lambda|y| - g*(y)); finite entries only
  std::vector<std::pair<double, double>> decay_samples;
};

namespace detail {

inline std::vector<Vector> shell_directions(std::size_t dim) {
  std::vector<Vector> dirs;
  if (dim == 1) return {{1.0}, {-1.0}};
  if (dim == 2) {
    constexpr int kAngles = 72;
    for (int i = 0; i < kAngles; ++i) {
      const double t = 2.0 * M_PI * i / kAngles;
      dirs.push_back({std::cos(t), std::sin(t)});
    }
    return dirs;
  }
  for (std::size_t i = 0; i < dim; ++i)
    for (double s : {1.0, -1.0}) {
      Vector d(dim, 0.0);
      d[i] = s;
      dirs.push_back(d);
      for (std::size_t j = i + 1; j < dim; ++j)
        for (double t : {1.0, -1.0}) {
          Vector e(dim, 0.0);
          e[i] = s / std::sqrt(2.0);
          e[j] = t / std::sqrt(2.0);
          dirs.push_back(e);
        }
    }
  return dirs;
}

inline ExtReal shell_sup(const std::function<ExtReal(std::span<const double>)>& gstar, std::size_t dim,
                         double lambda, double r) {
  constexpr int kRadii = 33;
  ExtReal best = ExtReal::neg_inf();
  Vector y(dim);
  for (const Vector& d : shell_directions(dim))
    for (int j = 0; j < kRadii; ++j) {
      const double rho = r * (1.0 + static_cast<double>(j) / (kRadii - 1));
      for (std::size_t i = 0; i < dim; ++i) y[i] = rho * d[i];
      best = max(best, ExtReal(lambda * rho) - gstar(y));
    }
  return best;
}

}  // namespace detail

/// Smallest R = 2^j (j = 0..40) such that
///   sup_{R <= |y| <= 2R} { lambda |y| - g*(y) } < -g*(0) - margin.
/// The margin is 1 when lambda > 0 and 0 otherwise, plus `extra_margin`.
inline GrowthCertificate growth_radius(const std::function<ExtReal(std::span<const double>)>& gstar,
                                       std::size_t dim, double lambda, double extra_margin = 0.0) {
  if (!(lambda >= 0.0)) throw ModelError("growth_radius: lambda must be nonnegative");
  if (dim == 0) return {lambda, 1.0, 0.0, {}};
  const ExtReal at_origin = gstar(Vector(dim, 0.0));
  if (!at_origin.is_finite()) throw SolverError("growth_radius: conjugate is infinite at the origin");
  GrowthCertificate cert;
  cert.lambda = lambda;
  cert.margin = (lambda > 0.0 ? Tolerances::growth_margin : 0.0) + extra_margin;
  const ExtReal threshold = -at_origin - ExtReal(cert.margin);
  double r = 1.0;
  for (int j = 0; j <= Tolerances::growth_doublings; ++j, r *= 2.0) {
    if (detail::shell_sup(gstar, dim, lambda, r) < threshold) {
      cert.safe_radius = r;
      double rr = r;
      for (int s = 0; s < 4; ++s, rr *= 2.0) {
        const ExtReal sup = detail::shell_sup(gstar, dim, lambda, rr);
        if (!sup.is_finite()) break;
        cert.decay_samples.emplace_back(rr, sup.value());
      }
      return cert;
    }
  }
  throw SolverError("conjugate lacks minimal linear growth at slope " + std::to_string(lambda));
}

inline GrowthCertificate growth_radius(const ConvexSpec& g, double lambda, double extra_margin = 0.0) {
  return growth_radius([&g](std::span<const double> y) { return conjugate(g, y); }, g.dim(), lambda,
                       extra_margin);
}

}  // namespace thermoflat
