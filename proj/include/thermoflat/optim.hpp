#pragma once

// Small derivative-free optimizers over boxes. Objective values are
// ExtReal so that points outside an effective domain compare as +inf.

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "thermoflat/common.hpp"
#include "thermoflat/extended_real.hpp"

namespace thermoflat::optim {

using Objective = std::function<ExtReal(std::span<const double>)>;
using Objective1D = std::function<ExtReal(double)>;

struct Point {
  Vector x;
  ExtReal value;
};

struct Point1D {
  double x;
  ExtReal value;
};

/// Golden-section minimization on [a, b]. Exact for unimodal functions;
/// endpoints are evaluated as well so boundary minima are found.
inline Point1D golden_min(const Objective1D& f, double a, double b, double xtol = 1e-11) {
  constexpr double kInvPhi = 0.6180339887498949;
  Point1D best{a, f(a)};
  if (b <= a) return best;
  if (const ExtReal fb = f(b); fb < best.value) best = {b, fb};
  double c = b - kInvPhi * (b - a), d = a + kInvPhi * (b - a);
  ExtReal fc = f(c), fd = f(d);
  for (int it = 0; it < 200 && b - a > xtol * std::max(1.0, std::abs(a) + std::abs(b)); ++it) {
    if (fc < fd || (fc == fd && fc.is_pos_inf() && std::abs(c) < std::abs(d))) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = f(d);
    }
  }
  if (fc < best.value) best = {c, fc};
  if (fd < best.value) best = {d, fd};
  return best;
}

inline Point1D golden_max(const Objective1D& f, double a, double b, double xtol = 1e-11) {
  Point1D p = golden_min([&](double x) { return -f(x); }, a, b, xtol);
  p.value = -p.value;
  return p;
}

/// Convex minimization over the box [-radius, radius]^n: coarse scan of
/// `scan` points per axis (n <= 2), then cyclic coordinate descent with
/// golden-section line searches.
inline Point convex_min(const Objective& f, std::size_t n, double radius, int scan = 41, double xtol = 1e-11) {
  if (n == 0) return {{}, f(Vector{})};
  Point best{Vector(n, 0.0), f(Vector(n, 0.0))};
  const double h = 2.0 * radius / (scan - 1);
  if (n <= 2) {
    std::vector<int> idx(n, 0);
    Vector x(n);
    const std::size_t total = n == 1 ? scan : static_cast<std::size_t>(scan) * scan;
    for (std::size_t t = 0; t < total; ++t) {
      x[0] = -radius + h * static_cast<double>(n == 1 ? t : t / scan);
      if (n == 2) x[1] = -radius + h * static_cast<double>(t % scan);
      const ExtReal v = f(x);
      if (v < best.value) best = {x, v};
    }
  }
  if (n == 1) {
    const double lo = std::max(-radius, best.x[0] - h), hi = std::min(radius, best.x[0] + h);
    Point1D p = golden_min([&](double t) { return f(Vector{t}); }, lo, hi, xtol);
    if (p.value <= best.value) best = {{p.x}, p.value};
    return best;
  }
  Vector x = best.x;
  for (int sweep = 0; sweep < 300; ++sweep) {
    double moved = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      auto line = [&](double t) {
        Vector y = x;
        y[i] = t;
        return f(y);
      };
      Point1D p = golden_min(line, -radius, radius, xtol);
      if (p.value <= best.value) {
        moved = std::max(moved, std::abs(p.x - x[i]));
        x[i] = p.x;
        best = {x, p.value};
      }
    }
    if (moved < 1e-10) break;
  }
  return best;
}

/// Nelder-Mead maximization inside the box [lo, hi]^n (points are clamped).
inline Point nelder_mead_max(const Objective& f, Vector x0, double step, double lo, double hi, int max_iter = 4000,
                             double ftol = 1e-15, double xtol = 1e-10) {
  const std::size_t n = x0.size();
  auto clamp = [&](Vector v) {
    for (double& c : v) c = std::clamp(c, lo, hi);
    return v;
  };
  auto g = [&](const Vector& v) { return -f(v); };
  std::vector<Point> s;
  s.push_back({clamp(x0), g(clamp(x0))});
  for (std::size_t i = 0; i < n; ++i) {
    Vector v = x0;
    v[i] += (v[i] + step > hi) ? -step : step;
    v = clamp(v);
    s.push_back({v, g(v)});
  }
  auto order = [&] { std::stable_sort(s.begin(), s.end(), [](const Point& a, const Point& b) { return a.value < b.value; }); };
  for (int it = 0; it < max_iter; ++it) {
    order();
    double size = 0.0;
    for (std::size_t i = 1; i <= n; ++i)
      for (std::size_t j = 0; j < n; ++j) size = std::max(size, std::abs(s[i].x[j] - s[0].x[j]));
    const bool flat = s[0].value.is_finite() && s[n].value.is_finite() &&
                      std::abs(s[n].value.value() - s[0].value.value()) <= ftol * (1.0 + std::abs(s[0].value.value()));
    if (size < xtol || (flat && size < 1e3 * xtol)) break;
    Vector centroid(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) centroid[j] += s[i].x[j] / static_cast<double>(n);
    auto along = [&](double t) {
      Vector v(n);
      for (std::size_t j = 0; j < n; ++j) v[j] = centroid[j] + t * (s[n].x[j] - centroid[j]);
      return clamp(v);
    };
    const Vector xr = along(-1.0);
    const ExtReal fr = g(xr);
    if (fr < s[0].value) {
      const Vector xe = along(-2.0);
      const ExtReal fe = g(xe);
      s[n] = fe < fr ? Point{xe, fe} : Point{xr, fr};
    } else if (fr < s[n - 1].value) {
      s[n] = {xr, fr};
    } else {
      const Vector xc = fr < s[n].value ? along(-0.5) : along(0.5);
      const ExtReal fc = g(xc);
      if (fc < min(fr, s[n].value)) {
        s[n] = {xc, fc};
      } else {
        for (std::size_t i = 1; i <= n; ++i) {
          for (std::size_t j = 0; j < n; ++j) s[i].x[j] = s[0].x[j] + 0.5 * (s[i].x[j] - s[0].x[j]);
          s[i].value = g(s[i].x);
        }
      }
    }
  }
  order();
  return {s[0].x, -s[0].value};
}

/// Coordinate-wise golden-section polish of a local maximum within +-width.
inline Point coordinate_polish_max(const Objective& f, Point start, double width, double lo, double hi,
                                   int sweeps = 6) {
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    for (std::size_t i = 0; i < start.x.size(); ++i) {
      auto line = [&](double t) {
        Vector y = start.x;
        y[i] = t;
        return f(y);
      };
      const Point1D p =
          golden_max(line, std::max(lo, start.x[i] - width), std::min(hi, start.x[i] + width));
      if (p.value >= start.value) {
        start.x[i] = p.x;
        start.value = p.value;
      }
    }
    width *= 0.25;
  }
  return start;
}

/// Keeps the points whose value lies within `window` of the best one and
/// merges points closer than `radius` (max-norm); the best representative
/// of each cluster is kept. `maximize` selects the direction of "best".
inline std::vector<Point> cluster(std::vector<Point> pts, double radius, double window, bool maximize) {
  std::vector<Point> out;
  if (pts.empty()) return out;
  auto better = [&](const ExtReal& a, const ExtReal& b) { return maximize ? b < a : a < b; };
  std::stable_sort(pts.begin(), pts.end(), [&](const Point& a, const Point& b) { return better(a.value, b.value); });
  const ExtReal best = pts.front().value;
  for (const Point& p : pts) {
    if (best.is_finite() && p.value.is_finite()) {
      if (std::abs(p.value.value() - best.value()) > window) continue;
    } else if (!(p.value == best)) {
      continue;
    }
    bool merged = false;
    for (const Point& q : out) {
      double d = 0.0;
      for (std::size_t j = 0; j < p.x.size(); ++j) d = std::max(d, std::abs(p.x[j] - q.x[j]));
      if (d <= radius) {
        merged = true;
        break;
      }
    }
    if (!merged) out.push_back(p);
  }
  std::stable_sort(out.begin(), out.end(), [](const Point& a, const Point& b) { return a.x < b.x; });
  return out;
}

}  // namespace thermoflat::optim
