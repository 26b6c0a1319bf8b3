#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace thermoflat {

using Vector = std::vector<double>;

/// Invalid input: malformed model, violated construction invariant.
class ModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A solver could not produce a result that meets its contract.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical tolerances shared across modules.
struct Tolerances {
  static constexpr double convexity = 1e-12;      // second slope difference on grids
  static constexpr double fenchel_young = 1e-9;   // equality case of g + g* >= <x,y>
  static constexpr double singleton = 1e-12;      // subdifferential collapse
  static constexpr double probability_sum = 1e-12;
  static constexpr double stationarity = 1e-10;   // |pi Q - pi|
  static constexpr double eigen_residual = 1e-10;
  static constexpr double power_iteration = 1e-13;
  static constexpr int power_iteration_cap = 100000;
  static constexpr double growth_margin = 1.0;    // log-pressure units
  static constexpr int growth_doublings = 40;
  static constexpr int max_memory = 4;
};

/// Element of the dual space of order parameters.
class DualPoint {
 public:
  DualPoint() = default;
  explicit DualPoint(Vector coords) : coords_(std::move(coords)) { check(); }
  DualPoint(std::initializer_list<double> c) : coords_(c) { check(); }
  static DualPoint zeros(std::size_t n) { return DualPoint(Vector(n, 0.0)); }

  std::size_t size() const { return coords_.size(); }
  bool empty() const { return coords_.empty(); }
  double operator[](std::size_t i) const { return coords_[i]; }
  double& operator[](std::size_t i) { return coords_[i]; }
  const Vector& coords() const { return coords_; }
  std::span<const double> span() const { return coords_; }
  operator std::span<const double>() const { return coords_; }  // NOLINT

  double norm() const {
    double s = 0.0;
    for (double v : coords_) s += v * v;
    return std::sqrt(s);
  }
  double max_abs_diff(const DualPoint& o) const {
    double d = 0.0;
    for (std::size_t i = 0; i < size(); ++i) d = std::max(d, std::abs(coords_[i] - o.coords_[i]));
    return d;
  }
  friend bool operator==(const DualPoint&, const DualPoint&) = default;

 private:
  void check() const {
    for (double v : coords_)
      if (!std::isfinite(v)) throw ModelError("DualPoint: non-finite coordinate");
  }
  Vector coords_;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double log_sum_exp(std::span<const double> xs) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double x : xs) mx = std::max(mx, x);
  if (mx == -std::numeric_limits<double>::infinity()) return mx;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - mx);
  return mx + std::log(s);
}

inline std::size_t ipow(std::size_t base, int exp) {
  std::size_t r = 1;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

}  // namespace thermoflat
