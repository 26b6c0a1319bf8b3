#pragma once

// Models shared by the unit and acceptance suites, and small closed-form
// helpers used as independent references.

#include <cmath>
#include <string>
#include <vector>

#include "thermoflat/model.hpp"

namespace thermoflat::testing {

inline AprioriAlphabet binary() { return AprioriAlphabet::uniform(2); }
inline CylinderPotential spin() { return {binary(), 1, {1.0, -1.0}, "spin"}; }

/// Curie-Weiss: P(mu) = h(mu) + beta m^2 / 2 with m = mu(spin).
inline ModelSpec curie_weiss(double beta) {
  ModelSpec m;
  m.alphabet = binary();
  m.plus = {spin()};
  m.g_plus = ConvexSpec::quadratic(beta);
  m.label = "cw";
  return m;
}

/// Curie-Weiss with external field: g+(x) = beta x^2 / 2 + field x.
inline ModelSpec curie_weiss_field(double beta, double field) {
  ModelSpec m = curie_weiss(beta);
  m.g_plus = ConvexSpec::linear_shift({field}, ConvexSpec::quadratic(beta));
  m.label = "cw-field";
  return m;
}

inline ModelSpec attraction_repulsion() {
  ModelSpec m;
  m.alphabet = AprioriAlphabet(Vector{0.5, 0.3, 0.2});
  m.plus = {CylinderPotential(m.alphabet, 1, {1.0, 0.0, -1.0}, "a")};
  m.minus = {CylinderPotential(m.alphabet, 1, {0.0, 1.0, 1.0}, "r")};
  m.g_plus = ConvexSpec::quadratic(2.5);
  m.g_minus = ConvexSpec::quadratic(1.0);
  m.label = "attraction-repulsion";
  return m;
}

/// Nearest-neighbour coupling 0.5 s_a s_b plus a mean-field term.
inline ModelSpec ising_memory2() {
  ModelSpec m = curie_weiss(1.2);
  m.base = CylinderPotential(m.alphabet, 2, {0.5, -0.5, -0.5, 0.5}, "bond");
  m.label = "ising-mem2";
  return m;
}

/// phi+ = phi- = spin, g+ = 3x^2/2, g- = x^2/2: effective Curie-Weiss at beta 2.
inline ModelSpec cw_repulsion() {
  ModelSpec m = curie_weiss(3.0);
  m.minus = {spin()};
  m.g_minus = ConvexSpec::quadratic(1.0);
  m.label = "cw-repulsion";
  return m;
}

/// tau- identically zero.
inline ModelSpec decoupled() {
  ModelSpec m = curie_weiss(2.0);
  m.minus = {CylinderPotential::zero(m.alphabet)};
  m.g_minus = ConvexSpec::quadratic(1.0);
  m.label = "decoupled";
  return m;
}

struct NamedModel {
  std::string name;
  ModelSpec model;
};

inline std::vector<NamedModel> regression_suite() {
  return {{"cw-subcritical", curie_weiss(0.5)}, {"cw-supercritical", curie_weiss(2.0)},
          {"cw-field", curie_weiss_field(2.0, 0.1)}, {"attraction-repulsion", attraction_repulsion()},
          {"ising-mem2", ising_memory2()}};
}

/// Positive root of y = beta tanh(y) (0 when beta <= 1), by bisection.
inline double cw_root(double beta) {
  if (beta <= 1.0) return 0.0;
  double lo = 1e-12, hi = beta + 1.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (mid - beta * std::tanh(mid) < 0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Curie-Weiss nonlinear pressure log cosh y* - y*^2 / (2 beta).
inline double cw_pressure(double beta) {
  const double y = cw_root(beta);
  return std::log(std::cosh(y)) - y * y / (2 * beta);
}

}  // namespace thermoflat::testing
