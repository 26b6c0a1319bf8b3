#include <gtest/gtest.h>

#include <cmath>

#include "regression_models.hpp"
#include "thermoflat/linearizer.hpp"
#include "thermoflat/oracle.hpp"

using namespace thermoflat;
using namespace thermoflat::testing;

namespace {

/// Entropy relative to the uniform measure of the product with mean spin z.
double spin_entropy(double z) {
  const double p = 0.5 * (1 + z), q = 1 - p;
  double h = 0.0;
  for (double v : {p, q})
    if (v > 0) h -= v * std::log(v / 0.5);
  return h;
}

/// P = P_L(phi) expressed through the affine part; the nonlinearity sees only the zero potential.
ModelSpec linear_model() {
  ModelSpec m;
  m.alphabet = AprioriAlphabet(Vector{0.2, 0.5, 0.3});
  m.base = CylinderPotential(m.alphabet, 1, {0.4, -1.1, 2.0}, "phi");
  m.plus = {CylinderPotential::zero(m.alphabet)};
  m.g_plus = ConvexSpec::quadratic(1.0);
  return m;
}

}  // namespace

TEST(DirectOracle, ZeroModelPeaksAtReference) {
  ModelSpec m = curie_weiss(2.0);
  m.plus = {CylinderPotential::zero(m.alphabet)};
  const auto r = direct_pressure(m);
  EXPECT_NEAR(r.value, 0.0, 1e-12);
  EXPECT_NEAR(r.argmax.kernel()[0][0], 0.5, 1e-6);
}

TEST(DirectOracle, SupercriticalCurieWeiss) {
  const auto r = direct_pressure(curie_weiss(2.0));
  const auto s = solve_flat(curie_weiss(2.0));
  EXPECT_NEAR(r.value, s.p_flat, 1e-5);
  const double mag = std::abs(2 * r.argmax.kernel()[0][0] - 1);
  EXPECT_NEAR(mag, std::tanh(cw_root(2.0)), 1e-4);
}

TEST(DirectOracle, SubcriticalCurieWeiss) {
  const auto r = direct_pressure(curie_weiss(0.5));
  EXPECT_NEAR(r.value, 0.0, 1e-12);
  EXPECT_NEAR(r.argmax.kernel()[0][0], 0.5, 1e-6);
}

TEST(DirectOracle, LinearModelGivesLinearPressure) {
  const auto m = linear_model();
  EXPECT_NEAR(direct_pressure(m).value, linear_pressure(*m.base), 1e-7);
}

TEST(DirectOracle, MemoryTwoMatchesLinearPressureOfBond) {
  ModelSpec m = ising_memory2();
  m.plus = {CylinderPotential::zero(m.alphabet)};
  EXPECT_NEAR(direct_pressure(m).value, linear_pressure(*m.base), 1e-7);
}

TEST(DirectOracle, Preconditions) {
  EXPECT_THROW(direct_pressure(curie_weiss(2.0), 10), ModelError);
  ModelSpec m3 = curie_weiss(2.0);
  m3.base = CylinderPotential::zero(m3.alphabet, 3);
  EXPECT_THROW(direct_pressure(m3), ModelError);
  ModelSpec k5;
  k5.alphabet = AprioriAlphabet::uniform(5);
  k5.plus = {CylinderPotential(k5.alphabet, 1, {1, 0, 0, 0, -1})};
  k5.g_plus = ConvexSpec::quadratic(1.0);
  EXPECT_THROW(direct_pressure(k5), ModelError);
}

TEST(DirectOracle, ValueNonDecreasingUnderRefinement) {
  for (const auto& m : {attraction_repulsion(), curie_weiss_field(2.0, 0.1), ising_memory2()}) {
    double prev = -1e300;
    for (int res : {11, 21, 41, 81}) {
      const double v = direct_pressure(m, res).value;
      EXPECT_GE(v, prev - 1e-12) << m.label << " " << res;
      prev = v;
    }
  }
}

TEST(BklEntropy, ReferenceMeanHasZeroEntropy) {
  const auto h = bkl_entropy({spin()}, Vector{0.0}, 40.0);
  EXPECT_NEAR(h.value, 0.0, 1e-14);
  EXPECT_TRUE(h.feasible);
}

TEST(BklEntropy, ThreeQuarterProduct) {
  const auto h = bkl_entropy({spin()}, Vector{0.5}, 40.0);
  EXPECT_NEAR(h.value, -(0.75 * std::log(1.5) + 0.25 * std::log(0.5)), 1e-9);
  EXPECT_NEAR(h.value, -0.130812, 1e-6);
}

TEST(BklEntropy, MatchesClosedFormOnScan) {
  for (double z : linspace(-1.0, 1.0, 21)) {
    const auto h = bkl_entropy({spin()}, Vector{z}, 40.0);
    EXPECT_NEAR(h.value, spin_entropy(z), 1e-6) << z;
    EXPECT_TRUE(h.feasible) << z;
  }
}

TEST(BklEntropy, ExtremeMeanApproachesDegenerateEntropy) {
  double prev = 0.0;
  for (double r : {2.0, 5.0, 10.0, 40.0}) {
    const auto h = bkl_entropy({spin()}, Vector{1.0}, r);
    EXPECT_LE(h.value, prev + 1e-12);
    // the gradient vanishes before a large box is reached
    if (r <= 10.0) {
      EXPECT_TRUE(h.boundary) << r;
    }
    prev = h.value;
  }
  EXPECT_NEAR(prev, -std::log(2.0), 1e-6);
  EXPECT_TRUE(bkl_entropy({spin()}, Vector{1.0}, 40.0).feasible);
}

TEST(BklEntropy, UnreachableMeanIsInfeasible) {
  const auto h = bkl_entropy({spin()}, Vector{1.2}, 40.0);
  EXPECT_FALSE(h.feasible);
  EXPECT_TRUE(h.boundary);
}

TEST(ReducePotentials, CoboundariesAndConstantsVanish) {
  const auto a = AprioriAlphabet::uniform(2);
  // f(x0) - f(x1) with f = (1, -2), plus a constant
  const CylinderPotential cob(a, 2, {0.0 + 3, 3.0 + 3, -3.0 + 3, 0.0 + 3});
  const auto red = reduce_potentials(a, {cob});
  EXPECT_EQ(red.psi.size(), 0u);
  EXPECT_NEAR(red.mean[0], 3.0, 1e-12);
}

TEST(ReducePotentials, RepeatedPotentialKeepsOneDimension) {
  const auto red = reduce_potentials(AprioriAlphabet::uniform(2), {spin(), spin()});
  ASSERT_EQ(red.psi.size(), 1u);
  const auto mu = MarkovMeasure::product(2, {0.3, 0.7});
  const double z = expectation(mu, red.psi[0]);
  for (int i = 0; i < 2; ++i)
    EXPECT_NEAR(red.mean[i] + red.a(i, 0) * z, expectation(mu, spin()), 1e-12);
}

TEST(BklOracle, SupercriticalCurieWeiss) {
  EXPECT_NEAR(bkl_pressure(curie_weiss(2.0)).value, cw_pressure(2.0), 1e-4);
}

TEST(BklOracle, SubcriticalCurieWeiss) { EXPECT_NEAR(bkl_pressure(curie_weiss(0.5)).value, 0.0, 1e-6); }

TEST(BklOracle, LinearModelCollapses) {
  const auto m = linear_model();
  EXPECT_NEAR(bkl_pressure(m).value, linear_pressure(*m.base), 1e-7);
}

TEST(Oracles, TripleAgreementOnRegressionSuite) {
  for (const auto& [name, model] : regression_suite()) {
    SCOPED_TRACE(name);
    const double pf = solve_flat(model).p_flat;
    EXPECT_LT(std::abs(direct_pressure(model).value - pf), 1e-5);
    EXPECT_LT(std::abs(bkl_pressure(model).value - pf), 1e-4);
  }
}

TEST(Oracles, RepulsionAndDecoupledModels) {
  for (const auto& model : {cw_repulsion(), decoupled()}) {
    const double pf = solve_flat(model).p_flat;
    EXPECT_NEAR(direct_pressure(model).value, pf, 1e-5) << model.label;
    EXPECT_NEAR(bkl_pressure(model).value, pf, 1e-4) << model.label;
  }
}
