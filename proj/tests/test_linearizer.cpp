#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>

#include "regression_models.hpp"
#include "thermoflat/linearizer.hpp"
#include "thermoflat/oracle.hpp"

using namespace thermoflat;
using namespace thermoflat::testing;

namespace {

DualPoint pt(std::initializer_list<double> xs) { return DualPoint(Vector(xs)); }

double ys(double beta) { return cw_root(beta); }

}  // namespace

TEST(ApproximatingPotential, ZeroDualsGiveZero) {
  const auto m = attraction_repulsion();
  const auto t = approximating_potential(m, pt({0.0}), pt({0.0}));
  for (double v : t.table()) EXPECT_EQ(v, 0.0);
}

TEST(ApproximatingPotential, ScalarMultiple) {
  const auto m = curie_weiss(2.0);
  const auto t = approximating_potential(m, pt({2.0}), DualPoint::zeros(0));
  EXPECT_EQ(t.table(), (Vector{2.0, -2.0}));
}

TEST(ApproximatingPotential, EqualPotentialsCancel) {
  auto m = cw_repulsion();
  const auto t = approximating_potential(m, pt({1.0}), pt({1.0}));
  for (double v : t.table()) EXPECT_EQ(v, 0.0);
}

TEST(ApproximatingPotential, PadsToCommonMemory) {
  const auto m = ising_memory2();
  const auto t = approximating_potential(m, pt({1.0}), DualPoint::zeros(0));
  ASSERT_EQ(t.memory(), 2);
  EXPECT_EQ(t.table(), (Vector{1.5, 0.5, -1.5, -0.5}));
}

TEST(ApproximatingPotential, DimensionMismatchThrows) {
  EXPECT_THROW(approximating_potential(curie_weiss(2.0), pt({1.0, 2.0}), DualPoint::zeros(0)), ModelError);
}

TEST(PNL, ZeroModelIsZero) {
  ModelSpec m = curie_weiss(2.0);
  m.plus = {CylinderPotential::zero(m.alphabet)};
  EXPECT_NEAR(p_nl(m, pt({0.0}), DualPoint::zeros(0)).value(), 0.0, 1e-15);
}

TEST(PNL, CurieWeissSpotValue) {
  const auto v = p_nl(curie_weiss(2.0), pt({1.0}), DualPoint::zeros(0));
  EXPECT_NEAR(v.value(), std::log(std::cosh(1.0)) - 0.25, 1e-14);
  EXPECT_NEAR(v.value(), 0.183781, 1e-6);
}

TEST(PNL, OutsideConjugateDomainIsPlusInfinity) {
  ModelSpec m = cw_repulsion();
  m.g_minus = ConvexSpec::abs_sum(1);
  EXPECT_TRUE(p_nl(m, pt({0.5}), pt({1.5})).is_pos_inf());
  EXPECT_TRUE(p_nl(m, pt({0.5}), pt({0.5})).is_finite());
}

TEST(PNL, EvaluationRecordIsConsistent) {
  const auto m = attraction_repulsion();
  const auto e = evaluate_approximation(m, pt({0.7}), pt({-0.3}));
  const double expect = e.p_l + conjugate(*m.g_minus, Vector{-0.3}).value() - conjugate(*m.g_plus, Vector{0.7}).value();
  EXPECT_NEAR(e.p_nl.value(), expect, 1e-14);
  EXPECT_NEAR(e.p_l, linear_pressure(e.theta), 1e-13);
}

TEST(PFlatOf, DecoupledMinimizerAtZero) {
  const auto m = decoupled();
  const auto r = p_flat_of(m, pt({0.8}));
  ASSERT_EQ(r.minimizers.size(), 1u);
  EXPECT_NEAR(r.minimizers[0][0], 0.0, 1e-6);
  EXPECT_NEAR(r.value.value(), std::log(std::cosh(0.8)) - 0.8 * 0.8 / 4.0, 1e-12);
}

TEST(PFlatOf, QuadraticMinimizerIsStationary) {
  const auto m = attraction_repulsion();
  const Linearization lin(m);
  const DualPoint yp = pt({0.9});
  const auto r = p_flat_of(m, yp);
  ASSERT_EQ(r.minimizers.size(), 1u);
  const double ym = r.minimizers[0][0];
  const double h = 1e-5;
  const double dpl = (lin.linear(yp, Vector{ym + h}) - lin.linear(yp, Vector{ym - h})) / (2 * h);
  // d/dy- [P_L + y-^2 / 2] = 0
  EXPECT_NEAR(ym, -1.0 * dpl, 1e-6);
}

TEST(PFlatOf, SymmetricAtZeroInRepulsionModel) {
  const auto r = p_flat_of(cw_repulsion(), pt({0.0}));
  ASSERT_EQ(r.minimizers.size(), 1u);
  EXPECT_NEAR(r.minimizers[0][0], 0.0, 1e-6);
  const auto rp = p_flat_of(cw_repulsion(), pt({0.6}));
  const auto rn = p_flat_of(cw_repulsion(), pt({-0.6}));
  EXPECT_NEAR(rp.minimizers[0][0], -rn.minimizers[0][0], 1e-6);
  EXPECT_NEAR(rp.value.value(), rn.value.value(), 1e-12);
}

TEST(SolveFlat, SubcriticalCurieWeiss) {
  const auto s = solve_flat(curie_weiss(0.5));
  EXPECT_NEAR(s.p_flat, 0.0, 1e-12);
  ASSERT_EQ(s.m_flat.size(), 1u);
  EXPECT_NEAR(s.m_flat[0][0], 0.0, 1e-6);
  ASSERT_EQ(s.equilibria.size(), 1u);
  const auto& p = s.equilibria[0].measure.kernel()[0];
  EXPECT_NEAR(p[0], 0.5, 1e-7);
  EXPECT_LT(s.equilibria[0].residual_plus, 1e-6);
}

TEST(SolveFlat, SupercriticalCurieWeiss) {
  const double y = ys(2.0);
  const auto s = solve_flat(curie_weiss(2.0));
  EXPECT_NEAR(s.p_flat, cw_pressure(2.0), 1e-10);
  ASSERT_EQ(s.m_flat.size(), 2u);
  EXPECT_NEAR(s.m_flat[0][0], -y, 1e-6);
  EXPECT_NEAR(s.m_flat[1][0], y, 1e-6);
  ASSERT_EQ(s.equilibria.size(), 2u);
  for (const auto& e : s.equilibria) {
    const double sign = e.x_plus[0] > 0 ? 1.0 : -1.0;
    const double p0 = std::exp(sign * y) / (2 * std::cosh(y));
    EXPECT_NEAR(e.measure.kernel()[0][0], p0, 1e-7);
    EXPECT_LT(e.residual_plus, 1e-6);
  }
}

TEST(SolveFlat, AdmittedMeasuresAttainThePressure) {
  for (const auto& [name, model] : regression_suite()) {
    SCOPED_TRACE(name);
    const auto s = solve_flat(model);
    ASSERT_FALSE(s.equilibria.empty());
    for (const auto& e : s.equilibria) {
      EXPECT_NEAR(direct_nonlinear_pressure(model, e.measure).value(), s.p_flat, 1e-6);
      EXPECT_LT(e.residual_plus, 1e-6);
      EXPECT_LT(e.residual_minus, 1e-6);
    }
  }
}

TEST(SolveFlat, EquilibriaOfDistinctOptimizersAreDistinct) {
  const auto s = solve_flat(curie_weiss(1.5));
  ASSERT_EQ(s.equilibria.size(), 2u);
  EXPECT_GT(cylinder_distance(s.equilibria[0].measure, s.equilibria[1].measure), 0.1);
}

TEST(SolveFlat, SymmetricModelHasNegationClosedOptimizers) {
  for (double beta : {1.5, 2.0, 3.0}) {
    const auto s = solve_flat(curie_weiss(beta));
    for (const auto& x : s.m_flat) {
      bool found = false;
      for (const auto& z : s.m_flat) found = found || std::abs(x[0] + z[0]) < 1e-5;
      EXPECT_TRUE(found) << beta;
    }
  }
}

TEST(SolveFlat, GibbsMeasureDoesNotDependOnInnerChoice) {
  // every x- in Mb(x+) yields the same measure; with strictly convex g-* there is one
  const auto m = attraction_repulsion();
  const auto s = solve_flat(m);
  const Linearization lin(m);
  for (const auto& [xp, xms] : s.m_flat_of) {
    const auto ref = linear_equilibrium(lin, xp, xms.front()).measure;
    for (const auto& xm : xms) EXPECT_LT(cylinder_distance(ref, linear_equilibrium(lin, xp, xm).measure), 1e-8);
  }
}

TEST(SolveFlat, ImpossibleToleranceReportsDiagnostics) {
  SolverConfig c;
  c.sc_tol = 1e-300;
  c.tol = 1e-300;
  try {
    solve_flat(curie_weiss(2.0), c);
    FAIL() << "expected a solver error";
  } catch (const SolverError& e) {
    EXPECT_NE(std::string(e.what()).find("no self-consistent optimizer found"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("rejected"), std::string::npos);
  }
}

TEST(SolveFlat, ConfigValidation) {
  SolverConfig c;
  c.grid = 4;
  EXPECT_THROW(solve_flat(curie_weiss(2.0), c), ModelError);
  c = {};
  c.tol = 0.0;
  EXPECT_THROW(solve_flat(curie_weiss(2.0), c), ModelError);
}

TEST(SolveFlat, RadiusOverrideIsHonoured) {
  SolverConfig c;
  c.radius_plus = 5.0;
  const auto s = solve_flat(curie_weiss(2.0), c);
  EXPECT_EQ(s.radii.plus, 5.0);
  EXPECT_NEAR(s.p_flat, cw_pressure(2.0), 1e-10);
}

TEST(SolveFlat, OptimizersLieInsideGrowthRadii) {
  for (const auto& [name, model] : regression_suite()) {
    const auto s = solve_flat(model);
    for (const auto& x : s.m_flat) EXPECT_LT(x.norm(), s.radii.plus) << name;
    for (const auto& [xp, xms] : s.m_flat_of)
      for (const auto& x : xms) EXPECT_LE(x.norm(), s.radii.minus) << name;
  }
}

TEST(SolveFlat, ResultIndependentOfWorkerCount) {
  setenv("THERMOFLAT_THREADS", "1", 1);
  const auto a = solve_flat(attraction_repulsion());
  setenv("THERMOFLAT_THREADS", "3", 1);
  const auto b = solve_flat(attraction_repulsion());
  unsetenv("THERMOFLAT_THREADS");
  EXPECT_EQ(a.p_flat, b.p_flat);
  ASSERT_EQ(a.m_flat.size(), b.m_flat.size());
  for (std::size_t i = 0; i < a.m_flat.size(); ++i) EXPECT_EQ(a.m_flat[i].coords(), b.m_flat[i].coords());
}

TEST(SolveSharp, DecoupledHasNoGap) {
  const auto s = solve_game(decoupled());
  ASSERT_TRUE(s.gap.has_value());
  EXPECT_NEAR(*s.gap, 0.0, 1e-8);
}

TEST(SolveSharp, SingleLayerConvention) {
  const auto r = solve_sharp(curie_weiss(2.0));
  EXPECT_NEAR(r.p_sharp, cw_pressure(2.0), 1e-10);
  EXPECT_FALSE(r.note.empty());
}

TEST(SolveSharp, WeakDualityOnCoupledModels) {
  for (const auto& m : {attraction_repulsion(), cw_repulsion()}) {
    const auto s = solve_game(m);
    EXPECT_GE(*s.gap, -1e-8) << m.label;
    RecordProperty(m.label + "_gap", std::to_string(*s.gap));
  }
}

TEST(SolveSharp, RepulsionModelHasStrictGap) {
  // inf_{y-} sup_{y+}: at y- = 0 the inner problem is Curie-Weiss at beta 3
  const auto s = solve_game(cw_repulsion());
  EXPECT_NEAR(s.p_flat, cw_pressure(2.0), 1e-9);
  EXPECT_LE(*s.p_sharp, cw_pressure(3.0) + 1e-9);
  EXPECT_GT(*s.gap, 0.4);
}

TEST(MeanField, ConvergesToCurieWeissRoot) {
  const auto r = mean_field_iterate(curie_weiss(2.0), pt({1.0}), DualPoint::zeros(0), 1.0, 2000);
  ASSERT_TRUE(r.converged);
  EXPECT_NEAR(r.y_plus[0], ys(2.0), 1e-8);
}

TEST(MeanField, ZeroIsFixed) {
  const auto r = mean_field_iterate(curie_weiss(2.0), pt({0.0}), DualPoint::zeros(0), 1.0, 100);
  ASSERT_TRUE(r.converged);
  EXPECT_EQ(r.y_plus[0], 0.0);
}

TEST(MeanField, SignOfStartSelectsPhase) {
  const double y = ys(1.2);
  const auto up = mean_field_iterate(curie_weiss(1.2), pt({0.3}), DualPoint::zeros(0), 0.5, 20000);
  const auto dn = mean_field_iterate(curie_weiss(1.2), pt({-0.3}), DualPoint::zeros(0), 0.5, 20000);
  ASSERT_TRUE(up.converged && dn.converged);
  EXPECT_NEAR(up.y_plus[0], y, 1e-7);
  EXPECT_NEAR(dn.y_plus[0], -y, 1e-7);
}

TEST(MeanField, KinkedNonlinearityRejected) {
  ModelSpec m = curie_weiss(2.0);
  m.g_plus = ConvexSpec::abs_sum(1);
  EXPECT_THROW(mean_field_iterate(m, pt({0.1}), DualPoint::zeros(0), 1.0, 10), ModelError);
}

TEST(DecisionRule, DecoupledIsConstantZero) {
  const auto m = decoupled();
  const auto s = solve_flat(m);
  const auto rule = decision_rule(m, s, {});
  ASSERT_FALSE(rule.table.empty());
  for (const auto& [xp, xm] : rule.table) EXPECT_NEAR(xm[0], 0.0, 1e-6);
  EXPECT_TRUE(rule.continuous);
}

TEST(DecisionRule, QuadraticRuleIsStationary) {
  const auto m = attraction_repulsion();
  const auto s = solve_flat(m);
  const auto rule = decision_rule(m, s, {});
  const Linearization lin(m);
  for (const auto& [xp, xm] : rule.table) {
    const double h = 1e-5;
    const double d = (lin.linear(xp, Vector{xm[0] + h}) - lin.linear(xp, Vector{xm[0] - h})) / (2 * h);
    EXPECT_NEAR(xm[0], -d, 1e-5);
  }
  EXPECT_TRUE(rule.continuous);
}

TEST(DecisionRule, EquivariantUnderSignFlip) {
  const auto m = cw_repulsion();
  const auto s = solve_flat(m);
  const auto rule = decision_rule(m, s, {});
  for (const auto& [xp, xm] : rule.table) {
    const auto mirror = p_flat_of(m, DualPoint(Vector{-xp[0]}));
    ASSERT_EQ(mirror.minimizers.size(), 1u);
    EXPECT_NEAR(mirror.minimizers[0][0], -xm[0], 1e-6);
  }
}

TEST(DecisionRule, RequiresStrictlyConvexConjugate) {
  ModelSpec m = cw_repulsion();
  m.g_minus = ConvexSpec::abs_sum(1);
  SolverConfig c;
  const auto s = solve_flat(m, c);
  EXPECT_THROW(decision_rule(m, s, c), ModelError);
}
