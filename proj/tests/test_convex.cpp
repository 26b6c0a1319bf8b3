#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "thermoflat/convex.hpp"

using namespace thermoflat;

namespace {

double conj1(const ConvexSpec& g, double y) { return conjugate(g, Vector{y}).to_double(); }

}  // namespace

TEST(ExtendedReal, SaturatingArithmetic) {
  const ExtReal inf = ExtReal::pos_inf();
  EXPECT_TRUE((inf + 3.0).is_pos_inf());
  EXPECT_TRUE((-inf).is_neg_inf());
  EXPECT_TRUE(ExtReal(1.0) < inf);
  EXPECT_TRUE(ExtReal::neg_inf() < ExtReal(-1e300));
  EXPECT_THROW((void)(inf - inf), std::domain_error);
  EXPECT_THROW(ExtReal(std::nan("")), std::domain_error);
  EXPECT_DOUBLE_EQ((ExtReal(2.0) - 0.5).value(), 1.5);
}

TEST(Conjugate, QuadraticClosedForm) {
  EXPECT_NEAR(conj1(ConvexSpec::quadratic(2.0), 1.0), 0.25, 1e-15);
  EXPECT_EQ(conj1(ConvexSpec::quadratic(1.0), 0.0), 0.0);
  const ConvexSpec q2 = ConvexSpec::quadratic(3.0, 2);
  EXPECT_NEAR(conjugate(q2, Vector{1.0, 2.0}).value(), 5.0 / 6.0, 1e-15);
}

TEST(Conjugate, AbsSumIndicator) {
  const ConvexSpec a = ConvexSpec::abs_sum(1);
  EXPECT_EQ(conjugate(a, Vector{0.5}).value(), 0.0);
  EXPECT_TRUE(conjugate(a, Vector{1.5}).is_pos_inf());
  // a fine grid sup of yx - |x| agrees
  for (double y : {-0.9, 0.0, 0.5, 1.0}) {
    double best = -1e300;
    for (int i = -2000; i <= 2000; ++i) best = std::max(best, y * i * 0.01 - std::abs(i * 0.01));
    EXPECT_NEAR(best, 0.0, 1e-12);
  }
}

TEST(Conjugate, DimensionMismatchThrows) {
  EXPECT_THROW(conjugate(ConvexSpec::quadratic(1.0, 2), Vector{1.0}), ModelError);
}

TEST(Conjugate, LinearShift) {
  // g(x) = x^2 - 0.5 x  =>  g*(y) = (y + 0.5)^2 / 4
  const ConvexSpec g = ConvexSpec::linear_shift({-0.5}, ConvexSpec::quadratic(2.0));
  EXPECT_NEAR(conj1(g, 1.0), 1.5 * 1.5 / 4.0, 1e-15);
  EXPECT_NEAR(g.value(Vector{1.0}).value(), 0.5, 1e-15);
}

TEST(GridSampled, RejectsNonConvexAndShortAxes) {
  const auto bump = GridFunction::sample({linspace(-1, 1, 5)}, [](std::span<const double> x) {
    return x[0] * x[0] + (std::abs(x[0]) < 1e-9 ? 0.5 : 0.0);
  });
  EXPECT_THROW(ConvexSpec::grid(bump), ModelError);
  const auto shortg = GridFunction::sample({Vector{0.0, 1.0}}, [](std::span<const double> x) { return x[0]; });
  EXPECT_THROW(ConvexSpec::grid(shortg), ModelError);
  EXPECT_THROW(GridFunction({Vector{0.0, 0.0, 1.0}}, Vector{0, 0, 0}), ModelError);
}

TEST(DiscreteLft, QuadraticSelfConjugate) {
  const auto g = GridFunction::sample({linspace(-3, 3, 61)}, [](std::span<const double> x) { return x[0] * x[0] / 2; });
  const GridFunction gs = discrete_lft(g, {linspace(-2, 2, 41)});
  double err = 0.0;
  for (std::size_t j = 0; j < gs.size(); ++j) {
    const double y = gs.node(j)[0];
    err = std::max(err, std::abs(gs.values()[j] - y * y / 2));
  }
  EXPECT_LE(err, 5e-3);
  EXPECT_TRUE(gs.is_convex());
}

TEST(DiscreteLft, LinearAndConstant) {
  const auto lin = GridFunction::sample({linspace(-1, 1, 21)}, [](std::span<const double> x) { return x[0]; });
  const GridFunction ls = discrete_lft(lin, {linspace(-3, 3, 61)});
  for (std::size_t j = 0; j < ls.size(); ++j) {
    const double y = ls.node(j)[0];
    // truncation by the box [-1, 1]: sup (y - 1) x = |y - 1|
    EXPECT_NEAR(ls.values()[j], std::abs(y - 1.0), 1e-12);
  }
  const auto c = GridFunction::sample({linspace(-1, 1, 5)}, [](std::span<const double>) { return 2.5; });
  EXPECT_NEAR(discrete_lft(c, {Vector{0.0}}).values()[0], -2.5, 1e-15);
  EXPECT_THROW(discrete_lft(c, {Vector{}}), ModelError);
}

TEST(Biconjugate, QuarticAndIdempotence) {
  const Vector px = linspace(-1.5, 1.5, 101), py = linspace(-14, 14, 101);
  const auto g = GridFunction::sample({px}, [](std::span<const double> x) { return std::pow(x[0], 4); });
  const GridFunction gss = biconjugate(g, {px}, {py});
  double err = 0.0;
  for (std::size_t i = 1; i + 1 < g.size(); ++i) err = std::max(err, std::abs(gss.values()[i] - g.values()[i]));
  EXPECT_LE(err, 1e-2);
  const GridFunction g4 = biconjugate(gss, {px}, {py});
  for (std::size_t i = 1; i + 1 < g.size(); ++i) EXPECT_NEAR(g4.values()[i], gss.values()[i], 1e-12);
}

TEST(Biconjugate, ConvexHullOfBump) {
  const Vector px = linspace(-2, 2, 41);
  auto f = [](double x) { return x * x + (std::abs(x) < 0.55 ? 1.0 : 0.0); };
  const auto g = GridFunction::sample({px}, [&](std::span<const double> x) { return f(x[0]); });
  const GridFunction gss = biconjugate(g, {px}, {linspace(-8, 8, 1601)});
  // lower convex envelope by a direct hull construction
  std::vector<std::size_t> hull;
  for (std::size_t i = 0; i < px.size(); ++i) {
    while (hull.size() >= 2) {
      const std::size_t a = hull[hull.size() - 2], b = hull.back();
      const double cross = (px[b] - px[a]) * (f(px[i]) - f(px[a])) - (f(px[b]) - f(px[a])) * (px[i] - px[a]);
      if (cross <= 0) hull.pop_back();
      else break;
    }
    hull.push_back(i);
  }
  for (std::size_t h = 0; h + 1 < hull.size(); ++h)
    for (std::size_t i = hull[h]; i <= hull[h + 1]; ++i) {
      const double t = (px[i] - px[hull[h]]) / (px[hull[h + 1]] - px[hull[h]]);
      const double env = (1 - t) * f(px[hull[h]]) + t * f(px[hull[h + 1]]);
      EXPECT_NEAR(gss.values()[i], env, 1e-9) << "x=" << px[i];
    }
}

TEST(Biconjugate, LinearUnchangedInInterior) {
  const Vector px = linspace(-1, 1, 21);
  const auto g = GridFunction::sample({px}, [](std::span<const double> x) { return 0.3 * x[0] - 1; });
  const GridFunction gss = biconjugate(g, {px}, {linspace(-1, 1, 21)});
  for (std::size_t i = 1; i + 1 < px.size(); ++i) EXPECT_NEAR(gss.values()[i], g.values()[i], 1e-12);
}

TEST(Subdiff, Examples) {
  const SubdiffSet q = subdiff(ConvexSpec::quadratic(2.0), Vector{0.5});
  EXPECT_TRUE(q.is_singleton);
  EXPECT_DOUBLE_EQ(q.lower[0], 1.0);
  const SubdiffSet a = subdiff(ConvexSpec::abs_sum(1), Vector{0.0});
  EXPECT_FALSE(a.is_singleton);
  EXPECT_EQ(a.lower[0], -1.0);
  EXPECT_EQ(a.upper[0], 1.0);
  EXPECT_DOUBLE_EQ(a.distance(Vector{1.5}), 0.5);
  EXPECT_EQ(a.distance(Vector{0.2}), 0.0);

  const auto s = GridFunction::sample({linspace(-2, 2, 41)}, [](std::span<const double> x) { return x[0] * x[0] / 2; });
  const ConvexSpec g = ConvexSpec::grid(s);
  const SubdiffSet gs = subdiff(g, Vector{1.0});
  EXPECT_NEAR(gs.lower[0], 0.95, 1e-12);
  EXPECT_NEAR(gs.upper[0], 1.05, 1e-12);
  try {
    (void)subdiff(g, Vector{2.0});
    FAIL();
  } catch (const ModelError& e) {
    EXPECT_NE(std::string(e.what()).find("boundary subdifferential unavailable"), std::string::npos);
  }
}

TEST(FenchelYoung, RandomSamples) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.8, 1.8);
  const auto s = GridFunction::sample({linspace(-2, 2, 41), linspace(-2, 2, 41)}, [](std::span<const double> x) {
    return x[0] * x[0] + 0.5 * x[1] * x[1] + 0.25 * x[0] * x[1];
  });
  const std::vector<ConvexSpec> specs = {ConvexSpec::quadratic(1.5), ConvexSpec::quadratic(0.7, 2),
                                         ConvexSpec::abs_sum(2), ConvexSpec::grid(s),
                                         ConvexSpec::linear_shift({0.2}, ConvexSpec::quadratic(2.0))};
  for (const ConvexSpec& g : specs) {
    const std::size_t n = g.dim();
    for (int t = 0; t < 100; ++t) {
      Vector x(n), y(n);
      for (auto& v : x) v = u(rng);
      for (auto& v : y) v = u(rng);
      const ExtReal lhs = g.value(x) + conjugate(g, y);
      EXPECT_TRUE(lhs >= ExtReal(dot(x, y) - 1e-12));
      // equality at a subgradient (the grid subdifferential is a box hull, so use its corners only in 1-D)
      if (std::holds_alternative<ConvexSpec::Grid>(g.kind())) continue;
      const SubdiffSet sd = subdiff(g, x);
      Vector yy(n);
      for (std::size_t i = 0; i < n; ++i) yy[i] = 0.5 * (sd.lower[i] + sd.upper[i]);
      EXPECT_NEAR((g.value(x) + conjugate(g, yy)).value(), dot(x, yy), Tolerances::fenchel_young);
      // strict inequality away from the subdifferential
      Vector far = yy;
      far[0] += 0.3;
      if (sd.distance(far) > 1e-6) {
        EXPECT_GT((g.value(x) + conjugate(g, far)).to_double(), dot(x, far) + 1e-9);
      }
    }
  }
}

TEST(FenchelYoung, GridNodeEquality) {
  const Vector ax = linspace(-2, 2, 41);
  const auto s = GridFunction::sample({ax}, [](std::span<const double> x) { return std::cosh(x[0]); });
  const ConvexSpec g = ConvexSpec::grid(s);
  for (std::size_t i = 1; i + 1 < ax.size(); ++i) {
    const SubdiffSet sd = subdiff(g, Vector{ax[i]});
    for (double y : {sd.lower[0], 0.5 * (sd.lower[0] + sd.upper[0]), sd.upper[0]})
      EXPECT_NEAR((g.value(Vector{ax[i]}) + conjugate(g, Vector{y})).value(), ax[i] * y, Tolerances::fenchel_young);
  }
}

TEST(QuadraticRoundTrip, NumericReconjugation) {
  const double beta = 1.7;
  const auto gs = GridFunction::sample({linspace(-6, 6, 201)}, [&](std::span<const double> y) {
    return conjugate(ConvexSpec::quadratic(beta), y).value();
  });
  const GridFunction back = discrete_lft(gs, {linspace(-2, 2, 41)});
  for (std::size_t i = 0; i < back.size(); ++i) {
    const double x = back.node(i)[0];
    EXPECT_NEAR(back.values()[i], beta * x * x / 2, 4e-3);
  }
}

TEST(GrowthRadius, Examples) {
  const GrowthCertificate c = growth_radius(ConvexSpec::quadratic(1.0), 1.0);
  EXPECT_GE(c.safe_radius, 2.0);
  ASSERT_GE(c.decay_samples.size(), 2u);
  for (std::size_t i = 1; i < c.decay_samples.size(); ++i)
    EXPECT_LT(c.decay_samples[i].second, c.decay_samples[i - 1].second);
  EXPECT_EQ(growth_radius(ConvexSpec::quadratic(1.0), 0.0).safe_radius, 1.0);
  // conjugate linear with slope 0.5 and lambda = 1: no certificate
  try {
    (void)growth_radius([](std::span<const double> y) { return ExtReal(0.5 * std::abs(y[0])); }, 1, 1.0);
    FAIL();
  } catch (const SolverError& e) {
    EXPECT_NE(std::string(e.what()).find("conjugate lacks minimal linear growth at slope"), std::string::npos);
  }
}

TEST(GrowthRadius, TwoDimensional) {
  const GrowthCertificate c = growth_radius(ConvexSpec::quadratic(2.5, 2), 1.5);
  // sup over |y| >= R of 1.5|y| - |y|^2/5 is below -1 once R >= 9.
  EXPECT_GE(c.safe_radius, 8.0);
  for (std::size_t i = 1; i < c.decay_samples.size(); ++i)
    EXPECT_LT(c.decay_samples[i].second, c.decay_samples[i - 1].second);
}
