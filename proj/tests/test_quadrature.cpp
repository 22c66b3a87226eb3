#include <gtest/gtest.h>

#include "magtrace/quadrature.hpp"
#include "oracles.hpp"

using namespace magtrace;

TEST(GaussLegendre, ThreePointNodesAndWeights) {
  const auto g = gauss_legendre(3);
  EXPECT_NEAR(g.x[0], -std::sqrt(0.6), 1e-15);
  EXPECT_EQ(g.x[1], 0.0);
  EXPECT_NEAR(g.x[2], std::sqrt(0.6), 1e-15);
  EXPECT_NEAR(g.w[0], 5.0 / 9.0, 1e-15);
  EXPECT_NEAR(g.w[1], 8.0 / 9.0, 1e-15);
  EXPECT_EQ(g.x[0], -g.x[2]);
}

TEST(GaussLegendre, ExactForDegreeTwoNMinusOne) {
  for (int n : {1, 2, 5, 16, 32}) {
    const auto g = composite_gauss(n, 1, 0.0, 1.0);
    for (int k = 0; k <= 2 * n - 1; ++k) {
      double s = 0.0;
      for (std::size_t i = 0; i < g.x.size(); ++i) s += g.w[i] * std::pow(g.x[i], k);
      EXPECT_NEAR(s, 1.0 / (k + 1), 1e-14) << "n=" << n << " k=" << k;
    }
  }
}

TEST(MirroredNodes, CoverTheCompositeRule) {
  for (SegmentRule r : {SegmentRule{3, 1}, SegmentRule{4, 3}, SegmentRule{5, 3}, SegmentRule{16, 2}}) {
    const auto& m = mirrored_nodes(r);
    double mass = m.has_center ? m.center_weight : 0.0;
    double first = m.has_center ? 0.5 * m.center_weight : 0.0;
    for (std::size_t k = 0; k < m.t.size(); ++k) {
      EXPECT_LT(m.t[k], 0.5);
      mass += 2 * m.w[k];
      first += m.w[k] * (m.t[k] + (1 - m.t[k]));
    }
    EXPECT_NEAR(mass, 1.0, 1e-14);
    EXPECT_NEAR(first, 0.5, 1e-14);
    EXPECT_EQ(static_cast<int>(2 * m.t.size() + (m.has_center ? 1 : 0)), r.points());
  }
}

TEST(SimplexRule, IntegratesMonomialsOverTriangle) {
  const auto r = simplex_rule(6);
  // \int t^a s^b over the simplex = a! b! / (a+b+2)!
  auto fact = [](int n) { double f = 1; for (int i = 2; i <= n; ++i) f *= i; return f; };
  for (int a = 0; a <= 4; ++a)
    for (int b = 0; b <= 4 - a; ++b) {
      double s = 0;
      for (std::size_t k = 0; k < r.w.size(); ++k) s += r.w[k] * std::pow(r.t[k], a) * std::pow(r.s[k], b);
      EXPECT_NEAR(s, fact(a) * fact(b) / fact(a + b + 2), 1e-15);
      EXPECT_NEAR(s, oracle::simpson_triangle([&](double t, double u) { return std::pow(t, a) * std::pow(u, b); }, 200), 1e-9);
    }
}

TEST(Measures, NamedMomentsMatchClosedForms) {
  const auto leb = measure_moments(QuadratureMeasure::lebesgue(), 2);
  EXPECT_EQ(leb, (std::vector<double>{1.0, 0.5, 1.0 / 3.0}));
  const auto mid = measure_moments(QuadratureMeasure::midpoint(), 2);
  EXPECT_EQ(mid, (std::vector<double>{1.0, 0.5, 0.25}));
  const auto simp = measure_moments(QuadratureMeasure::simpson(), 4);
  EXPECT_EQ(simp, (std::vector<double>{1.0, 0.5, 1.0 / 3.0, 0.25, 5.0 / 24.0}));
  const auto ends = measure_moments(QuadratureMeasure::endpoints(), 3);
  EXPECT_EQ(ends, (std::vector<double>{1.0, 0.5, 0.5, 0.5}));
}

TEST(Measures, TotalMassAndMatchingMoments) {
  for (auto name : {"lebesgue", "midpoint", "endpoints", "simpson"})
    EXPECT_DOUBLE_EQ(QuadratureMeasure::named(name).total_mass(), 1.0);
  EXPECT_EQ(matching_moments(QuadratureMeasure::lebesgue(), QuadratureMeasure::midpoint()), 2);
  EXPECT_EQ(matching_moments(QuadratureMeasure::lebesgue(), QuadratureMeasure::endpoints()), 2);
  EXPECT_EQ(matching_moments(QuadratureMeasure::lebesgue(), QuadratureMeasure::simpson()), 4);
  EXPECT_THROW(QuadratureMeasure::named("trapezoid"), Error);
}

TEST(Measures, CustomMeasureUsesFloatingMoments) {
  const auto mu = QuadratureMeasure::custom({{0.25, 0.5}, {0.75, 0.5}});
  const auto m = measure_moments(mu, 2);
  EXPECT_NEAR(m[2], 0.5 * (0.0625 + 0.5625), 1e-15);
  EXPECT_THROW(QuadratureMeasure::custom({{1.5, 1.0}}), Error);
}
