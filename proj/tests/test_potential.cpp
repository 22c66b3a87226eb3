#include <gtest/gtest.h>

#include "magtrace/potential.hpp"
#include "oracles.hpp"

using namespace magtrace;

namespace {

double oracle_segment(const PotentialField& f, const Vec& X, const Vec& Y) {
  return oracle::simpson([&](double t) { return dot(f((1 - t) * X + t * Y), Y - X); }, 0.0, 1.0, 4000);
}

Vec rand_point(oracle::Rng& r, int n, double lo = -1, double hi = 1) {
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = r.uniform(lo, hi);
  return v;
}

}  // namespace

TEST(SegmentPotential, ClosedFormExamples) {
  const SegmentRule r{};
  EXPECT_EQ(segment_potential(PotentialField::zero(2), Vec{0.1, 0.2}, Vec{3.0, -1.0}, r), 0.0);
  EXPECT_NEAR(segment_potential(PotentialField::constant(Vec{1.0, 2.0}), Vec{0.0, 0.0}, Vec{1.0, 1.0}, r), 3.0, 1e-15);
  EXPECT_NEAR(segment_potential(PotentialField::landau_plane(), Vec{0.0, 0.0}, Vec{1.0, 1.0}, r), 0.5, 1e-15);
  EXPECT_NEAR(segment_potential(PotentialField::landau_plane(), Vec{0.0, 0.0}, Vec{1.0, 1.0}), 0.5, 1e-15);
}

TEST(SegmentPotential, ExactForPolynomialsAndAntisymmetric) {
  oracle::Rng rng(11);
  for (int deg = 1; deg <= 4; ++deg) {
    const auto f = PotentialField::random_polynomial(2, deg, static_cast<std::uint64_t>(deg));
    const SegmentRule rule = SegmentRule::exact_for_degree(deg);
    for (int k = 0; k < 20; ++k) {
      const Vec X = rand_point(rng, 2), Y = rand_point(rng, 2);
      const double v = segment_potential(f, X, Y, rule);
      EXPECT_NEAR(v, oracle_segment(f, X, Y), 1e-12);
      EXPECT_EQ(segment_potential(f, Y, X, rule), -v);
      EXPECT_EQ(segment_potential(f, Y, X, SegmentRule{7, 3}), -segment_potential(f, X, Y, SegmentRule{7, 3}));
    }
  }
}

TEST(SegmentPotential, AdaptiveConvergesForSmoothFields) {
  const auto f = PotentialField::custom(2, [](const Vec& x) { return Vec{std::sin(5 * x[1]), std::exp(x[0])}; });
  const Vec X{-1.0, 0.3}, Y{2.0, -1.7};
  EXPECT_NEAR(segment_potential_adaptive(f, X, Y), oracle::simpson_richardson([&](double t) { return dot(f((1 - t) * X + t * Y), Y - X); }, 0.0, 1.0, 4000), 1e-11);
}

TEST(SegmentPotential, GaugeShiftIdentity) {
  oracle::Rng rng(12);
  const auto base = PotentialField::random_polynomial(2, 2, 3);
  for (int k = 0; k < 5; ++k) {
    const Polynomial phi = Polynomial::random(2, 3, 100 + static_cast<std::uint64_t>(k));
    const auto g = gauge_transform(base, GaugeFunction::from_polynomial(phi));
    const Vec X = rand_point(rng, 2), Y = rand_point(rng, 2);
    const SegmentRule rule = SegmentRule::exact_for_degree(3);
    EXPECT_NEAR(segment_potential(g, X, Y, rule) - segment_potential(base, X, Y, rule), phi(Y) - phi(X), 1e-12);
  }
}

TEST(MeasurePotential, NamedMeasuresOnQuadraticField) {
  Polynomial sq(2);
  sq.add({2, 0, 0}, 1.0);
  const auto f = PotentialField::from_polynomials({Polynomial(2), sq});
  const Vec x{0.0, 0.0}, y{1.0, 1.0};
  EXPECT_NEAR(measure_potential(f, QuadratureMeasure::endpoints(), x, y), 0.5, 1e-15);
  EXPECT_NEAR(measure_potential(f, QuadratureMeasure::midpoint(), x, y), 0.25, 1e-15);
  EXPECT_NEAR(measure_potential(f, QuadratureMeasure::lebesgue(), x, y), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(measure_potential(f, QuadratureMeasure::simpson(), x, y), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(measure_potential(PotentialField::landau_plane(), QuadratureMeasure::midpoint(), x, y), 0.5, 1e-15);
}

TEST(MeasurePotential, LebesgueIsTheSegmentPathAndAffineFieldsAgree) {
  oracle::Rng rng(13);
  const auto cubic = PotentialField::random_polynomial(2, 3, 9);
  const auto affine = PotentialField::random_polynomial(2, 1, 4);
  for (int k = 0; k < 10; ++k) {
    const Vec x = rand_point(rng, 2), y = rand_point(rng, 2);
    EXPECT_EQ(measure_potential(cubic, QuadratureMeasure::lebesgue(), x, y, SegmentRule{5, 1}),
              segment_potential(cubic, x, y, SegmentRule{5, 1}));
    const double ref = measure_potential(affine, QuadratureMeasure::lebesgue(), x, y);
    for (auto name : {"midpoint", "endpoints", "simpson"})
      EXPECT_NEAR(measure_potential(affine, QuadratureMeasure::named(name), x, y), ref, 1e-12);
  }
}

TEST(TriangleResidual, HandExampleAndZeroField) {
  const SegmentRule r{4, 1};
  const auto f = PotentialField::landau_plane();
  const Vec X{0.0, 0.0}, Y{1.0, 0.0}, Z{0.0, 1.0};
  EXPECT_NEAR(segment_potential(f, X, Y, r), 0.0, 1e-16);
  EXPECT_NEAR(segment_potential(f, Y, Z, r), 0.5, 1e-15);
  EXPECT_NEAR(segment_potential(f, Z, X, r), 0.0, 1e-16);
  EXPECT_NEAR(simplex_flux(f, X, Y, Z, 4), 0.5, 1e-15);
  EXPECT_LE(triangle_residual(f, X, Y, Z, r), 1e-15);
  EXPECT_EQ(triangle_residual(PotentialField::zero(2), X, Y, Z, r), 0.0);
}

TEST(TriangleResidual, CubicFieldsRandomTriangles) {
  oracle::Rng rng(14);
  for (int k = 0; k < 100; ++k) {
    const int n = k % 2 ? 3 : 2;
    const auto f = PotentialField::random_polynomial(n, 3, 200 + static_cast<std::uint64_t>(k));
    const Vec X = rand_point(rng, n), Y = rand_point(rng, n), Z = rand_point(rng, n);
    EXPECT_LE(triangle_residual(f, X, Y, Z, SegmentRule::exact_for_degree(5)), 1e-10);
  }
  // the flux itself against an independent triangle rule
  const auto f = PotentialField::random_polynomial(2, 3, 77);
  const Vec X{-0.3, 0.1}, Y{0.9, -0.4}, Z{0.2, 0.8};
  const double ref = oracle::simpson_triangle([&](double t, double s) {
    return exterior_derivative(f, (1 - t - s) * X + t * Y + s * Z).apply(Y - X, Z - X);
  }, 200);
  EXPECT_NEAR(simplex_flux(f, X, Y, Z, 4), ref, 1e-10);
}

TEST(CovariantFtc, ExactCancellations) {
  const SegmentRule r{32, 1};
  EXPECT_EQ(covariant_ftc_residual(PotentialField::zero(2), make_constant(2, {2.0, -1.0}), Vec{0.0, 0.0}, Vec{1.0, 2.0}, r), 0.0);
  const Vec a{0.7, -1.2};
  EXPECT_LE(covariant_ftc_residual(PotentialField::constant(a), make_plane_wave(a), Vec{-1.0, 0.5}, Vec{2.0, 1.0}, r), 1e-10);
}

TEST(CovariantFtc, GaussianBumpLandauField) {
  oracle::Rng rng(15);
  const auto U = make_gaussian(Vec{0.1, -0.2}, 0.5);
  const auto f = PotentialField::landau_plane(2.0);
  for (int k = 0; k < 50; ++k) {
    const Vec X = rand_point(rng, 2), Y = rand_point(rng, 2);
    EXPECT_LE(covariant_ftc_residual(f, U, X, Y, SegmentRule{32, 1}), 1e-8);
  }
}

TEST(CovariantFtc, IntegralAgainstSimpsonOracle) {
  const auto U = make_modulated_bump(Vec{0.0, 0.0}, 1.2, Vec{1.0, 0.5});
  const auto f = PotentialField::random_polynomial(2, 2, 5);
  const Vec X{-0.8, 0.1}, Y{0.7, 0.4};
  const auto integrand = [&](double t) {
    const Vec p = (1 - t) * X + t * Y;
    return phase_factor(oracle_segment(f, X, p)) * apply(covariant_gradient(f, U, p), Y - X);
  };
  const std::complex<double> rhs = oracle::simpson_c(integrand, 0.0, 1.0, 400);
  const std::complex<double> lhs = phase_factor(oracle_segment(f, X, Y)) * U(Y) - U(X);
  EXPECT_LE(std::abs(lhs - rhs), 1e-7);
  EXPECT_LE(covariant_ftc_residual(f, U, X, Y, SegmentRule{32, 1}), 1e-8);
}

TEST(ThreePointGap, DegenerateCases) {
  const auto zeroU = make_constant(2, 0.0);
  const auto g = three_point_gap(PotentialField::landau_plane(), Vec{0.0, 0.0}, Vec{1.0, 0.0}, Vec{0.0, 1.0}, zeroU, SegmentRule{4, 1});
  EXPECT_EQ(g.lhs, 0.0);
  const auto U = make_bump(Vec{0.0, 0.0}, 1.5);
  oracle::Rng rng(16);
  for (int k = 0; k < 50; ++k) {
    const auto h = three_point_gap(PotentialField::zero(2), rand_point(rng, 2), rand_point(rng, 2), rand_point(rng, 2), U, SegmentRule{4, 1});
    EXPECT_LE(h.lhs, h.rhs);
  }
}

TEST(ThreePointGap, LandauFieldRandomTriples) {
  oracle::Rng rng(17);
  const auto U = make_modulated_bump(Vec{0.0, 0.0}, 1.5, Vec{0.3, -0.6});
  const auto f = PotentialField::landau_plane(1.0);
  int violations = 0;
  for (int k = 0; k < 1000; ++k) {
    const auto g = three_point_gap(f, rand_point(rng, 2), rand_point(rng, 2), rand_point(rng, 2), U, SegmentRule{4, 1});
    if (g.lhs > g.rhs * (1 + 1e-8)) ++violations;
  }
  EXPECT_EQ(violations, 0);
}

TEST(ShiftedPotential, Examples) {
  const double beta = 1.5;
  const auto f = PotentialField::landau_halfspace(1, beta);
  for (double h : {-0.7, 0.3, 1.1}) {
    const Vec x{0.2}, y{0.2 + h};
    EXPECT_NEAR(shifted_boundary_potential(f, 2.0, x, y), 2.0 * beta * h * std::abs(h), 1e-14);
    EXPECT_EQ(shifted_boundary_potential(f, 2.0, y, x), -shifted_boundary_potential(f, 2.0, x, y));
  }
  const auto g = PotentialField::random_polynomial(3, 1, 8);
  const Vec x{0.1, 0.2}, y{-0.4, 0.9};
  EXPECT_EQ(shifted_boundary_potential(g, 0.0, x, y), segment_potential(restrict_parallel(g), x, y));
  EXPECT_THROW(shifted_boundary_potential(PotentialField::random_polynomial(2, 2, 3), 1.0, Vec{0.0}, Vec{1.0}), Error);
}
