#include <gtest/gtest.h>

#include "magtrace/trace_extension.hpp"
#include "oracles.hpp"

using namespace magtrace;

namespace {

double raw_bump(double r2) { return r2 < 1 ? std::exp(-1 / (1 - r2)) : 0.0; }

GaugeFunction random_gauge(int n, std::uint64_t seed) {
  return GaugeFunction::from_polynomial(Polynomial::random(n, 3, seed, 0.7));
}

GaugeFunction boundary_gauge(const GaugeFunction& g) { return GaugeFunction::from_polynomial(g.poly->restrict_last()); }

}  // namespace

TEST(ExtensionKernel, MollifierMassAndCutoff) {
  // the discrete mass of the normalized bump against Simpson oracles
  const double m1 = oracle::simpson([](double x) { return raw_bump(x * x); }, -1.0, 1.0, 20000);
  const double m2 = oracle::simpson([](double y) {
    return oracle::simpson([&](double x) { return raw_bump(x * x + y * y); }, -1.0, 1.0, 2000);
  }, -1.0, 1.0, 2000);
  EXPECT_NEAR(bump_mass(1, 1.0), m1, 1e-10);
  EXPECT_NEAR(bump_mass(2, 1.0) / m2, 1.0, 1e-6);
  for (int d : {1, 2}) {
    const ExtensionKernel k(d, 4.0);
    EXPECT_NEAR(k.phi_mass(), 1.0, 1e-8) << d;
    EXPECT_DOUBLE_EQ(k.a(), 0.5);
  }
  const ExtensionKernel k(1, 4.0);
  const SmoothStep& th = k.theta();
  EXPECT_EQ(th(0.0), 1.0);
  EXPECT_EQ(th(0.25), 1.0);
  EXPECT_EQ(th(0.5), 0.0);
  double prev = 1.0, slope = 0.0;
  for (int i = 0; i <= 2000; ++i) {
    const double t = 0.6 * i / 2000.0;
    EXPECT_LE(th(t), prev + 1e-15);
    prev = th(t);
    slope = std::max(slope, std::abs(th.derivative(t)));
    if (i > 0) {
      const double fd = (th(t) - th(t - 0.6 / 2000)) / (0.6 / 2000);
      EXPECT_NEAR(fd, th.derivative(t - 0.3 / 2000), 0.05);
    }
  }
  EXPECT_LE(slope * k.a(), SmoothStep::slope_constant() * (1 + 1e-9));
  EXPECT_LE(SmoothStep::slope_constant(), 6.0);
  EXPECT_THROW(ExtensionKernel(1, 0.0), Error);
}

TEST(ExtendPoint, BoundaryValueAndConstants) {
  const ExtensionKernel k(1, 1.0);
  const auto u = make_modulated_bump(Vec{0.0}, 1.0, Vec{2.0});
  const auto A = PotentialField::landau_halfspace(1, 1.0);
  EXPECT_EQ(extend_point(u, A, k, Vec{0.3}, 0.0), u(Vec{0.3}));
  const auto one = make_constant(1, 1.0);
  for (double t : {0.01, 0.1, 0.45}) EXPECT_NEAR(std::abs(extend_point(one, PotentialField::zero(2), k, Vec{0.2}, t) - 1.0), 0.0, 1e-8);
  const ExtensionKernel k2(2, 1.0);
  EXPECT_NEAR(std::abs(extend_point(make_constant(2, 1.0), PotentialField::zero(3), k2, Vec{0.2, 0.1}, 0.3) - 1.0), 0.0, 1e-8);
  EXPECT_EQ(extend_point(u, A, k, Vec{0.3}, 1.5), cplx(0.0));
  EXPECT_THROW(extend_point(u, A, k, Vec{0.3}, -0.1), Error);
}

TEST(ExtendPoint, GaugeCovariance) {
  for (int d : {1, 2}) {
    const ExtensionKernel k(d, 2.0);
    const auto u = make_modulated_bump(Vec(d), 1.0, d == 1 ? Vec{1.5} : Vec{1.5, -0.5});
    const auto A = PotentialField::random_polynomial(d + 1, 2, 31);
    oracle::Rng rng(40);
    for (std::uint64_t s = 0; s < 5; ++s) {
      const GaugeFunction phi = random_gauge(d + 1, 500 + s);
      const auto gu = gauge_multiply(u, boundary_gauge(phi));
      const auto gA = gauge_transform(A, phi);
      Vec x(d);
      for (int i = 0; i < d; ++i) x[i] = rng.uniform(-0.8, 0.8);
      const double t = rng.uniform(0.01, 0.6);
      const cplx lhs = extend_point(gu, gA, k, x, t);
      const cplx rhs = std::exp(cplx(0, -phi.eval(lift(x, t)))) * extend_point(u, A, k, x, t);
      EXPECT_LE(std::abs(lhs - rhs), 1e-10);
    }
  }
}

TEST(ExtendPoint, Linearity) {
  const ExtensionKernel k(1, 1.0);
  const auto u = make_modulated_bump(Vec{0.0}, 1.0, Vec{2.0});
  const auto v = make_bump(Vec{0.3}, 0.8);
  const cplx alpha(0.3, -1.2);
  const auto w = linear_combination(alpha, u, 1.0, v);
  const auto A = PotentialField::landau_halfspace(1, 1.0);
  for (double t : {0.05, 0.3}) {
    const Vec x{0.1};
    EXPECT_LE(std::abs(extend_point(w, A, k, x, t) - alpha * extend_point(u, A, k, x, t) - extend_point(v, A, k, x, t)), 1e-12);
  }
}

TEST(ExtendPoint, RecoversTheTraceAtFirstOrder) {
  const ExtensionKernel k(1, 1.0);
  const auto u = make_modulated_bump(Vec{0.0}, 1.0, Vec{1.0});
  const auto A = PotentialField::landau_halfspace(1, 3.0);
  const BoundaryGrid g(1, 1.5, 96);
  std::vector<double> ts, errs;
  for (int j = 0; j < 6; ++j) {
    const double t = 0.2 * std::pow(0.5, j);
    double e = 0;
    for (std::size_t i = 0; i < g.size(); ++i) e = std::max(e, std::abs(extend_point(u, A, k, g.point(i), t) - u(g.point(i))));
    ts.push_back(t);
    errs.push_back(e);
  }
  EXPECT_GE(oracle::loglog_slope(ts, errs), 0.9);
}

TEST(ExtendGrid, RowsSupportAndTrace) {
  const ExtensionKernel k(1, 4.0);
  const BoundaryGrid b(1, 2.0, 64);
  const HalfSpaceGrid h(b, 1.0, 40, 0.85, 0.0);
  const auto u = make_modulated_bump(Vec{0.0}, 1.0, Vec{1.0});
  const auto A = PotentialField::landau_halfspace(1, 4.0);
  const GridFunction U = extend_grid(u, A, k, h);
  for (std::size_t i = 0; i < b.size(); ++i) EXPECT_EQ(U.at(0, i), u(b.point(i)));
  for (int r = 0; r < h.rows(); ++r) {
    const double t = h.t[static_cast<std::size_t>(r)];
    for (std::size_t i = 0; i < b.size(); ++i) {
      if (t >= k.a()) {
        EXPECT_EQ(U.at(r, i), cplx(0.0));
      }
      if (std::abs(b.point(i)[0]) > 1.0 + k.a()) {
        EXPECT_EQ(U.at(r, i), cplx(0.0));
      }
    }
  }
  const GridFunction tr = trace(U);
  double err = 0;
  for (std::size_t i = 0; i < b.size(); ++i) err = std::max(err, std::abs(tr.values[i] - u(b.point(i))));
  EXPECT_LE(err, 1e-8);
  EXPECT_THROW(extend_grid(u, A, k, HalfSpaceGrid(b, 0.4, 40, 0.85, 0.0)), Error);
}

TEST(ExtendGrid, WeightedNormStableUnderRefinement) {
  const ExtensionKernel k(1, 1.0);
  const auto u = make_bump(Vec{0.0}, 1.0);
  const auto A = PotentialField::landau_halfspace(1, 1.0);
  std::vector<double> v;
  for (int n : {64, 128}) {
    const HalfSpaceGrid h(BoundaryGrid(1, 2.5, n), 2.0, n, std::pow(1e-3 / 2.0, 1.0 / (n - 1)), 0.0);
    v.push_back(weighted_w1p_norm(extend_grid(u, A, k, h), A, 2.0));
  }
  EXPECT_TRUE(std::isfinite(v[1]));
  EXPECT_NEAR(v[1] / v[0], 1.0, 0.05);
}

TEST(Trace, ConstantsAndExtrapolation) {
  const BoundaryGrid b(1, 1.0, 16);
  const HalfSpaceGrid h(b, 1.0, 20, 0.8, 0.0);
  const auto c = sample(h, make_constant(2, cplx(2.0, 1.0)));
  for (const auto& v : trace(c).values) EXPECT_EQ(v, cplx(2.0, 1.0));
  for (const auto& v : trace_extrapolated(c).values) EXPECT_NEAR(std::abs(v - cplx(2.0, 1.0)), 0.0, 1e-12);

  const auto bump = make_bump(Vec{0.0}, 0.8);
  const auto lin = product_halfspace(bump, [](double t) { return 1 + t; }, [](double) { return 1.0; });
  const auto tl = trace_extrapolated(sample(h, lin));
  for (std::size_t i = 0; i < b.size(); ++i) EXPECT_NEAR(std::abs(tl.values[i] - bump(b.point(i))), 0.0, 1e-12);

  const auto quad = product_halfspace(bump, [](double t) { return 1 + t * t; }, [](double t) { return 2 * t; });
  const auto tq = trace_extrapolated(sample(h, quad));
  const double t1 = h.t[1], t2 = h.t[2];
  for (std::size_t i = 0; i < b.size(); ++i)
    EXPECT_NEAR(std::abs(tq.values[i] - bump(b.point(i))), t1 * t2 * std::abs(bump(b.point(i))), 1e-12);

  auto jump = sample(h, make_constant(2, 1.0));
  for (std::size_t i = 0; i < b.size(); ++i) jump.at(1, i) = 3.0;
  EXPECT_THROW(trace(jump), Error);
}

TEST(WholeSpace, LowerTraceAndZeroData) {
  const ExtensionKernel k(1, 1.0);
  const BoundaryGrid b(1, 2.5, 64);
  const HalfSpaceGrid h(b, 2.0, 48, 0.85, 0.0);
  const auto u = make_modulated_bump(Vec{0.0}, 1.0, Vec{1.0});
  const auto A = PotentialField::landau_halfspace(1, 1.0);
  const GridFunction U = extend_grid(u, A, k, h);
  const TwoSidedFunction W = extend_whole_space(U, A, k);
  double err = 0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    err = std::max(err, std::abs(W.lower.at(0, i) - u(b.point(i))));
    EXPECT_EQ(W.lower.at(0, i), W.upper.at(0, i));
  }
  EXPECT_LE(err, 1e-8);
  const double one = weighted_energy(U, A, 2.0).total();
  const double two = weighted_energy(W, A, 2.0).total();
  EXPECT_GT(two, one);
  EXPECT_LE(two / one, 20.0);

  const GridFunction Z = GridFunction::halfspace(h);
  const TwoSidedFunction WZ = extend_whole_space(Z, A, k);
  for (const auto& v : WZ.lower.values) EXPECT_EQ(v, cplx(0.0));
}

TEST(Reflection, InvariantFieldsAreComparable) {
  const double beta = 4.0;
  const ExtensionKernel k(1, beta);
  const BoundaryGrid b(1, 2.5, 96);
  const HalfSpaceGrid h(b, 1.0, 64, 0.88, 0.0);
  const auto u = make_bump(Vec{0.0}, 1.0);
  // A(x, t) = (beta t^2, 0) is reflection invariant
  Polynomial a1(2);
  a1.add({0, 2, 0}, beta);
  const auto A = PotentialField::from_polynomials({a1, Polynomial(2)});
  const GridFunction U = extend_grid(u, A, k, h);
  const double phase = weighted_energy(extend_whole_space(U, A, k), A, 2.0).total();
  const double refl = weighted_energy(reflection_extension(U), A, 2.0).total();
  EXPECT_LE(std::max(phase / refl, refl / phase), 2.0);
  const auto Z = reflection_extension(GridFunction::halfspace(h));
  for (const auto& v : Z.lower.values) EXPECT_EQ(v, cplx(0.0));
}

TEST(Reflection, OddLandauFieldPenalizesReflection) {
  for (double beta : {4.0, 16.0}) {
    const ExtensionKernel k(1, beta);
    const BoundaryGrid b(1, 2.5, 96);
    const HalfSpaceGrid h(b, 1.0, 64, 0.88, 0.0);
    const auto u = make_bump(Vec{0.0}, 1.0);
    const auto A = PotentialField::landau_halfspace(1, beta);
    const GridFunction U = extend_grid(u, A, k, h);
    const double phase = weighted_energy(extend_whole_space(U, A, k), A, 2.0).total();
    const double refl = weighted_energy(reflection_extension(U), A, 2.0).total();
    EXPECT_LT(phase, refl) << beta;
  }
}
