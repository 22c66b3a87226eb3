#pragma once

// Charts, pulled-back potentials and geodesic phases on round spheres.

#include <numbers>

#include "magtrace/inequality_lab.hpp"

namespace magtrace {

/// psi: chart domain (a ball in R^k) -> R^n. Flat diffeos have k = n; the
/// sphere charts map a ball in R^k onto a cap of the radius-R sphere in
/// R^{k+1}.
struct ChartMap {
  enum class Kind { flat_diffeo, stereographic_sphere, circle };

  Kind kind = Kind::flat_diffeo;
  int dim = 0;
  int ambient = 0;
  std::function<Vec(const Vec&)> forward;
  /// rows = ambient, cols = dim
  std::function<Mat(const Vec&)> differential;
  double radius = 0.0;
  double injectivity_radius = std::numeric_limits<double>::infinity();
  /// chart domain is the closed ball |x| <= domain_radius
  double domain_radius = std::numeric_limits<double>::infinity();

  bool contains(const Vec& x) const { return x.n == dim && norm(x) <= domain_radius * (1 + 1e-12); }
  void check(const Vec& x) const {
    if (x.n != dim) throw Error("point dimension does not match chart", "x");
    if (!contains(x)) throw Error("point outside the chart domain", "x");
  }
  Vec operator()(const Vec& x) const {
    check(x);
    return forward(x);
  }
  Mat jacobian(const Vec& x) const {
    check(x);
    return differential(x);
  }
  bool on_sphere() const { return kind != Kind::flat_diffeo; }

  static ChartMap identity(int n) { return linear(Mat::identity(n), Vec(n)); }

  /// psi(x) = M x + b; M must be invertible.
  static ChartMap linear(const Mat& m, const Vec& b) {
    if (m.rows != m.cols || m.rows != b.n) throw Error("linear chart needs a square matrix", "chart");
    double det = m.rows == 1 ? m(0, 0)
                 : m.rows == 2 ? m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0)
                               : m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) -
                                     m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
                                     m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
    if (std::abs(det) < 1e-12) throw Error("linear chart must be invertible", "chart");
    ChartMap c;
    c.dim = c.ambient = m.rows;
    c.forward = [m, b](const Vec& x) { return m * x + b; };
    c.differential = [m](const Vec&) { return m; };
    return c;
  }

  /// psi(x) = x + k x_0^2 e_last: a global diffeo of R^n, n >= 2.
  static ChartMap quadratic(int n, double k) {
    if (n < 2 || n > kMaxDim) throw Error("quadratic chart needs 2 <= n <= 3", "chart");
    ChartMap c;
    c.dim = c.ambient = n;
    c.forward = [n, k](const Vec& x) {
      Vec y = x;
      y[n - 1] += k * x[0] * x[0];
      return y;
    };
    c.differential = [n, k](const Vec& x) {
      Mat m = Mat::identity(n);
      m(n - 1, 0) = 2 * k * x[0];
      return m;
    };
    return c;
  }

  static ChartMap custom(int n, std::function<Vec(const Vec&)> f, std::function<Mat(const Vec&)> df,
                         double domain = std::numeric_limits<double>::infinity()) {
    ChartMap c;
    c.dim = c.ambient = n;
    c.forward = std::move(f);
    c.differential = std::move(df);
    c.domain_radius = domain;
    return c;
  }

  /// Inverse stereographic projection onto the sphere of radius R, centred
  /// on the unit direction `center`:
  ///   psi(w) = R (2 om_1 e_1 + 2 om_2 e_2 + (1 - |om|^2) c) / (1 + |om|^2),
  ///   om = w / (2R),
  /// so Dpsi(0) is an isometry. The domain is the cap of angular radius `cap`.
  static ChartMap stereographic(double R = 1.0, Vec center = Vec{0.0, 0.0, 1.0},
                                double cap = std::numbers::pi / 3) {
    if (!(R > 0.0)) throw Error("sphere radius must be positive", "radius");
    if (center.n != 3 || !(norm(center) > 0.0)) throw Error("sphere chart centre must be a nonzero 3-vector", "center");
    if (!(cap > 0.0) || !(cap < std::numbers::pi)) throw Error("cap angle must lie in (0, pi)", "cap");
    center = (1.0 / norm(center)) * center;
    int ax = 0;
    for (int i = 1; i < 3; ++i)
      if (std::abs(center[i]) < std::abs(center[ax])) ax = i;
    Vec e1 = Vec::unit(3, ax);
    e1 = e1 - dot(e1, center) * center;
    e1 = (1.0 / norm(e1)) * e1;
    const Vec e2{center[1] * e1[2] - center[2] * e1[1], center[2] * e1[0] - center[0] * e1[2],
                 center[0] * e1[1] - center[1] * e1[0]};
    ChartMap c;
    c.kind = Kind::stereographic_sphere;
    c.dim = 2;
    c.ambient = 3;
    c.radius = R;
    c.injectivity_radius = std::numbers::pi * R;
    c.domain_radius = 2 * R * std::tan(cap / 2);
    c.forward = [=](const Vec& w) {
      const double o1 = w[0] / (2 * R), o2 = w[1] / (2 * R);
      const double q = o1 * o1 + o2 * o2;
      return (R / (1 + q)) * (2 * o1 * e1 + 2 * o2 * e2 + (1 - q) * center);
    };
    c.differential = [=](const Vec& w) {
      const double o[2] = {w[0] / (2 * R), w[1] / (2 * R)};
      const double q = o[0] * o[0] + o[1] * o[1];
      const double a = 1 / (1 + q), b = a * a;
      Mat m(3, 2);
      for (int j = 0; j < 2; ++j) {
        // d/dw_j of the (e_1, e_2, c) coordinates
        const double d1 = (j == 0 ? a : 0.0) - 2 * o[0] * o[j] * b;
        const double d2 = (j == 1 ? a : 0.0) - 2 * o[1] * o[j] * b;
        const double d3 = -2 * o[j] * b;
        for (int i = 0; i < 3; ++i) m(i, j) = d1 * e1[i] + d2 * e2[i] + d3 * center[i];
      }
      return m;
    };
    return c;
  }

  /// Arc-length chart of the circle of radius R: psi(w) = R(cos, sin)(phi0 + w/R).
  static ChartMap circle(double R = 1.0, double phi0 = 0.0, double cap = std::numbers::pi / 3) {
    if (!(R > 0.0)) throw Error("circle radius must be positive", "radius");
    ChartMap c;
    c.kind = Kind::circle;
    c.dim = 1;
    c.ambient = 2;
    c.radius = R;
    c.injectivity_radius = std::numbers::pi * R;
    c.domain_radius = R * cap;
    c.forward = [R, phi0](const Vec& w) {
      const double a = phi0 + w[0] / R;
      return Vec{R * std::cos(a), R * std::sin(a)};
    };
    c.differential = [R, phi0](const Vec& w) {
      const double a = phi0 + w[0] / R;
      Mat m(2, 1);
      m(0, 0) = -std::sin(a);
      m(1, 0) = std::cos(a);
      return m;
    };
    return c;
  }
};

/// (psi^* A)(x) = Dpsi(x)^T A(psi(x)).
inline PotentialField pullback_potential(const ChartMap& chart, const PotentialField& field) {
  if (!chart.differential) throw Error("chart has no differential", "chart");
  if (field.dimension != chart.ambient) throw Error("field dimension does not match chart target", "field");
  return PotentialField::custom(chart.dim, [chart, field](const Vec& x) {
    chart.check(x);
    return chart.differential(x).transpose() * field.eval_fn(chart.forward(x));
  });
}

/// |grad_{psi^*A}(U o psi)(x) - Dpsi(x)^T (grad_A U)(psi(x))|, the left side
/// by central differences of step h.
inline double chain_rule_residual(const ChartMap& chart, const PotentialField& field, const Function& U, const Vec& x,
                                  double h) {
  if (chart.kind != ChartMap::Kind::flat_diffeo) throw Error("chain rule check needs a flat chart", "chart");
  if (!(h > 0.0)) throw Error("step must be positive", "h");
  const PotentialField pa = pullback_potential(chart, field);
  const Vec y = chart(x);
  const cplx v = U(y);
  const Vec a = pa(x);
  CVec rhs(chart.ambient);
  {
    const CVec g = covariant_gradient(field, U, y);
    const Mat m = chart.jacobian(x);
    for (int j = 0; j < chart.dim; ++j) {
      cplx s = 0.0;
      for (int i = 0; i < chart.ambient; ++i) s += m(i, j) * g[i];
      rhs[j] = s;
    }
  }
  double r2 = 0.0;
  for (int j = 0; j < chart.dim; ++j) {
    const Vec e = Vec::unit(chart.dim, j);
    const cplx dv = (U(chart(x + h * e)) - U(chart(x - h * e))) / (2 * h);
    r2 += std::norm(dv + cplx(0.0, a[j]) * v - rhs[j]);
  }
  return std::sqrt(r2);
}

/// A - (A.nu) nu with nu = z/|z|: the part of an ambient field tangent to
/// spheres about the origin.
inline PotentialField tangential_part(const PotentialField& field) {
  return PotentialField::custom(field.dimension, [field](const Vec& z) {
    const double r = norm(z);
    if (r == 0.0) throw Error("tangential part is undefined at the origin", "z");
    const Vec nu = (1.0 / r) * z;
    const Vec a = field.eval_fn(z);
    return a - dot(a, nu) * nu;
  });
}

/// Tangential field on spheres in R^3 from spherical components,
/// A = a_theta e_theta + a_phi e_phi with theta the polar angle from +z.
inline PotentialField spherical_field(std::function<double(double, double)> a_theta,
                                      std::function<double(double, double)> a_phi) {
  return PotentialField::custom(3, [a_theta, a_phi](const Vec& z) {
    const double rho = std::hypot(z[0], z[1]);
    if (rho == 0.0) throw Error("spherical components are singular on the polar axis", "z");
    const double th = std::atan2(rho, z[2]);
    const double ph = std::atan2(z[1], z[0]);
    const double ct = std::cos(th), st = std::sin(th), cp = std::cos(ph), sp = std::sin(ph);
    const double f = a_theta(th, ph), g = a_phi(th, ph);
    return Vec{f * ct * cp - g * sp, f * ct * sp + g * cp, -f * st};
  });
}

/// \int_0^1 A(gamma(t)).gamma'(t) dt along the minimizing great-circle arc
/// from P to Q (slerp), both on the sphere |z| = R about the origin.
inline double geodesic_potential(const PotentialField& field, const Vec& P, const Vec& Q, const SegmentRule& rule = {}) {
  if (P.n != field.dimension || Q.n != field.dimension) throw Error("point dimension does not match field", "dimension");
  const double R = norm(P);
  if (!(R > 0.0) || std::abs(norm(Q) - R) > 1e-9 * R) throw Error("endpoints must lie on one sphere", "y");
  const Vec p = (1.0 / R) * P, q = (1.0 / R) * Q;
  const double omega = std::atan2(norm(p - dot(p, q) * q), dot(p, q));
  if (omega == 0.0) return 0.0;
  if (omega > std::numbers::pi - 1e-9) throw Error("antipodal points have no unique geodesic", "y");
  const double so = std::sin(omega);
  const NodesWeights g = composite_gauss(rule.order, rule.panels, 0.0, 1.0);
  KahanSum s;
  for (std::size_t k = 0; k < g.x.size(); ++k) {
    const double t = g.x[k];
    const Vec z = (R / so) * (std::sin((1 - t) * omega) * p + std::sin(t * omega) * q);
    const Vec dz = (R * omega / so) * (-std::cos((1 - t) * omega) * p + std::cos(t * omega) * q);
    s += g.w[k] * dot(field.eval_fn(z), dz);
  }
  return s.value();
}

inline double geodesic_potential(const ChartMap& chart, const PotentialField& field, const Vec& x, const Vec& y,
                                 const SegmentRule& rule = {}) {
  if (!chart.on_sphere()) throw Error("geodesic potential needs a sphere chart", "chart");
  return geodesic_potential(field, chart(x), chart(y), rule);
}

/// |I_{psi^*A}(x, y) - I^{sphere}_A(psi x, psi y)|.
inline double transport_gap(const ChartMap& chart, const PotentialField& field, const Vec& x, const Vec& y,
                            const SegmentRule& rule = {}) {
  const double geo = geodesic_potential(chart, field, x, y, rule);
  return std::abs(segment_potential(pullback_potential(chart, field), x, y, rule) - geo);
}

/// Gap along y = x + h dir for each h; slope of log gap against log h.
inline SlopeReport transport_law(const ChartMap& chart, const PotentialField& field, const Vec& x, Vec dir,
                                 const std::vector<double>& distances, const SegmentRule& rule = {}) {
  if (!(norm(dir) > 0.0)) throw Error("direction must be nonzero", "direction");
  dir = (1.0 / norm(dir)) * dir;
  std::vector<std::pair<double, double>> pts;
  double max_gap = 0.0;
  for (double h : distances) {
    if (!(h > 0.0)) throw Error("distances must be positive", "scales");
    const double g = transport_gap(chart, field, x, x + h * dir, rule);
    max_gap = std::max(max_gap, g);
    pts.emplace_back(h, g);
  }
  SlopeReport r;
  if (max_gap <= 1e-10) {
    if (distances.size() < 4) throw Error("slope fit needs at least 4 points", "scales");
    r.zero_data = true;
    for (const auto& [h, g] : pts) r.points.emplace_back(std::log(h), g > 0.0 ? std::log(g) : -std::numeric_limits<double>::infinity());
  } else {
    r = loglog_slope(pts);
  }
  r.label = "transport_gap";
  r.min_slope = 2.85;
  r.min_r_squared = 0.9;
  r.params["max_gap"] = max_gap;
  return r;
}

}  // namespace magtrace
