#pragma once

// Smooth complex test functions with analytic gradients: bumps, modulated
// bumps, Gaussians, plane waves, and half-space products b(x) c(t).

#include <limits>
#include <memory>

#include "magtrace/field.hpp"
#include "magtrace/quadrature.hpp"

namespace magtrace {

struct Function {
  int dim = 0;
  std::function<cplx(const Vec&)> value;
  std::function<CVec(const Vec&)> gradient;
  /// Closed ball outside which the function vanishes (radius = inf if none).
  Vec support_center;
  double support_radius = std::numeric_limits<double>::infinity();

  cplx operator()(const Vec& x) const { return value(x); }
  CVec grad(const Vec& x) const { return gradient(x); }
  bool compact() const { return std::isfinite(support_radius); }
  bool vanishes_at(const Vec& x) const { return compact() && norm(x - support_center) >= support_radius; }
};

namespace detail {

inline double raw_bump_radial_integral(int d) {
  // \int_0^1 rho^{d-1} exp(-1/(1-rho^2)) d rho, composite Gauss
  static const std::array<double, 4> cache = [] {
    std::array<double, 4> r{};
    const NodesWeights g = composite_gauss(16, 64, 0.0, 1.0);
    for (int dd = 1; dd <= 3; ++dd) {
      KahanSum s;
      for (std::size_t i = 0; i < g.x.size(); ++i) {
        const double rho = g.x[i];
        s += g.w[i] * std::pow(rho, dd - 1) * std::exp(-1.0 / (1.0 - rho * rho));
      }
      r[static_cast<std::size_t>(dd)] = s.value();
    }
    return r;
  }();
  return cache[static_cast<std::size_t>(d)];
}

}  // namespace detail

/// \int_{R^d} exp(-1/(1-|x|^2/R^2)) dx
inline double bump_mass(int d, double radius) {
  return sphere_area(d) * std::pow(radius, d) * detail::raw_bump_radial_integral(d);
}

/// c exp(-1/(1-|x-center|^2/radius^2)) inside the ball, 0 outside; c = 1 or
/// the reciprocal mass when `normalized`.
inline Function make_bump(const Vec& center, double radius, bool normalized = false, double amplitude = 1.0) {
  if (!(radius > 0.0)) throw Error("bump radius must be positive", "radius");
  const double c = amplitude * (normalized ? 1.0 / bump_mass(center.n, radius) : 1.0);
  const double r2 = radius * radius;
  Function f;
  f.dim = center.n;
  f.support_center = center;
  f.support_radius = radius;
  f.value = [=](const Vec& x) -> cplx {
    const Vec z = x - center;
    const double q = dot(z, z) / r2;
    return q < 1.0 ? c * std::exp(-1.0 / (1.0 - q)) : 0.0;
  };
  f.gradient = [=](const Vec& x) {
    CVec g(center.n);
    const Vec z = x - center;
    const double q = dot(z, z) / r2;
    if (q >= 1.0) return g;
    const double v = c * std::exp(-1.0 / (1.0 - q));
    const double k = -v / ((1.0 - q) * (1.0 - q)) * 2.0 / r2;
    for (int i = 0; i < center.n; ++i) g[i] = k * z[i];
    return g;
  };
  return f;
}

/// bump(x) e^{i k.x}
inline Function make_modulated_bump(const Vec& center, double radius, const Vec& k, double amplitude = 1.0) {
  Function b = make_bump(center, radius, false, amplitude);
  Function f = b;
  f.value = [b, k](const Vec& x) { return b.value(x) * phase_factor(dot(k, x)); };
  f.gradient = [b, k](const Vec& x) {
    const cplx e = phase_factor(dot(k, x));
    const cplx v = b.value(x);
    CVec g = b.gradient(x);
    for (int i = 0; i < x.n; ++i) g[i] = e * (g[i] + cplx(0.0, k[i]) * v);
    return g;
  };
  return f;
}

/// amplitude exp(-|x-c|^2 / (2 sigma^2))
inline Function make_gaussian(const Vec& center, double sigma, double amplitude = 1.0) {
  if (!(sigma > 0.0)) throw Error("gaussian width must be positive", "sigma");
  Function f;
  f.dim = center.n;
  f.support_center = center;
  f.value = [=](const Vec& x) -> cplx {
    const Vec z = x - center;
    return amplitude * std::exp(-dot(z, z) / (2.0 * sigma * sigma));
  };
  f.gradient = [=](const Vec& x) {
    const Vec z = x - center;
    const double v = amplitude * std::exp(-dot(z, z) / (2.0 * sigma * sigma));
    CVec g(center.n);
    for (int i = 0; i < center.n; ++i) g[i] = -v * z[i] / (sigma * sigma);
    return g;
  };
  return f;
}

inline Function make_constant(int dim, cplx c) {
  Function f;
  f.dim = dim;
  f.support_center = Vec(dim);
  f.value = [c](const Vec&) { return c; };
  f.gradient = [dim](const Vec&) { return CVec(dim); };
  return f;
}

/// amplitude e^{-i a.x}
inline Function make_plane_wave(const Vec& a, cplx amplitude = 1.0) {
  Function f;
  f.dim = a.n;
  f.support_center = Vec(a.n);
  f.value = [=](const Vec& x) { return amplitude * phase_factor(-dot(a, x)); };
  f.gradient = [=](const Vec& x) {
    const cplx v = amplitude * phase_factor(-dot(a, x));
    CVec g(a.n);
    for (int i = 0; i < a.n; ++i) g[i] = cplx(0.0, -a[i]) * v;
    return g;
  };
  return f;
}

/// e^{-i Phi} u
inline Function gauge_multiply(const Function& u, const GaugeFunction& phi) {
  if (u.dim != phi.dimension) throw Error("gauge dimension does not match function", "gauge");
  Function f = u;
  f.value = [u, phi](const Vec& x) { return phase_factor(-phi(x)) * u(x); };
  f.gradient = [u, phi](const Vec& x) {
    const cplx e = phase_factor(-phi(x));
    const cplx v = u(x);
    const Vec gp = phi.gradient(x);
    CVec g = u.grad(x);
    for (int i = 0; i < x.n; ++i) g[i] = e * (g[i] - cplx(0.0, gp[i]) * v);
    return g;
  };
  return f;
}

/// alpha u + beta v
inline Function linear_combination(cplx alpha, const Function& u, cplx beta, const Function& v) {
  if (u.dim != v.dim) throw Error("function dimensions differ", "dimension");
  Function f;
  f.dim = u.dim;
  if (u.compact() && v.compact() && u.support_center == v.support_center) {
    f.support_center = u.support_center;
    f.support_radius = std::max(u.support_radius, v.support_radius);
  } else {
    f.support_center = Vec(u.dim);
  }
  f.value = [=](const Vec& x) { return alpha * u(x) + beta * v(x); };
  f.gradient = [=](const Vec& x) {
    CVec a = u.grad(x), b = v.grad(x), g(x.n);
    for (int i = 0; i < x.n; ++i) g[i] = alpha * a[i] + beta * b[i];
    return g;
  };
  return f;
}

/// Smooth nonincreasing step: 1 on (-inf, a/2], 0 on [a, inf); the transition
/// is the normalized integral of the standard bump.
class SmoothStep {
 public:
  SmoothStep() = default;
  explicit SmoothStep(double a) : a_(a) {
    if (!(a > 0.0)) throw Error("cutoff length must be positive", "a");
  }

  double a() const { return a_; }

  double operator()(double t) const {
    if (t <= a_ / 2) return 1.0;
    if (t >= a_) return 0.0;
    return 1.0 - cumulative((t - a_ / 2) / (a_ / 2));
  }
  double derivative(double t) const {
    if (t <= a_ / 2 || t >= a_) return 0.0;
    return -density((t - a_ / 2) / (a_ / 2)) * 2.0 / a_;
  }
  /// sup |theta'| * a
  static double slope_constant() { return 2.0 * density(0.5); }

 private:
  static double profile(double s) {
    const double z = 2.0 * s - 1.0;
    return std::abs(z) < 1.0 ? std::exp(-1.0 / (1.0 - z * z)) : 0.0;
  }
  static double mass() {
    static const double m = bump_mass(1, 1.0) / 2.0;
    return m;
  }
  static double density(double s) { return profile(s) / mass(); }
  static double cumulative(double s) {
    if (s <= 0.0) return 0.0;
    if (s >= 1.0) return 1.0;
    const bool flip = s > 0.5;
    const double upto = flip ? 1.0 - s : s;
    const NodesWeights g = composite_gauss(16, 4, 0.0, upto);
    KahanSum acc;
    for (std::size_t i = 0; i < g.x.size(); ++i) acc += g.w[i] * profile(g.x[i]);
    const double v = acc.value() / mass();
    return flip ? 1.0 - v : v;
  }

  double a_ = 1.0;
};

/// U(x, t) = b(x) c(t) on R^{d+1}; c given with its derivative.
inline Function product_halfspace(const Function& b, std::function<double(double)> c,
                                  std::function<double(double)> dc, double t_support = std::numeric_limits<double>::infinity()) {
  Function f;
  f.dim = b.dim + 1;
  f.support_center = lift(b.support_center, 0.0);
  f.support_radius = std::hypot(b.support_radius, t_support);
  f.value = [=](const Vec& x) { return b(head(x)) * c(x[x.n - 1]); };
  f.gradient = [=](const Vec& x) {
    const Vec y = head(x);
    const double t = x[x.n - 1];
    const CVec gb = b.grad(y);
    CVec g(x.n);
    for (int i = 0; i < y.n; ++i) g[i] = gb[i] * c(t);
    g[y.n] = b(y) * dc(t);
    return g;
  };
  return f;
}

}  // namespace magtrace
