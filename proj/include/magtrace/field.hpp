#pragma once

// Vector potentials A, their exterior derivatives dA, and gauge changes
// A -> A + grad(Phi).

#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "magtrace/polynomial.hpp"

namespace magtrace {

/// Antisymmetric matrix w_ij = d_i A_j - d_j A_i.
struct TwoForm {
  Mat components;

  int dim() const { return components.rows; }
  double operator()(int i, int j) const { return components(i, j); }
  /// Max-entry norm.
  double norm() const { return components.max_abs(); }
  /// w[v, u] = sum_ij w_ij v_i u_j
  double apply(const Vec& v, const Vec& u) const {
    double s = 0.0;
    for (int i = 0; i < dim(); ++i)
      for (int j = 0; j < dim(); ++j) s += components(i, j) * v[i] * u[j];
    return s;
  }
};

/// Real phase Phi with its gradient.
struct GaugeFunction {
  int dimension = 0;
  std::function<double(const Vec&)> eval;
  std::function<Vec(const Vec&)> gradient;
  std::optional<Polynomial> poly;

  double operator()(const Vec& x) const { return eval(x); }

  static GaugeFunction from_polynomial(const Polynomial& p) {
    auto shared = std::make_shared<Polynomial>(p);
    return {p.dim(), [shared](const Vec& x) { return (*shared)(x); },
            [shared](const Vec& x) { return shared->gradient(x); }, p};
  }
  static GaugeFunction random(int dim, int degree, std::uint64_t seed, double scale = 1.0) {
    return from_polynomial(Polynomial::random(dim, degree, seed, scale));
  }
};

namespace detail {

struct FlatTerm {
  MultiIndex e;
  double c;
};

/// Polynomial components flattened for the hot evaluation loops.
struct FlatPoly {
  std::vector<std::vector<FlatTerm>> comps;
  int dim = 0;

  explicit FlatPoly(const std::vector<Polynomial>& ps) : dim(ps.empty() ? 0 : ps[0].dim()) {
    for (const auto& p : ps) {
      std::vector<FlatTerm> v;
      for (const auto& [e, c] : p.terms()) v.push_back({e, c});
      comps.push_back(std::move(v));
    }
  }
  /// Writes component values to out[0 .. comps.size()).
  void eval_into(const Vec& x, double* out) const {
    std::array<std::array<double, 8>, kMaxDim> pw{};
    for (int i = 0; i < dim; ++i) {
      pw[i][0] = 1.0;
      for (int k = 1; k < 8; ++k) pw[i][k] = pw[i][k - 1] * x[i];
    }
    for (std::size_t a = 0; a < comps.size(); ++a) {
      double s = 0.0;
      for (const auto& t : comps[a]) {
        double m = t.c;
        for (int i = 0; i < dim; ++i) {
          const int k = t.e[static_cast<std::size_t>(i)];
          if (k < 8)
            m *= pw[i][k];
          else
            m *= std::pow(x[i], k);
        }
        s += m;
      }
      out[a] = s;
    }
  }
  Vec operator()(const Vec& x) const {
    Vec r(static_cast<int>(comps.size()));
    eval_into(x, r.c.data());
    return r;
  }
};

}  // namespace detail

/// Vector potential on R^n. Polynomial-backed kinds keep their coefficient
/// tables so exact quadrature orders and analytic Jacobians are available.
struct PotentialField {
  enum class Kind { zero, constant, landau, polynomial, custom };

  int dimension = 0;
  Kind kind = Kind::zero;
  std::function<Vec(const Vec&)> eval_fn;
  /// J(i, j) = d_j A_i
  std::function<Mat(const Vec&)> jacobian_fn;
  std::vector<Polynomial> components;

  Vec operator()(const Vec& x) const {
    if (x.n != dimension) throw Error("point dimension does not match field", "dimension");
    return eval_fn(x);
  }
  bool has_jacobian() const { return static_cast<bool>(jacobian_fn); }
  bool is_polynomial() const { return !components.empty(); }
  /// Total degree of the polynomial representation, or -1 when unknown.
  int degree() const {
    if (!is_polynomial()) return -1;
    int d = 0;
    for (const auto& c : components) d = std::max(d, c.degree());
    return d;
  }
  Mat jacobian(const Vec& x) const {
    if (!jacobian_fn) throw Error("field has no analytic jacobian", "jacobian");
    return jacobian_fn(x);
  }

  std::string kind_name() const {
    switch (kind) {
      case Kind::zero: return "zero";
      case Kind::constant: return "constant";
      case Kind::landau: return "landau";
      case Kind::polynomial: return "polynomial";
      default: return "custom";
    }
  }

  static PotentialField from_polynomials(std::vector<Polynomial> comps, Kind kind = Kind::polynomial) {
    if (comps.empty()) throw Error("field needs at least one component", "field");
    const int n = static_cast<int>(comps.size());
    for (auto& c : comps) {
      if (c.dim() == 0) c = Polynomial(n);
      if (c.dim() != n) throw Error("field components must live on R^n with n components", "field");
    }
    auto flat = std::make_shared<detail::FlatPoly>(comps);
    std::vector<std::vector<Polynomial>> dcomp(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) dcomp[static_cast<std::size_t>(i)].push_back(comps[static_cast<std::size_t>(i)].derivative(j));
    std::vector<Polynomial> dflat_src;
    for (auto& row : dcomp)
      for (auto& p : row) dflat_src.push_back(p);
    auto dflat = std::make_shared<detail::FlatPoly>(dflat_src);
    PotentialField f;
    f.dimension = n;
    f.kind = kind;
    f.components = std::move(comps);
    f.eval_fn = [flat](const Vec& x) { return (*flat)(x); };
    f.jacobian_fn = [dflat, n](const Vec& x) {
      std::array<double, kMaxDim * kMaxDim> v{};
      dflat->eval_into(x, v.data());
      Mat m(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = v[static_cast<std::size_t>(i * n + j)];
      return m;
    };
    return f;
  }

  static PotentialField zero(int n) {
    return from_polynomials(std::vector<Polynomial>(static_cast<std::size_t>(n), Polynomial(n)), Kind::zero);
  }
  static PotentialField constant(const Vec& a) {
    std::vector<Polynomial> c;
    for (int i = 0; i < a.n; ++i) c.push_back(Polynomial::constant(a.n, a[i]));
    return from_polynomials(std::move(c), Kind::constant);
  }
  /// Linear field A_i(x) = sum_j M_ij x_j; dA is constant.
  static PotentialField linear(const Mat& m, Kind kind = Kind::landau) {
    std::vector<Polynomial> c;
    for (int i = 0; i < m.rows; ++i) {
      Vec row(m.cols);
      for (int j = 0; j < m.cols; ++j) row[j] = m(i, j);
      c.push_back(Polynomial::linear(row));
    }
    return from_polynomials(std::move(c), kind);
  }
  /// A = (0, x_1) on R^2.
  static PotentialField landau_plane(double beta = 1.0) {
    Mat m(2, 2);
    m(1, 0) = beta;
    return linear(m);
  }
  /// Half-space Landau gauge on R^{d+1}: A = (-beta t, 0, .., 0), dA_{1,d+1} = beta.
  static PotentialField landau_halfspace(int d, double beta) {
    Mat m(d + 1, d + 1);
    m(0, d) = -beta;
    return linear(m);
  }
  /// Symmetric gauge on R^2 about `c`: A = beta/2 (-(x_2 - c_2), x_1 - c_1), dA_12 = beta.
  static PotentialField symmetric_gauge(double beta, const Vec& c = Vec{0.0, 0.0}) {
    std::vector<Polynomial> comps;
    comps.push_back(Polynomial::linear(Vec{0.0, -beta / 2}, beta / 2 * c[1]));
    comps.push_back(Polynomial::linear(Vec{beta / 2, 0.0}, -beta / 2 * c[0]));
    return from_polynomials(std::move(comps), Kind::landau);
  }
  static PotentialField random_polynomial(int n, int degree, std::uint64_t seed, double scale = 1.0) {
    std::vector<Polynomial> c;
    for (int i = 0; i < n; ++i) c.push_back(Polynomial::random(n, degree, seed * 7919 + static_cast<std::uint64_t>(i), scale));
    return from_polynomials(std::move(c));
  }
  static PotentialField custom(int n, std::function<Vec(const Vec&)> eval,
                               std::function<Mat(const Vec&)> jac = {}) {
    PotentialField f;
    f.dimension = n;
    f.kind = Kind::custom;
    f.eval_fn = std::move(eval);
    f.jacobian_fn = std::move(jac);
    return f;
  }
};

inline Vec eval_potential(const PotentialField& field, const Vec& x) { return field(x); }

inline TwoForm two_form_from_jacobian(const Mat& j) {
  TwoForm w{Mat(j.rows, j.cols)};
  for (int a = 0; a < j.rows; ++a)
    for (int b = 0; b < j.cols; ++b) w.components(a, b) = j(b, a) - j(a, b);
  return w;
}

/// Central-difference Jacobian with step h; throws on non-finite samples.
inline Mat jacobian_fd(const PotentialField& field, const Vec& x, double h) {
  Mat m(field.dimension, field.dimension);
  for (int j = 0; j < field.dimension; ++j) {
    const Vec e = Vec::unit(field.dimension, j) * h;
    const Vec fp = field(x + e);
    const Vec fm = field(x - e);
    for (int i = 0; i < field.dimension; ++i) {
      const double v = (fp[i] - fm[i]) / (2.0 * h);
      if (!std::isfinite(v)) throw Error("non-finite field value in finite-difference stencil", "field");
      m(i, j) = v;
    }
  }
  return m;
}

/// dA at x: analytic when the field has a Jacobian and no step is given,
/// central differences with step *h otherwise.
inline TwoForm exterior_derivative(const PotentialField& field, const Vec& x, std::optional<double> h = std::nullopt) {
  if (x.n != field.dimension) throw Error("point dimension does not match field", "dimension");
  if (!h && field.has_jacobian()) return two_form_from_jacobian(field.jacobian(x));
  if (!h) throw Error("field has no analytic jacobian; a finite-difference step is required", "h");
  return two_form_from_jacobian(jacobian_fd(field, x, *h));
}

/// A + grad(Phi). Polynomial inputs stay polynomial.
inline PotentialField gauge_transform(const PotentialField& field, const GaugeFunction& gauge) {
  if (field.dimension != gauge.dimension) throw Error("gauge dimension does not match field", "gauge");
  if (field.is_polynomial() && gauge.poly) {
    std::vector<Polynomial> comps;
    for (int i = 0; i < field.dimension; ++i)
      comps.push_back(field.components[static_cast<std::size_t>(i)] + gauge.poly->derivative(i));
    return PotentialField::from_polynomials(std::move(comps));
  }
  auto grad = gauge.gradient;
  auto f = field.eval_fn;
  std::function<Mat(const Vec&)> jac;
  if (field.jacobian_fn && gauge.poly) {
    auto fj = field.jacobian_fn;
    auto phi = std::make_shared<Polynomial>(*gauge.poly);
    jac = [fj, phi](const Vec& x) {
      Mat m = fj(x);
      for (int i = 0; i < m.rows; ++i) {
        const Vec gi = phi->derivative(i).gradient(x);
        for (int j = 0; j < m.cols; ++j) m(i, j) += gi[j];
      }
      return m;
    };
  }
  return PotentialField::custom(field.dimension, [f, grad](const Vec& x) { return f(x) + grad(x); }, jac);
}

/// Max of |dA|_max over a samples^n lattice on the box (analytic path when
/// available, else central differences with h = 1e-4 * diameter).
inline double sup_norm_dA(const PotentialField& field, const Box& box, int samples) {
  if (box.empty()) throw Error("empty box", "box");
  if (samples < 2) throw Error("need at least 2 samples per axis", "samples");
  if (box.dim() != field.dimension) throw Error("box dimension does not match field", "box");
  const int n = field.dimension;
  std::optional<double> h;
  if (!field.has_jacobian()) h = 1e-4 * box.diameter();
  std::size_t total = 1;
  for (int i = 0; i < n; ++i) total *= static_cast<std::size_t>(samples);
  double best = 0.0;
  for (std::size_t k = 0; k < total; ++k) {
    Vec x(n);
    std::size_t r = k;
    for (int i = 0; i < n; ++i) {
      const auto idx = static_cast<double>(r % static_cast<std::size_t>(samples));
      r /= static_cast<std::size_t>(samples);
      x[i] = box.lo[i] + (box.hi[i] - box.lo[i]) * idx / (samples - 1);
    }
    best = std::max(best, exterior_derivative(field, x, h).norm());
  }
  return best;
}

/// Boundary potential A^par(x) = (A_1, .., A_d)(x, 0) on R^d.
inline PotentialField restrict_parallel(const PotentialField& field) {
  const int d = field.dimension - 1;
  if (d < 1) throw Error("restriction needs ambient dimension >= 2", "dimension");
  if (field.is_polynomial()) {
    std::vector<Polynomial> comps;
    for (int i = 0; i < d; ++i) comps.push_back(field.components[static_cast<std::size_t>(i)].restrict_last());
    auto r = PotentialField::from_polynomials(std::move(comps));
    if (field.kind == PotentialField::Kind::zero || field.kind == PotentialField::Kind::constant) r.kind = field.kind;
    return r;
  }
  auto f = field.eval_fn;
  return PotentialField::custom(d, [f, d](const Vec& x) { return head(f(lift(x, 0.0))); });
}

/// Reflected field (A_1, .., A_d, -A_{d+1})(x, -t); describes the lower
/// half-space in upper-half-space coordinates.
inline PotentialField reflect_field(const PotentialField& field) {
  const int n = field.dimension;
  if (field.is_polynomial()) {
    std::vector<Polynomial> comps;
    for (int i = 0; i < n; ++i) {
      Polynomial c = field.components[static_cast<std::size_t>(i)].reflect_last();
      comps.push_back(i == n - 1 ? c.scaled(-1.0) : c);
    }
    auto r = PotentialField::from_polynomials(std::move(comps));
    r.kind = field.kind;
    return r;
  }
  auto f = field.eval_fn;
  return PotentialField::custom(n, [f, n](const Vec& x) {
    Vec y = x;
    y[n - 1] = -y[n - 1];
    Vec a = f(y);
    a[n - 1] = -a[n - 1];
    return a;
  });
}

/// Scaled field lambda * A.
inline PotentialField scale_field(const PotentialField& field, double lambda) {
  if (field.is_polynomial()) {
    std::vector<Polynomial> comps;
    for (const auto& c : field.components) comps.push_back(c.scaled(lambda));
    auto r = PotentialField::from_polynomials(std::move(comps));
    r.kind = field.kind;
    return r;
  }
  auto f = field.eval_fn;
  auto j = field.jacobian_fn;
  std::function<Mat(const Vec&)> jac;
  if (j)
    jac = [j, lambda](const Vec& x) {
      Mat m = j(x);
      for (int a = 0; a < m.rows; ++a)
        for (int b = 0; b < m.cols; ++b) m(a, b) *= lambda;
      return m;
    };
  return PotentialField::custom(field.dimension, [f, lambda](const Vec& x) { return lambda * f(x); }, jac);
}

/// True when dA agrees (to `tol` relative) at a handful of points of the box.
inline bool has_constant_dA(const PotentialField& field, const Box& box, double tol = 1e-9) {
  const int n = field.dimension;
  std::optional<double> h;
  if (!field.has_jacobian()) h = 1e-4 * box.diameter();
  const TwoForm ref = exterior_derivative(field, box.lo + 0.5 * (box.hi - box.lo), h);
  const double scale = std::max(1.0, ref.norm());
  for (int k = 0; k < 7; ++k) {
    Vec x(n);
    for (int i = 0; i < n; ++i) x[i] = box.lo[i] + (box.hi[i] - box.lo[i]) * counter_uniform(17, static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(i));
    const TwoForm w = exterior_derivative(field, x, h);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        if (std::abs(w(a, b) - ref(a, b)) > tol * scale) return false;
  }
  return true;
}

}  // namespace magtrace
