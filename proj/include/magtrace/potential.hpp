#pragma once

// Line-integral phases I_A(X, Y) = \int_0^1 A((1-t)X + tY).(Y - X) dt, their
// measure-weighted variants, and residuals of the identities they satisfy.

#include <utility>

#include "magtrace/function.hpp"

namespace magtrace {

/// Default rule for a field: exact single-panel Gauss for polynomials,
/// order 16 otherwise.
inline SegmentRule default_rule(const PotentialField& field) {
  const int deg = field.degree();
  if (deg >= 0) return SegmentRule::exact_for_degree(deg);
  return SegmentRule{};
}

/// Quadrature of I_A(X, Y). Nodes are visited as mirrored pairs so that
/// segment_potential(Y, X) == -segment_potential(X, Y) bit-for-bit.
inline double segment_potential(const PotentialField& field, const Vec& X, const Vec& Y, const SegmentRule& rule) {
  if (X.n != field.dimension || Y.n != field.dimension) throw Error("point dimension does not match field", "dimension");
  const MirroredNodes& m = mirrored_nodes(rule);
  const Vec d = Y - X;
  double s = 0.0;
  for (std::size_t k = 0; k < m.t.size(); ++k) {
    const double b = m.t[k];
    const double a = 1.0 - b;
    const Vec p = a * X + b * Y;
    const Vec q = b * X + a * Y;
    s += m.w[k] * dot(field.eval_fn(p) + field.eval_fn(q), d);
  }
  if (m.has_center) s += m.center_weight * dot(field.eval_fn(0.5 * X + 0.5 * Y), d);
  return s;
}

inline double segment_potential(const PotentialField& field, const Vec& X, const Vec& Y) {
  return segment_potential(field, X, Y, default_rule(field));
}

/// Doubles the panel count until two successive values differ by less than
/// `rel_tol` (relative, with an absolute floor of rel_tol).
inline double segment_potential_adaptive(const PotentialField& field, const Vec& X, const Vec& Y,
                                         SegmentRule rule = {}, double rel_tol = 1e-12, int max_doublings = 12) {
  double prev = segment_potential(field, X, Y, rule);
  for (int k = 0; k < max_doublings; ++k) {
    rule.panels *= 2;
    const double next = segment_potential(field, X, Y, rule);
    if (std::abs(next - prev) <= rel_tol * std::max(1.0, std::abs(next))) return next;
    prev = next;
  }
  return prev;
}

/// I^mu_A(x, y) = \int A((1-t)x + ty).(y - x) dmu(t).
inline double measure_potential(const PotentialField& field, const QuadratureMeasure& mu, const Vec& x, const Vec& y,
                                const SegmentRule& rule) {
  if (mu.atoms.empty() && mu.continuous_weight == 1.0) return segment_potential(field, x, y, rule);
  const Vec d = y - x;
  double s = 0.0;
  for (const auto& atom : mu.atoms) s += atom.weight * dot(field((1.0 - atom.node) * x + atom.node * y), d);
  if (mu.continuous_weight != 0.0) s += mu.continuous_weight * segment_potential(field, x, y, rule);
  return s;
}

inline double measure_potential(const PotentialField& field, const QuadratureMeasure& mu, const Vec& x, const Vec& y) {
  return measure_potential(field, mu, x, y, default_rule(field));
}

/// \iint_{0<=s<=1, 0<=t<=1-s} dA((1-t-s)X + tY + sZ)[Y - X, Z - X] dt ds.
inline double simplex_flux(const PotentialField& field, const Vec& X, const Vec& Y, const Vec& Z, int order) {
  const SimplexRule r = simplex_rule(order);
  std::optional<double> h;
  if (!field.has_jacobian()) h = 1e-4 * std::max({norm(Y - X), norm(Z - X), 1e-3});
  const Vec v = Y - X;
  const Vec w = Z - X;
  KahanSum acc;
  for (std::size_t k = 0; k < r.w.size(); ++k) {
    const Vec p = (1.0 - r.t[k] - r.s[k]) * X + r.t[k] * Y + r.s[k] * Z;
    acc += r.w[k] * exterior_derivative(field, p, h).apply(v, w);
  }
  return acc.value();
}

/// |I(X,Y) + I(Y,Z) + I(Z,X) - flux|
inline double triangle_residual(const PotentialField& field, const Vec& X, const Vec& Y, const Vec& Z,
                                const SegmentRule& rule) {
  const double loop = segment_potential(field, X, Y, rule) + segment_potential(field, Y, Z, rule) +
                      segment_potential(field, Z, X, rule);
  return std::abs(loop - simplex_flux(field, X, Y, Z, rule.order));
}

/// grad U + i A U
inline CVec covariant_gradient(const PotentialField& field, const Function& U, const Vec& x) {
  const Vec a = field(x);
  const cplx u = U(x);
  CVec g = U.grad(x);
  for (int i = 0; i < x.n; ++i) g[i] += cplx(0.0, a[i]) * u;
  return g;
}

inline cplx apply(const CVec& g, const Vec& v) {
  cplx s = 0.0;
  for (int i = 0; i < v.n; ++i) s += g[i] * v[i];
  return s;
}

/// |e^{iI(X,Y)}U(Y) - U(X) - \int_0^1 e^{iI(X,P_t)} grad_A U(P_t).(Y-X) dt|,
/// P_t = (1-t)X + tY, with the outer integral on `rule` and the inner phases
/// on the field's default rule.
inline double covariant_ftc_residual(const PotentialField& field, const Function& U, const Vec& X, const Vec& Y,
                                     const SegmentRule& rule) {
  const SegmentRule inner = field.degree() >= 0 ? default_rule(field) : rule;
  const NodesWeights g = composite_gauss(rule.order, rule.panels, 0.0, 1.0);
  const Vec d = Y - X;
  cplx integral = 0.0;
  for (std::size_t k = 0; k < g.x.size(); ++k) {
    const Vec p = (1.0 - g.x[k]) * X + g.x[k] * Y;
    integral += g.w[k] * phase_factor(segment_potential(field, X, p, inner)) * apply(covariant_gradient(field, U, p), d);
  }
  const cplx lhs = phase_factor(segment_potential(field, X, Y, inner)) * U(Y) - U(X);
  return std::abs(lhs - integral);
}

struct GapPair {
  double lhs = 0.0;
  double rhs = 0.0;
};

/// Both sides of the three-point inequality
///   |e^{iI(X,Y)}U(Y) - U(X)| <= |e^{iI(Z,Y)}U(Y) - U(Z)| + |e^{iI(Z,X)}U(X) - U(Z)|
///                               + |U(Z)| min{cap, |dA|/2 |(X-Z) ^ (Y-Z)|},
/// with |dA| sampled on the triangle's bounding box (cap = 1 by default).
inline GapPair three_point_gap(const PotentialField& field, const Vec& X, const Vec& Y, const Vec& Z,
                               const Function& U, const SegmentRule& rule, double cap = 1.0) {
  GapPair g;
  g.lhs = std::abs(phase_factor(segment_potential(field, X, Y, rule)) * U(Y) - U(X));
  const double t1 = std::abs(phase_factor(segment_potential(field, Z, Y, rule)) * U(Y) - U(Z));
  const double t2 = std::abs(phase_factor(segment_potential(field, Z, X, rule)) * U(X) - U(Z));
  Box box{X, X};
  for (const Vec* p : {&Y, &Z})
    for (int i = 0; i < X.n; ++i) {
      box.lo[i] = std::min(box.lo[i], (*p)[i]);
      box.hi[i] = std::max(box.hi[i], (*p)[i]);
    }
  for (int i = 0; i < X.n; ++i)
    if (!(box.hi[i] > box.lo[i])) box.hi[i] = box.lo[i] + 1e-9;
  const double beta = sup_norm_dA(field, box, 5);
  const Vec v = X - Z;
  const Vec w = Y - Z;
  double wedge2 = 0.0;
  for (int i = 0; i < X.n; ++i)
    for (int j = i + 1; j < X.n; ++j) wedge2 += std::pow(v[i] * w[j] - v[j] * w[i], 2);
  g.rhs = t1 + t2 + std::abs(U(Z)) * std::min(cap, 0.5 * beta * std::sqrt(wedge2));
  return g;
}

/// Phase I_{A^par}(x, y) + lambda |y - x| dA[(y - x, 0), e_{d+1}] for a field
/// on R^{d+1} with constant dA. Construction checks constancy once.
class ShiftedPhase {
 public:
  ShiftedPhase(const PotentialField& field, double lambda, const Box& box)
      : parallel_(restrict_parallel(field)), lambda_(lambda), rule_(default_rule(parallel_)) {
    if (!has_constant_dA(field, box, field.has_jacobian() ? 1e-9 : 1e-6))
      throw Error("shifted phase requires a field with constant dA", "field");
    const int n = field.dimension;
    std::optional<double> h;
    if (!field.has_jacobian()) h = 1e-4 * box.diameter();
    const TwoForm w = exterior_derivative(field, box.lo + 0.5 * (box.hi - box.lo), h);
    b_ = Vec(n - 1);
    for (int i = 0; i < n - 1; ++i) b_[i] = w(i, n - 1);
  }

  double operator()(const Vec& x, const Vec& y) const {
    const Vec h = y - x;
    return segment_potential(parallel_, x, y, rule_) + lambda_ * norm(h) * dot(b_, h);
  }
  const PotentialField& parallel() const { return parallel_; }
  /// b_i = dA_{i, d+1}
  const Vec& normal_flux() const { return b_; }
  double lambda() const { return lambda_; }

 private:
  PotentialField parallel_;
  double lambda_;
  SegmentRule rule_;
  Vec b_;
};

inline Box box_around(const Vec& x, const Vec& y, double pad = 1.0) {
  Box b{x, x};
  for (int i = 0; i < x.n; ++i) {
    b.lo[i] = std::min(x[i], y[i]) - pad;
    b.hi[i] = std::max(x[i], y[i]) + pad;
  }
  return b;
}

inline double shifted_boundary_potential(const PotentialField& field, double lambda, const Vec& x, const Vec& y) {
  if (x.n + 1 != field.dimension) throw Error("boundary points must have dimension d for a field on R^{d+1}", "dimension");
  return ShiftedPhase(field, lambda, box_around(lift(x, 0.0), lift(y, 0.0)))(x, y);
}

}  // namespace magtrace
