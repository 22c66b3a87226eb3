#pragma once

// Extension by a phase-corrected mollifier, trace restriction, whole-space
// extension across t = 0 and the naive reflection used for comparison.

#include "magtrace/norms.hpp"

namespace magtrace {

/// phi: normalized bump on the unit ball of R^d; theta: smooth step with
/// theta = 1 on [0, a/2], 0 on [a, inf); a = beta^{-1/2}.
class ExtensionKernel {
 public:
  ExtensionKernel(int d, double beta, int order = 24, int panels = 4)
      : d_(d), beta_(beta), a_(1.0 / std::sqrt(beta)), theta_(a_) {
    if (d < 1 || d > 2) throw Error("boundary dimension must be 1 or 2", "d");
    if (!(beta > 0.0)) throw Error("beta must be positive", "beta");
    const NodesWeights g = composite_gauss(order, panels, -1.0, 1.0);
    const Function phi = make_bump(Vec(d), 1.0, true);
    // tensor rule on [-1,1]^d, dropping nodes outside the ball
    const std::size_t m = g.x.size();
    const std::size_t total = d == 1 ? m : m * m;
    for (std::size_t k = 0; k < total; ++k) {
      Vec z(d);
      double w = 1.0;
      z[0] = g.x[k % m];
      w *= g.w[k % m];
      if (d == 2) {
        z[1] = g.x[k / m];
        w *= g.w[k / m];
      }
      const double v = phi(z).real() * w;
      if (v == 0.0) continue;
      nodes_.push_back(z);
      weights_.push_back(v);
    }
    KahanSum s;
    for (double w : weights_) s += w;
    mass_ = s.value();
  }

  int dim() const { return d_; }
  double beta() const { return beta_; }
  double a() const { return a_; }
  const SmoothStep& theta() const { return theta_; }
  /// Discrete integral of phi before renormalization.
  double phi_mass() const { return mass_; }
  /// z-nodes in the unit ball and weights phi(z) w_z / phi_mass.
  const std::vector<Vec>& nodes() const { return nodes_; }
  double weight(std::size_t k) const { return weights_[k] / mass_; }

 private:
  int d_;
  double beta_;
  double a_;
  SmoothStep theta_;
  std::vector<Vec> nodes_;
  std::vector<double> weights_;
  double mass_ = 1.0;
};

/// theta(t) \int phi_t(x - y) e^{i I_A((x,t),(y,0))} u(y) dy, written with
/// y = x - t z; u(x) at t = 0. `field` lives on R^{d+1}.
inline cplx extend_point(const Function& u, const PotentialField& field, const ExtensionKernel& kernel, const Vec& x,
                         double t, const SegmentRule& rule) {
  if (t < 0.0) throw Error("extension is defined for t >= 0", "t");
  if (u.dim != kernel.dim() || x.n != kernel.dim() || field.dimension != kernel.dim() + 1)
    throw Error("dimension mismatch between u, field and kernel", "dimension");
  if (t == 0.0) return u(x);
  const double th = kernel.theta()(t);
  if (th == 0.0) return 0.0;
  if (u.compact() && norm(x - u.support_center) >= u.support_radius + t) return 0.0;
  const Vec X = lift(x, t);
  cplx acc = 0.0;
  for (std::size_t k = 0; k < kernel.nodes().size(); ++k) {
    const Vec y = x - t * kernel.nodes()[k];
    const cplx uy = u(y);
    if (uy == cplx(0.0)) continue;
    acc += kernel.weight(k) * phase_factor(segment_potential(field, X, lift(y, 0.0), rule)) * uy;
  }
  return th * acc;
}

inline cplx extend_point(const Function& u, const PotentialField& field, const ExtensionKernel& kernel, const Vec& x,
                         double t) {
  return extend_point(u, field, kernel, x, t, default_rule(field));
}

inline GridFunction extend_grid(const Function& u, const PotentialField& field, const ExtensionKernel& kernel,
                                const HalfSpaceGrid& grid, const SegmentRule& rule) {
  if (grid.T < kernel.a()) throw Error("half-space height T must cover the cutoff length a", "T");
  GridFunction U = GridFunction::halfspace(grid);
  const std::size_t N = grid.base.size();
  parallel::for_blocks(static_cast<std::size_t>(grid.rows()), [&](std::size_t k) {
    const double t = grid.t[k];
    for (std::size_t i = 0; i < N; ++i)
      U.at(static_cast<int>(k), i) = extend_point(u, field, kernel, grid.base.point(i), t, rule);
  });
  return U;
}

inline GridFunction extend_grid(const Function& u, const PotentialField& field, const ExtensionKernel& kernel,
                                const HalfSpaceGrid& grid) {
  return extend_grid(u, field, kernel, grid, default_rule(field));
}

namespace detail {

inline double row_distance(const GridFunction& U, int a, int b, double p) {
  KahanSum s;
  for (std::size_t i = 0; i < U.base.size(); ++i) s += std::pow(std::abs(U.at(a, i) - U.at(b, i)), p);
  return std::pow(s.value() * U.base.cell_volume(), 1.0 / p);
}

inline void check_trace_continuity(const GridFunction& U, double p) {
  if (!U.half) throw Error("trace needs a half-space grid function", "grid");
  if (U.rows() < 3) throw Error("trace needs at least two positive t rows", "t_count");
  const double n1 = lp_norm(U.row(1), p);
  if (row_distance(U, 1, 2, p) > 0.1 * n1 && n1 > 0.0)
    throw Error("U is not continuous at t = 0: the two smallest rows differ by more than 10%", "U");
}

}  // namespace detail

/// Boundary values: the stored t = 0 row, after checking continuity on the
/// two smallest positive rows.
inline GridFunction trace(const GridFunction& U, double p = 2.0) {
  detail::check_trace_continuity(U, p);
  return U.row(0);
}

/// Linear extrapolation to t = 0 from the two smallest positive rows; the
/// stored boundary row is not consulted.
inline GridFunction trace_extrapolated(const GridFunction& U, double p = 2.0) {
  detail::check_trace_continuity(U, p);
  const double t1 = U.half->t[1], t2 = U.half->t[2];
  GridFunction r = GridFunction::boundary(U.base);
  for (std::size_t i = 0; i < U.base.size(); ++i) r.values[i] = (t2 * U.at(1, i) - t1 * U.at(2, i)) / (t2 - t1);
  return r;
}

/// Upper side U; lower side (stored at (x, t) for the point (x, -t)) is the
/// extension of trace(U) for the reflected field. Both share the t = 0 row.
inline TwoSidedFunction extend_whole_space(const GridFunction& U, const PotentialField& field,
                                           const ExtensionKernel& kernel, const SegmentRule& rule, double p = 2.0) {
  const GridFunction u = trace(U, p);
  const Function uf = interpolate(u);
  TwoSidedFunction r{U, extend_grid(uf, reflect_field(field), kernel, *U.half, rule)};
  for (std::size_t i = 0; i < U.base.size(); ++i) r.lower.at(0, i) = u.values[i];
  return r;
}

inline TwoSidedFunction extend_whole_space(const GridFunction& U, const PotentialField& field,
                                           const ExtensionKernel& kernel, double p = 2.0) {
  return extend_whole_space(U, field, kernel, default_rule(reflect_field(field)), p);
}

/// Even reflection: lower(x, t) = U(x, t), i.e. Ubar(x, -t) = U(x, t).
inline TwoSidedFunction reflection_extension(const GridFunction& U) {
  if (!U.half) throw Error("reflection needs a half-space grid function", "grid");
  return {U, U};
}

/// Energy of a two-sided function under `field`: the lower side is measured
/// in reflected coordinates with the reflected field.
inline WeightedEnergy weighted_energy(const TwoSidedFunction& U, const PotentialField& field, double p) {
  const WeightedEnergy a = weighted_energy(U.upper, field, p);
  const WeightedEnergy b = weighted_energy(U.lower, reflect_field(field), p);
  return {a.gradient + b.gradient, a.mass + b.mass};
}

}  // namespace magtrace
