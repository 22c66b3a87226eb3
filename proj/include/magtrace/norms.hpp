#pragma once

// Covariant gradients, L^p norms, weighted covariant Sobolev energies on the
// half-space, and magnetic Gagliardo seminorms.

#include <json.hpp>

#include "magtrace/discretization.hpp"
#include "magtrace/potential.hpp"

namespace magtrace {

struct SeminormReport {
  double value = 0.0;
  /// Bound on the diagonal core |y - x| < h_min left out of value^p.
  double tail_bound = 0.0;
  double s = 0.5;
  double p = 2.0;
  std::string mu = "lebesgue";
  double beta = 0.0;
  int d = 1;
  int n = 0;
  double L = 0.0;

  double value_pow() const { return std::pow(value, p); }

  nlohmann::json to_json() const {
    return {{"value", value}, {"tail_bound", tail_bound}, {"s", s}, {"p", p}, {"mu", mu}, {"beta", beta},
            {"grid", {{"d", d}, {"n", n}, {"L", L}}}};
  }
};

/// Central differences of U with step h, plus i A U.
inline CVec covariant_gradient_fd(const PotentialField& field, const Function& U, const Vec& x, double h) {
  const Vec a = field(x);
  CVec g(x.n);
  for (int i = 0; i < x.n; ++i) {
    const Vec e = Vec::unit(x.n, i) * h;
    g[i] = (U(x + e) - U(x - e)) / (2.0 * h) + cplx(0.0, a[i]) * U(x);
  }
  return g;
}

/// Central differences on a boundary lattice; interior points only.
inline CVec covariant_gradient(const PotentialField& field, const GridFunction& u, std::size_t idx) {
  if (u.is_half()) throw Error("lattice gradient expects boundary samples", "grid");
  if (u.base.on_edge(idx)) throw Error("covariant gradient undefined on the grid boundary", "point");
  const auto m = u.base.multi(idx);
  const Vec x = u.base.point(idx);
  const Vec a = field(x);
  CVec g(u.base.d);
  for (int i = 0; i < u.base.d; ++i) {
    std::array<int, 2> lo = m, hi = m;
    --lo[static_cast<std::size_t>(i)];
    ++hi[static_cast<std::size_t>(i)];
    g[i] = (u.values[u.base.index(hi[0], hi[1])] - u.values[u.base.index(lo[0], lo[1])]) / (2.0 * u.base.h()) +
           cplx(0.0, a[i]) * u.values[idx];
  }
  return g;
}

/// sum |u|^p * cell weight (t^{-gamma}-weighted rows on half-space grids).
inline double lp_norm_pow(const GridFunction& u, double p) {
  if (p < 1.0) throw Error("p must be >= 1", "p");
  KahanSum s;
  const double hv = u.base.cell_volume();
  for (int k = 0; k < u.rows(); ++k) {
    const double w = hv * (u.half ? u.half->weights[static_cast<std::size_t>(k)] : 1.0);
    for (std::size_t i = 0; i < u.base.size(); ++i) s += std::pow(std::abs(u.at(k, i)), p) * w;
  }
  return s.value();
}

inline double lp_norm(const GridFunction& u, double p) { return std::pow(lp_norm_pow(u, p), 1.0 / p); }

/// Weighted integrals of |grad_A U|^p and |U|^p against t^{-gamma} dx dt.
struct WeightedEnergy {
  double gradient = 0.0;
  double mass = 0.0;
  double total() const { return gradient + mass; }
};

namespace detail {

/// Derivative weights at nodes[at] of the quadratic through three nodes.
inline std::array<double, 3> lagrange_derivative(const std::array<double, 3>& z, int at) {
  const double x = z[static_cast<std::size_t>(at)];
  std::array<double, 3> c{};
  for (int j = 0; j < 3; ++j) {
    double num = 0.0, den = 1.0;
    for (int m = 0; m < 3; ++m) {
      if (m == j) continue;
      den *= z[static_cast<std::size_t>(j)] - z[static_cast<std::size_t>(m)];
      double prod = 1.0;
      for (int l = 0; l < 3; ++l)
        if (l != j && l != m) prod *= x - z[static_cast<std::size_t>(l)];
      num += prod;
    }
    c[static_cast<std::size_t>(j)] = num / den;
  }
  return c;
}

/// Picks a three-node stencil around position i of an axis with `count`
/// nodes: central when possible, one-sided at the ends.
inline std::pair<int, int> stencil_start(int i, int count) {
  if (i == 0) return {0, 0};
  if (i == count - 1) return {count - 3, 2};
  return {i - 1, 1};
}

}  // namespace detail

/// Gauge-covariant finite differences: each neighbour value is transported
/// to the stencil centre by e^{i I_A(X, neighbour)} before differencing, so
/// |grad_A U| is gauge invariant at the discrete level.
inline WeightedEnergy weighted_energy(const GridFunction& U, const PotentialField& field, double p) {
  if (!U.half) throw Error("weighted energy needs a half-space grid function", "grid");
  if (p < 1.0) throw Error("p must be >= 1", "p");
  const HalfSpaceGrid& g = *U.half;
  const int d = g.base.d;
  if (field.dimension != d + 1) throw Error("field dimension must be d+1", "field");
  const SegmentRule rule = default_rule(field);
  const double hv = g.base.cell_volume();
  const double h = g.base.h();
  const int rows = g.rows();
  std::vector<double> grad_part(static_cast<std::size_t>(rows)), mass_part(static_cast<std::size_t>(rows));
  parallel::for_blocks(static_cast<std::size_t>(rows), [&](std::size_t kb) {
    const int k = static_cast<int>(kb);
    KahanSum gs, ms;
    const auto [k0, kat] = detail::stencil_start(k, rows);
    const std::array<double, 3> tz{g.t[static_cast<std::size_t>(k0)], g.t[static_cast<std::size_t>(k0 + 1)], g.t[static_cast<std::size_t>(k0 + 2)]};
    const auto ct = detail::lagrange_derivative(tz, kat);
    for (std::size_t i = 0; i < g.base.size(); ++i) {
      const Vec X = g.point(k, i);
      const cplx u0 = U.at(k, i);
      double gsq = 0.0;
      const auto m = g.base.multi(i);
      for (int a = 0; a < d; ++a) {
        const auto [i0, iat] = detail::stencil_start(m[static_cast<std::size_t>(a)], g.base.n);
        const std::array<double, 3> xz{0.0, h, 2.0 * h};
        const auto cx = detail::lagrange_derivative(xz, iat);
        cplx acc = 0.0;
        for (int j = 0; j < 3; ++j) {
          std::array<int, 2> mm = m;
          mm[static_cast<std::size_t>(a)] = i0 + j;
          const std::size_t nb = g.base.index(mm[0], mm[1]);
          if (nb == i) {
            acc += cx[static_cast<std::size_t>(j)] * u0;
            continue;
          }
          const Vec Y = g.point(k, nb);
          acc += cx[static_cast<std::size_t>(j)] * phase_factor(segment_potential(field, X, Y, rule)) * U.at(k, nb);
        }
        gsq += std::norm(acc);
      }
      cplx acc = 0.0;
      for (int j = 0; j < 3; ++j) {
        const int kk = k0 + j;
        if (kk == k) {
          acc += ct[static_cast<std::size_t>(j)] * u0;
          continue;
        }
        const Vec Y = g.point(kk, i);
        acc += ct[static_cast<std::size_t>(j)] * phase_factor(segment_potential(field, X, Y, rule)) * U.at(kk, i);
      }
      gsq += std::norm(acc);
      const double w = hv * g.weights[static_cast<std::size_t>(k)];
      gs += std::pow(gsq, p / 2.0) * w;
      ms += std::pow(std::abs(u0), p) * w;
    }
    grad_part[kb] = gs.value();
    mass_part[kb] = ms.value();
  });
  KahanSum G, M;
  for (int k = 0; k < rows; ++k) {
    G += grad_part[static_cast<std::size_t>(k)];
    M += mass_part[static_cast<std::size_t>(k)];
  }
  return {G.value(), M.value()};
}

/// Same integrals with analytic U and grad U sampled at the grid nodes.
inline WeightedEnergy weighted_energy(const Function& U, const PotentialField& field, const HalfSpaceGrid& g, double p) {
  if (U.dim != g.base.d + 1 || field.dimension != g.base.d + 1) throw Error("dimension mismatch", "dimension");
  const double hv = g.base.cell_volume();
  KahanSum G, M;
  for (int k = 0; k < g.rows(); ++k)
    for (std::size_t i = 0; i < g.base.size(); ++i) {
      const Vec X = g.point(k, i);
      const double w = hv * g.weights[static_cast<std::size_t>(k)];
      G += std::pow(covariant_gradient(field, U, X).norm(), p) * w;
      M += std::pow(std::abs(U(X)), p) * w;
    }
  return {G.value(), M.value()};
}

/// (\iint (|U|^p + |grad_A U|^p) t^{-gamma} dx dt)^{1/p}
inline double weighted_w1p_norm(const GridFunction& U, const PotentialField& field, double p) {
  return std::pow(weighted_energy(U, field, p).total(), 1.0 / p);
}

inline double weighted_w1p_norm(const Function& U, const PotentialField& field, const HalfSpaceGrid& g, double p) {
  return std::pow(weighted_energy(U, field, g, p).total(), 1.0 / p);
}

// ------------------------------------------------------------ seminorms

struct GagliardoOptions {
  /// Adds the leading-order core \int_{|h|<h_min} |grad_A u(x).h|^p |h|^{-d-sp}.
  bool core_correction = true;
  /// Analytic closed forms for |y - x| > R_max and for x outside the box.
  bool far_field = true;
};

namespace detail {

inline void check_support(const Function& u, const BoundaryGrid& g) {
  if (u.compact()) {
    for (int i = 0; i < g.d; ++i)
      if (std::abs(u.support_center[i]) + u.support_radius > g.L - g.h())
        throw Error("support of u touches the grid edge; enlarge L", "L");
    return;
  }
  double peak = 0.0, ring = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double v = std::abs(u(g.point(i)));
    peak = std::max(peak, v);
    if (g.on_edge(i)) ring = std::max(ring, v);
  }
  if (ring > 1e-12 * std::max(peak, 1e-300)) throw Error("u does not vanish on the grid boundary ring; enlarge L", "L");
}

/// Largest |u|, |grad u| and |A| on a lattice twice as fine as `g`.
struct SupBounds {
  double u = 0.0, grad = 0.0, a = 0.0;
};

inline SupBounds sup_bounds(const Function& u, const PotentialField& parallel, const BoundaryGrid& g) {
  const BoundaryGrid fine(g.d, g.L, 2 * g.n);
  SupBounds b;
  for (std::size_t i = 0; i < fine.size(); ++i) {
    const Vec x = fine.point(i);
    b.u = std::max(b.u, std::abs(u(x)));
    b.grad = std::max(b.grad, u.grad(x).norm());
    b.a = std::max(b.a, norm(parallel(x)));
  }
  return b;
}

template <class Phase>
SeminormReport gagliardo(const Function& u, const PotentialField& parallel, Phase&& phase, double s, double p,
                         const BoundaryGrid& g, const PairQuadrature& q, const GagliardoOptions& opt) {
  if (!(s > 0.0 && s < 1.0)) throw Error("s must lie in (0,1)", "s");
  if (p < 1.0) throw Error("p must be >= 1", "p");
  if (u.dim != g.d || parallel.dimension != g.d) throw Error("dimension mismatch between u, field and grid", "dimension");
  check_support(u, g);
  const int d = g.d;
  const double sp = s * p;
  const double hv = g.cell_volume();
  const std::size_t N = g.size();
  std::vector<cplx> ux(N);
  for (std::size_t i = 0; i < N; ++i) ux[i] = u(g.point(i));

  const std::size_t block = 16;
  const std::size_t blocks = (N + block - 1) / block;
  std::vector<double> partial(blocks, 0.0);
  parallel::for_blocks(blocks, [&](std::size_t b) {
    KahanSum acc;
    for (std::size_t i = b * block; i < std::min(N, (b + 1) * block); ++i) {
      const cplx u0 = ux[i];
      const bool x_zero = u0 == cplx(0.0);
      for_each_pair_at(g, q, i, [&](const PairNode& node) {
        if (x_zero && u.vanishes_at(node.y)) return;
        const cplx uy = u(node.y);
        const cplx diff = uy == cplx(0.0) ? -u0 : phase_factor(phase(node.x, node.y)) * uy - u0;
        acc += std::pow(std::abs(diff), p) / std::pow(node.r, d + sp) * node.weight;
      });
      if (opt.core_correction && !x_zero) {
        CVec ga = covariant_gradient(parallel, u, g.point(i));
        double ang = 0.0;
        for (std::size_t j = 0; j < q.directions.size(); ++j)
          ang += q.direction_weights[j] * std::pow(std::abs(apply(ga, q.directions[j])), p);
        acc += hv * ang * std::pow(q.h_min, p - sp) / (p - sp);
      }
      if (opt.far_field && !x_zero) {
        const double up = std::pow(std::abs(u0), p);
        // clipped rays stop at the box: both orderings of (inside, outside) are
        // then closed-form; otherwise rays run to R_max and only x outside is
        if (!q.clip_to_box) acc += hv * up * sphere_area(d) * std::pow(q.R_max, -sp) / sp;
        const Box box = g.box();
        const Vec x = g.point(i);
        double ang = 0.0;
        for (std::size_t j = 0; j < q.directions.size(); ++j)
          ang += q.direction_weights[j] * std::pow(exit_distance(box, x, q.directions[j]), -sp) / sp;
        acc += hv * up * ang * (q.clip_to_box ? 2.0 : 1.0);
      }
    }
    partial[b] = acc.value();
  });
  KahanSum total;
  for (double v : partial) total += v;

  SeminormReport r;
  r.value = std::pow(std::max(total.value(), 0.0), 1.0 / p);
  r.s = s;
  r.p = p;
  r.d = d;
  r.n = g.n;
  r.L = g.L;
  const SupBounds sb = sup_bounds(u, parallel, g);
  double measure = std::pow(2.0 * g.L, d);
  if (u.compact()) measure = std::min(measure, std::pow(2.0 * (u.support_radius + q.h_min), d));
  const double G = sb.grad + sb.a * sb.u;
  r.tail_bound = sphere_area(d) * measure * std::pow(G, p) * std::pow(q.h_min, p - sp) / (p - sp);
  return r;
}

}  // namespace detail

/// |u|_{W^{s,p}_{A}} with phase I^mu_A over the lattice and pair scheme.
/// `field_parallel` lives on R^d.
inline SeminormReport magnetic_gagliardo(const Function& u, const PotentialField& field_parallel, double s, double p,
                                         const QuadratureMeasure& mu, const BoundaryGrid& g, const PairQuadrature& q,
                                         const GagliardoOptions& opt = {}) {
  const SegmentRule rule = default_rule(field_parallel);
  auto phase = [&](const Vec& x, const Vec& y) { return measure_potential(field_parallel, mu, x, y, rule); };
  SeminormReport r = detail::gagliardo(u, field_parallel, phase, s, p, g, q, opt);
  r.mu = mu.name();
  return r;
}

/// Grid-data path: multilinear interpolation of the samples; the tail bound
/// gains an interpolation term h^2 * sup|grad u| per unit measure.
inline SeminormReport magnetic_gagliardo(const GridFunction& u, const PotentialField& field_parallel, double s, double p,
                                         const QuadratureMeasure& mu, const PairQuadrature& q,
                                         const GagliardoOptions& opt = {}) {
  u.check_finite();
  for (std::size_t i = 0; i < u.base.size(); ++i)
    if (u.base.on_edge(i) && u.values[i] != cplx(0.0)) throw Error("u does not vanish on the grid boundary ring", "L");
  const Function f = interpolate(u);
  SeminormReport r = magnetic_gagliardo(f, field_parallel, s, p, mu, u.base, q, opt);
  double lip = 0.0;
  for (std::size_t i = 0; i < u.base.size(); ++i) lip = std::max(lip, f.grad(u.base.point(i)).norm());
  r.tail_bound += std::pow(u.base.h(), 2) * lip * std::pow(2.0 * u.base.L, u.base.d);
  return r;
}

/// Seminorm with the shifted phase I_{A^par}(x,y) + lambda |y-x| dA[(y-x,0), e_{d+1}];
/// `field` lives on R^{d+1} and must have constant dA.
inline SeminormReport shifted_gagliardo(const Function& u, const PotentialField& field, double lambda, double s, double p,
                                        const BoundaryGrid& g, const PairQuadrature& q, const GagliardoOptions& opt = {}) {
  Box box{Vec(g.d + 1), Vec(g.d + 1)};
  for (int i = 0; i < g.d; ++i) box.lo[i] = -g.L, box.hi[i] = g.L;
  box.lo[g.d] = 0.0;
  box.hi[g.d] = g.L;
  const ShiftedPhase phase(field, lambda, box);
  SeminormReport r = detail::gagliardo(u, phase.parallel(), phase, s, p, g, q, opt);
  r.mu = "lebesgue";
  return r;
}

}  // namespace magtrace
