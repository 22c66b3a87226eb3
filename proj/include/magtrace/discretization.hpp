#pragma once

// Boundary lattices, graded half-space grids, sampled grid functions (with CSV
// import/export), and the offset-shell pair quadrature for singular double
// integrals over R^d x R^d.

#include <fstream>
#include <iomanip>
#include <sstream>

#include "magtrace/function.hpp"

namespace magtrace {

/// Cell-centred lattice on [-L, L]^d with n points per axis, spacing h = 2L/n.
struct BoundaryGrid {
  int d = 1;
  double L = 1.0;
  int n = 64;

  BoundaryGrid() = default;
  BoundaryGrid(int dim, double half_width, int points) : d(dim), L(half_width), n(points) { validate(); }

  void validate() const {
    if (d < 1 || d > 2) throw Error("boundary dimension must be 1 or 2", "d");
    if (n < 8) throw Error("grid needs at least 8 points per axis", "n");
    if (!(L > 0.0)) throw Error("grid half-width must be positive", "L");
  }
  double h() const { return 2.0 * L / n; }
  std::size_t size() const { return d == 1 ? static_cast<std::size_t>(n) : static_cast<std::size_t>(n) * n; }
  double coord(int i) const { return -L + (i + 0.5) * h(); }
  std::array<int, 2> multi(std::size_t idx) const {
    return {static_cast<int>(idx % static_cast<std::size_t>(n)), static_cast<int>(idx / static_cast<std::size_t>(n))};
  }
  std::size_t index(int i0, int i1 = 0) const { return static_cast<std::size_t>(i0) + static_cast<std::size_t>(n) * static_cast<std::size_t>(i1); }
  Vec point(std::size_t idx) const {
    const auto m = multi(idx);
    Vec x(d);
    for (int a = 0; a < d; ++a) x[a] = coord(m[static_cast<std::size_t>(a)]);
    return x;
  }
  double cell_volume() const { return std::pow(h(), d); }
  Box box() const {
    Box b{Vec(d), Vec(d)};
    for (int a = 0; a < d; ++a) b.lo[a] = -L, b.hi[a] = L;
    return b;
  }
  bool on_edge(std::size_t idx) const {
    const auto m = multi(idx);
    for (int a = 0; a < d; ++a)
      if (m[static_cast<std::size_t>(a)] == 0 || m[static_cast<std::size_t>(a)] == n - 1) return true;
    return false;
  }
};

/// Boundary lattice times graded t-nodes t_k = T r^{K-k}, k = 1..K, plus the
/// boundary row t_0 = 0. Half-space integrals carry the weight t^{-gamma}
/// (gamma = 1 - (1-s)p for W^{1,p}_{A,gamma}); row weights are exact
/// integrals of tau^{-gamma} over the dual cells [0, m_1], [m_k, m_{k+1}], ..,
/// [m_K, T], m_k = (t_{k-1} + t_k)/2.
struct HalfSpaceGrid {
  BoundaryGrid base;
  double T = 1.0;
  int K = 64;
  double r = 0.85;
  double gamma = 0.0;
  std::vector<double> t;        // t[0] = 0, t[k] for k = 1..K
  std::vector<double> weights;  // per row

  HalfSpaceGrid() = default;
  HalfSpaceGrid(const BoundaryGrid& b, double T_, int K_, double r_, double gamma_)
      : base(b), T(T_), K(K_), r(r_), gamma(gamma_) {
    if (!(T > 0.0)) throw Error("half-space height must be positive", "T");
    if (K < 2) throw Error("half-space grid needs at least two t nodes", "t_count");
    if (!(r > 0.0 && r < 1.0)) throw Error("grading ratio must lie in (0,1)", "r");
    if (!(gamma < 1.0)) throw Error("weight exponent gamma must be below 1", "gamma");
    t.assign(static_cast<std::size_t>(K + 1), 0.0);
    for (int k = 1; k <= K; ++k) t[static_cast<std::size_t>(k)] = T * std::pow(r, K - k);
    auto prim = [g = 1.0 - gamma](double x) { return std::pow(x, g) / g; };
    weights.assign(static_cast<std::size_t>(K + 1), 0.0);
    for (int k = 0; k <= K; ++k) {
      const double lo = k == 0 ? 0.0 : 0.5 * (t[static_cast<std::size_t>(k - 1)] + t[static_cast<std::size_t>(k)]);
      const double hi = k == K ? T : 0.5 * (t[static_cast<std::size_t>(k)] + t[static_cast<std::size_t>(k + 1)]);
      weights[static_cast<std::size_t>(k)] = prim(hi) - prim(lo);
    }
  }

  int rows() const { return K + 1; }
  double t_min() const { return t[1]; }
  std::size_t size() const { return base.size() * static_cast<std::size_t>(rows()); }
  Vec point(int row, std::size_t idx) const { return lift(base.point(idx), t[static_cast<std::size_t>(row)]); }
  double weight_mass() const {
    KahanSum s;
    for (double w : weights) s += w;
    return s.value();
  }
  /// Same t-range and smallest node with `factor` times the nodes.
  HalfSpaceGrid refined_t(int factor) const {
    const double rr = std::pow(r, static_cast<double>(K - 1) / (K * factor - 1));
    return HalfSpaceGrid(base, T, K * factor, rr, gamma);
  }
};

/// Complex samples on a boundary lattice or a half-space grid (rows in t,
/// row 0 being t = 0).
struct GridFunction {
  BoundaryGrid base;
  std::optional<HalfSpaceGrid> half;
  std::vector<cplx> values;

  static GridFunction boundary(const BoundaryGrid& g) { return {g, std::nullopt, std::vector<cplx>(g.size())}; }
  static GridFunction halfspace(const HalfSpaceGrid& g) { return {g.base, g, std::vector<cplx>(g.size())}; }

  bool is_half() const { return half.has_value(); }
  int rows() const { return half ? half->rows() : 1; }
  cplx& at(int row, std::size_t idx) { return values[static_cast<std::size_t>(row) * base.size() + idx]; }
  const cplx& at(int row, std::size_t idx) const { return values[static_cast<std::size_t>(row) * base.size() + idx]; }

  GridFunction row(int k) const {
    GridFunction r = boundary(base);
    for (std::size_t i = 0; i < base.size(); ++i) r.values[i] = at(k, i);
    return r;
  }
  void check_finite() const {
    for (const auto& v : values)
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) throw Error("grid function has non-finite values", "values");
  }
  double sup_abs() const {
    double m = 0.0;
    for (const auto& v : values) m = std::max(m, std::abs(v));
    return m;
  }
};

/// Upper function and lower function, the latter stored in reflected
/// coordinates: lower.at(k, i) is the value at (x_i, -t_k).
struct TwoSidedFunction {
  GridFunction upper;
  GridFunction lower;
};

inline GridFunction sample(const BoundaryGrid& g, const Function& u) {
  if (u.dim != g.d) throw Error("function dimension does not match grid", "dimension");
  GridFunction f = GridFunction::boundary(g);
  for (std::size_t i = 0; i < g.size(); ++i) f.values[i] = u(g.point(i));
  return f;
}

inline GridFunction sample(const HalfSpaceGrid& g, const Function& U) {
  if (U.dim != g.base.d + 1) throw Error("function dimension does not match half-space grid", "dimension");
  GridFunction f = GridFunction::halfspace(g);
  for (int k = 0; k < g.rows(); ++k)
    for (std::size_t i = 0; i < g.base.size(); ++i) f.at(k, i) = U(g.point(k, i));
  return f;
}

// ---------------------------------------------------------------- CSV I/O

namespace detail {

inline void csv_header(std::ostream& os, const GridFunction& f, bool sided) {
  os << "i0";
  if (f.base.d == 2) os << ",i1";
  if (f.is_half()) os << ",t_index";
  if (sided) os << ",side";
  os << ",re,im\n";
}

inline void csv_rows(std::ostream& os, const GridFunction& f, const char* side) {
  for (int k = 0; k < f.rows(); ++k)
    for (std::size_t i = 0; i < f.base.size(); ++i) {
      const auto m = f.base.multi(i);
      os << m[0];
      if (f.base.d == 2) os << ',' << m[1];
      if (f.is_half()) os << ',' << k;
      if (side) os << ',' << side;
      os << ',' << f.at(k, i).real() << ',' << f.at(k, i).imag() << '\n';
    }
}

}  // namespace detail

inline void write_csv(std::ostream& os, const GridFunction& f) {
  os << std::setprecision(17);
  detail::csv_header(os, f, false);
  detail::csv_rows(os, f, nullptr);
}

inline void write_csv(std::ostream& os, const TwoSidedFunction& f) {
  os << std::setprecision(17);
  detail::csv_header(os, f.upper, true);
  detail::csv_rows(os, f.upper, "+");
  detail::csv_rows(os, f.lower, "-");
}

/// Reads values written by write_csv into `f`, whose grid fixes the layout.
inline void read_csv(std::istream& is, GridFunction& f) {
  std::string line;
  if (!std::getline(is, line)) throw Error("empty CSV", "csv");
  const bool half = line.find("t_index") != std::string::npos;
  if (half != f.is_half()) throw Error("CSV layout does not match grid", "csv");
  std::size_t count = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    const std::size_t want = static_cast<std::size_t>(f.base.d + (half ? 1 : 0) + 2);
    if (cells.size() != want) throw Error("malformed CSV row: " + line, "csv");
    const int i0 = std::stoi(cells[0]);
    const int i1 = f.base.d == 2 ? std::stoi(cells[1]) : 0;
    const int k = half ? std::stoi(cells[static_cast<std::size_t>(f.base.d)]) : 0;
    if (i0 < 0 || i0 >= f.base.n || i1 < 0 || i1 >= f.base.n || k < 0 || k >= f.rows())
      throw Error("CSV index out of range: " + line, "csv");
    f.at(k, f.base.index(i0, i1)) = cplx(std::stod(cells[want - 2]), std::stod(cells[want - 1]));
    ++count;
  }
  if (count != f.values.size()) throw Error("CSV value count does not match grid", "csv");
  f.check_finite();
}

// ----------------------------------------------------------- interpolation

/// Multilinear interpolant of boundary samples (zero outside the lattice
/// hull), with the gradient of the interpolant on each cell.
inline Function interpolate(const GridFunction& f) {
  if (f.is_half()) throw Error("interpolation expects boundary samples", "grid");
  auto data = std::make_shared<GridFunction>(f);
  const BoundaryGrid g = f.base;
  auto locate = [g](double x, int& i, double& w) {
    const double s = (x + g.L) / g.h() - 0.5;
    i = static_cast<int>(std::floor(s));
    w = s - i;
    return i >= 0 && i + 1 < g.n;
  };
  Function u;
  u.dim = g.d;
  u.support_center = Vec(g.d);
  u.value = [data, g, locate](const Vec& x) -> cplx {
    int i0 = 0, i1 = 0;
    double w0 = 0, w1 = 0;
    if (!locate(x[0], i0, w0)) return 0.0;
    if (g.d == 1) return (1 - w0) * data->values[static_cast<std::size_t>(i0)] + w0 * data->values[static_cast<std::size_t>(i0 + 1)];
    if (!locate(x[1], i1, w1)) return 0.0;
    const auto v = [&](int a, int b) { return data->values[g.index(a, b)]; };
    return (1 - w1) * ((1 - w0) * v(i0, i1) + w0 * v(i0 + 1, i1)) + w1 * ((1 - w0) * v(i0, i1 + 1) + w0 * v(i0 + 1, i1 + 1));
  };
  u.gradient = [data, g, locate](const Vec& x) {
    CVec grad(g.d);
    int i0 = 0, i1 = 0;
    double w0 = 0, w1 = 0;
    if (!locate(x[0], i0, w0)) return grad;
    const double h = g.h();
    if (g.d == 1) {
      grad[0] = (data->values[static_cast<std::size_t>(i0 + 1)] - data->values[static_cast<std::size_t>(i0)]) / h;
      return grad;
    }
    if (!locate(x[1], i1, w1)) return grad;
    const auto v = [&](int a, int b) { return data->values[g.index(a, b)]; };
    grad[0] = ((1 - w1) * (v(i0 + 1, i1) - v(i0, i1)) + w1 * (v(i0 + 1, i1 + 1) - v(i0, i1 + 1))) / h;
    grad[1] = ((1 - w0) * (v(i0, i1 + 1) - v(i0, i1)) + w0 * (v(i0 + 1, i1 + 1) - v(i0 + 1, i1))) / h;
    return grad;
  };
  return u;
}

// --------------------------------------------------------- pair quadrature

/// Offset-shell quadrature for \iint f(x, y) dx dy over |y - x| >= h_min:
/// x runs over the lattice (weight h^d), y = x + r w with r in geometric
/// bands [h_min 2^j, h_min 2^{j+1}] (capped at R_max) and w on S^{d-1}.
struct PairQuadrature {
  struct Band {
    double lo = 0.0;
    double hi = 0.0;
    int panels = 1;
    std::vector<double> r;  // radial nodes
    std::vector<double> w;  // radial weights including r^{d-1}
  };
  enum class Mode { tensor, monte_carlo };

  double h_min = 0.0;
  double R_max = 0.0;
  int radial_order = 6;
  int angles = 64;
  Mode mode = Mode::tensor;
  std::uint64_t seed = 42;
  bool clip_to_box = false;
  std::vector<Band> bands;
  std::vector<Vec> directions;
  std::vector<double> direction_weights;

  struct Options {
    double h_min_factor = 0.5;  // h_min = factor * h
    int radial_order = 6;
    double panel_width = 4.0;  // radial panel width in units of h
    int angles = 64;
    Mode mode = Mode::tensor;
    std::uint64_t seed = 42;
    bool clip_to_box = false;
  };

  static PairQuadrature make(const BoundaryGrid& g, const Options& o) { return make(g, o, o.h_min_factor * g.h()); }

  static PairQuadrature make(const BoundaryGrid& g, const Options& o, double h_min) {
    if (h_min < g.h() / 2 * (1 - 1e-12)) throw Error("h_min must be at least half the grid spacing", "h_min");
    if (o.radial_order < 1) throw Error("radial order must be >= 1", "radial_order");
    if (g.d == 2 && o.angles < 4) throw Error("need at least 4 angles", "angles");
    PairQuadrature q;
    q.h_min = h_min;
    q.R_max = 2.0 * g.box().diameter();
    q.radial_order = o.radial_order;
    q.angles = g.d == 1 ? 2 : o.angles;
    q.mode = o.mode;
    q.seed = o.seed;
    q.clip_to_box = o.clip_to_box;
    double lo = h_min;
    while (lo < q.R_max * (1 - 1e-12)) {
      Band b;
      b.lo = lo;
      b.hi = std::min(2.0 * lo, q.R_max);
      b.panels = std::max(1, static_cast<int>(std::ceil((b.hi - b.lo) / (o.panel_width * g.h()) - 1e-9)));
      const NodesWeights nw = composite_gauss(o.radial_order, b.panels, b.lo, b.hi);
      for (std::size_t i = 0; i < nw.x.size(); ++i) {
        b.r.push_back(nw.x[i]);
        b.w.push_back(nw.w[i] * std::pow(nw.x[i], g.d - 1));
      }
      q.bands.push_back(std::move(b));
      lo *= 2.0;
    }
    if (q.bands.size() < 4) throw Error("pair quadrature needs at least 4 bands; refine the grid", "h_min");
    if (g.d == 1) {
      q.directions = {Vec{1.0}, Vec{-1.0}};
      q.direction_weights = {1.0, 1.0};
    } else {
      for (int j = 0; j < q.angles; ++j) {
        const double th = 2.0 * std::numbers::pi * (j + 0.5) / q.angles;
        q.directions.push_back(Vec{std::cos(th), std::sin(th)});
        q.direction_weights.push_back(2.0 * std::numbers::pi / q.angles);
      }
    }
    return q;
  }

  /// Total weight of a band: |S^{d-1}| \int_lo^hi r^{d-1} dr.
  double band_measure(std::size_t b) const {
    double s = 0.0;
    for (double w : bands[b].w) s += w;
    double ang = 0.0;
    for (double w : direction_weights) ang += w;
    return s * ang;
  }
};

/// Distance from y to the boundary of `box` along unit direction w.
inline double exit_distance(const Box& box, const Vec& y, const Vec& w) {
  double r = std::numeric_limits<double>::infinity();
  for (int i = 0; i < y.n; ++i) {
    if (w[i] > 0) r = std::min(r, (box.hi[i] - y[i]) / w[i]);
    if (w[i] < 0) r = std::min(r, (box.lo[i] - y[i]) / w[i]);
  }
  return std::max(r, 0.0);
}

struct PairNode {
  Vec x;
  Vec y;
  double r = 0.0;
  double weight = 0.0;  // includes h^d, radial and angular weights
};

/// Visits every pair node attached to lattice point `xi`, band-major. In
/// monte_carlo mode angles and radii are jittered within strata using the
/// counter-based generator keyed by (seed, xi, band).
template <class Fn>
void for_each_pair_at(const BoundaryGrid& g, const PairQuadrature& q, std::size_t xi, Fn&& fn) {
  const Vec x = g.point(xi);
  const double hv = g.cell_volume();
  const Box box = g.box();
  const int d = g.d;
  for (std::size_t b = 0; b < q.bands.size(); ++b) {
    const auto& band = q.bands[b];
    if (q.mode == PairQuadrature::Mode::monte_carlo && d == 2) {
      const std::uint64_t stream = static_cast<std::uint64_t>(xi) * 131u + b;
      const double dth = 2.0 * std::numbers::pi / q.angles;
      const int nr = static_cast<int>(band.r.size());
      const double dr = (band.hi - band.lo) / nr;
      std::uint64_t k = 0;
      for (int j = 0; j < q.angles; ++j) {
        const double th = dth * (j + counter_uniform(q.seed, stream, k++));
        const Vec w{std::cos(th), std::sin(th)};
        for (int m = 0; m < nr; ++m) {
          const double r = band.lo + dr * (m + counter_uniform(q.seed, stream, k++));
          fn(PairNode{x, x + r * w, r, hv * dth * dr * r});
        }
      }
      continue;
    }
    for (std::size_t j = 0; j < q.directions.size(); ++j) {
      const Vec& w = q.directions[j];
      if (q.clip_to_box) {
        const double rexit = exit_distance(box, x, w);
        const double hi = std::min(band.hi, rexit);
        if (hi <= band.lo) continue;
        const NodesWeights nw = composite_gauss(q.radial_order, band.panels, band.lo, hi);
        for (std::size_t m = 0; m < nw.x.size(); ++m)
          fn(PairNode{x, x + nw.x[m] * w, nw.x[m], hv * q.direction_weights[j] * nw.w[m] * std::pow(nw.x[m], d - 1)});
        continue;
      }
      for (std::size_t m = 0; m < band.r.size(); ++m)
        fn(PairNode{x, x + band.r[m] * w, band.r[m], hv * q.direction_weights[j] * band.w[m]});
    }
  }
}

/// Streams all pair nodes (x over the lattice in order).
template <class Fn>
void pair_nodes(const BoundaryGrid& g, const PairQuadrature& q, Fn&& fn) {
  for (std::size_t i = 0; i < g.size(); ++i) for_each_pair_at(g, q, i, fn);
}

/// Sum over pair nodes of term(node), parallel over fixed lattice blocks with
/// an ordered compensated reduction.
template <class Term>
double pair_sum(const BoundaryGrid& g, const PairQuadrature& q, Term&& term, std::size_t block = 16) {
  const std::size_t N = g.size();
  const std::size_t blocks = (N + block - 1) / block;
  std::vector<double> partial(blocks, 0.0);
  parallel::for_blocks(blocks, [&](std::size_t b) {
    KahanSum s;
    for (std::size_t i = b * block; i < std::min(N, (b + 1) * block); ++i)
      for_each_pair_at(g, q, i, [&](const PairNode& node) { s += term(node); });
    partial[b] = s.value();
  });
  KahanSum total;
  for (double v : partial) total += v;
  return total.value();
}

}  // namespace magtrace
