#pragma once

// Empirical reports: both sides of each inequality with their ratio tracked
// under grid refinement, and log-log slope fits for the scaling laws.

#include "magtrace/trace_extension.hpp"

namespace magtrace {

/// Weight exponent linking W^{1,p}_{A,gamma} on the half-space to W^{s,p} traces.
inline double gamma_for(double s, double p) { return 1.0 - (1.0 - s) * p; }

inline void validate_sp(double s, double p) {
  if (!(s > 0.0 && s < 1.0)) throw Error("s must lie in (0,1)", "s");
  if (!(p >= 1.0) || !std::isfinite(p)) throw Error("p must be >= 1", "p");
}

struct RatioReport {
  std::string label;
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
  bool zero_data = false;
  bool converged = false;
  /// (resolution, ratio) per refinement level, coarse to fine.
  std::vector<std::pair<int, double>> refinement_trace;
  std::vector<std::pair<double, double>> sides;
  nlohmann::json params = nlohmann::json::object();
  std::vector<RatioReport> secondary;

  static constexpr double kDriftTolerance = 0.15;

  /// Records one level; the last call fixes lhs, rhs and ratio.
  void add_level(int resolution, double l, double r) {
    lhs = l;
    rhs = r;
    zero_data = l == 0.0 && r == 0.0;
    ratio = zero_data ? 0.0 : (r > 0.0 ? l / r : std::numeric_limits<double>::infinity());
    refinement_trace.emplace_back(resolution, ratio);
    sides.emplace_back(l, r);
    finalize();
  }

  double drift() const {
    if (refinement_trace.size() < 2) return std::numeric_limits<double>::infinity();
    const double last = refinement_trace.back().second;
    const double prev = refinement_trace[refinement_trace.size() - 2].second;
    if (last == 0.0 && prev == 0.0) return 0.0;
    return std::abs(last - prev) / std::abs(last);
  }

  void finalize() {
    converged = zero_data || (std::isfinite(ratio) && drift() <= kDriftTolerance);
  }

  bool all_converged() const {
    if (!converged) return false;
    for (const auto& r : secondary)
      if (!r.all_converged()) return false;
    return true;
  }

  RatioReport* find(const std::string& name) {
    for (auto& r : secondary)
      if (r.label == name) return &r;
    return nullptr;
  }

  nlohmann::json to_json() const {
    nlohmann::json trace = nlohmann::json::array();
    for (std::size_t k = 0; k < refinement_trace.size(); ++k) {
      const auto& [n, r] = refinement_trace[k];
      trace.push_back({{"resolution", n}, {"ratio", std::isfinite(r) ? nlohmann::json(r) : nlohmann::json("inf")},
                       {"lhs", sides[k].first}, {"rhs", sides[k].second}});
    }
    nlohmann::json j = {{"label", label}, {"lhs", lhs}, {"rhs", rhs}, {"ratio", std::isfinite(ratio) ? nlohmann::json(ratio) : nlohmann::json("inf")},
                        {"status", zero_data ? "ZERO_DATA" : (converged ? "CONVERGED" : "UNCONVERGED")},
                        {"drift", refinement_trace.size() > 1 ? nlohmann::json(drift()) : nlohmann::json(nullptr)},
                        {"refinement_trace", trace}, {"params", params}};
    if (!secondary.empty()) {
      j["secondary"] = nlohmann::json::array();
      for (const auto& r : secondary) j["secondary"].push_back(r.to_json());
    }
    return j;
  }
};

struct SlopeReport {
  std::string label;
  /// (log parameter, log quantity)
  std::vector<std::pair<double, double>> points;
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::optional<double> min_slope;
  std::optional<double> min_r_squared;
  bool zero_data = false;
  nlohmann::json params = nlohmann::json::object();

  bool pass() const {
    if (zero_data) return true;
    if (min_slope && !(slope >= *min_slope)) return false;
    if (min_r_squared && !(r_squared >= *min_r_squared)) return false;
    return true;
  }

  nlohmann::json to_json() const {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& [x, y] : points) pts.push_back({x, y});
    nlohmann::json j = {{"label", label}, {"points", pts}, {"slope", slope}, {"intercept", intercept},
                        {"r_squared", r_squared}, {"params", params}, {"pass", pass()}};
    if (min_slope) j["min_slope"] = *min_slope;
    if (min_r_squared) j["min_r_squared"] = *min_r_squared;
    if (zero_data) j["status"] = "ZERO_DATA";
    return j;
  }
};

/// Ordinary least squares of log y on log x.
inline SlopeReport loglog_slope(const std::vector<std::pair<double, double>>& xy) {
  if (xy.size() < 4) throw Error("slope fit needs at least 4 points", "points");
  SlopeReport r;
  for (const auto& [x, y] : xy) {
    if (!(x > 0.0) || !(y > 0.0)) throw Error("slope fit needs positive values", "points");
    r.points.emplace_back(std::log(x), std::log(y));
  }
  const double n = static_cast<double>(r.points.size());
  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : r.points) mx += x, my += y;
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& [x, y] : r.points) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
    syy += (y - my) * (y - my);
  }
  if (sxx == 0.0) throw Error("slope fit needs distinct abscissae", "points");
  r.slope = sxy / sxx;
  r.intercept = my - r.slope * mx;
  r.r_squared = syy == 0.0 ? 1.0 : std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0);
  return r;
}

// ----------------------------------------------------------------- grids

/// Refinement ladder: level l uses n 2^l lattice points per axis and
/// t_count 2^l graded t nodes between t_min and T.
struct LabGrid {
  int d = 1;
  int n = 64;
  double L = 2.5;
  int t_count = 64;
  double T = 0.0;  // 0 = max(1, 2 beta^{-1/2}, reach of the datum)
  double t_min = 1e-3;
  int levels = 3;
  /// level-0 grading ratio; replaces t_min when set
  std::optional<double> r;
  /// weight exponent; 1 - (1 - s) p unless overridden
  std::optional<double> gamma;
  PairQuadrature::Options pairs;

  void validate() const {
    BoundaryGrid(d, L, n).validate();
    if (t_count < 4) throw Error("need at least 4 t nodes", "t_count");
    if (!(t_min > 0.0)) throw Error("t_min must be positive", "t_min");
    if (levels < 2) throw Error("refinement needs at least two levels", "levels");
    if (T < 0.0) throw Error("T must be positive (or 0 for automatic)", "T");
    if (r && !(*r > 0.0 && *r < 1.0)) throw Error("grading ratio r must lie in (0,1)", "r");
    if (gamma && !(*gamma < 1.0)) throw Error("gamma must be < 1", "gamma");
  }

  double weight_exponent(double s, double p) const { return gamma ? *gamma : gamma_for(s, p); }

  BoundaryGrid boundary(int level) const { return BoundaryGrid(d, L, n << level); }

  double height(double beta, double reach = 0.0) const {
    if (T > 0.0) return T;
    return std::max({1.0, beta > 0.0 ? 2.0 / std::sqrt(beta) : 0.0, reach});
  }

  HalfSpaceGrid half(int level, double height, double gamma) const {
    const int K = t_count << level;
    const double tm = r ? height * std::pow(*r, t_count - 1) : t_min;
    if (!(tm < height)) throw Error("t_min must be below T", "t_min");
    const double rk = std::pow(tm / height, 1.0 / (K - 1));
    return HalfSpaceGrid(boundary(level), height, K, rk, gamma);
  }

  nlohmann::json to_json() const {
    nlohmann::json j = {{"d", d}, {"n", n}, {"L", L}, {"t_count", t_count}, {"T", T}, {"t_min", t_min}, {"levels", levels}};
    if (r) j["r"] = *r;
    if (gamma) j["gamma"] = *gamma;
    return j;
  }
};

namespace detail {

inline Box working_box(const LabGrid& g, double height) {
  Box b{Vec(g.d + 1), Vec(g.d + 1)};
  for (int i = 0; i < g.d; ++i) b.lo[i] = -g.L, b.hi[i] = g.L;
  b.lo[g.d] = 0.0;
  b.hi[g.d] = height;
  return b;
}

inline void check_beta(const PotentialField& field, const Box& box, double beta) {
  if (!(beta >= 0.0)) throw Error("beta must be non-negative", "beta");
  const double sup = sup_norm_dA(field, box, 9);
  if (sup > beta * (1.0 + 1e-9) + 1e-12)
    throw Error("beta " + std::to_string(beta) + " is below the measured sup|dA| " + std::to_string(sup), "beta");
}

inline double reach(const Function& U) {
  return U.compact() ? norm(U.support_center) + U.support_radius : 0.0;
}

}  // namespace detail

/// u(x) = U(x, 0) with the tangential gradient.
inline Function boundary_restriction(const Function& U) {
  Function u;
  u.dim = U.dim - 1;
  u.support_center = head(U.support_center);
  u.support_radius = U.support_radius;
  u.value = [U](const Vec& x) { return U(lift(x, 0.0)); };
  u.gradient = [U](const Vec& x) {
    const CVec g = U.grad(lift(x, 0.0));
    CVec r(x.n);
    for (int i = 0; i < x.n; ++i) r[i] = g[i];
    return r;
  };
  return u;
}

/// Trace inequality: lhs = |U(.,0)|^p_{W^{s,p}_{A^par}},
/// rhs = \iint (|grad_A U|^p + beta^{p/2} |U|^p) t^{-gamma}.
/// Secondary "interpolation": ||U(.,0)||_p^p against E_grad^{1-s} E_0^s.
inline RatioReport trace_inequality_report(const Function& U, const PotentialField& field, double s, double p,
                                           double beta, const LabGrid& grid) {
  validate_sp(s, p);
  grid.validate();
  if (U.dim != grid.d + 1 || field.dimension != grid.d + 1) throw Error("dimension mismatch", "dimension");
  const double gamma = grid.weight_exponent(s, p);
  const double height = grid.height(beta, detail::reach(U));
  detail::check_beta(field, detail::working_box(grid, height), beta);
  const Function u = boundary_restriction(U);
  const PotentialField par = restrict_parallel(field);
  RatioReport main, interp;
  main.label = "trace";
  interp.label = "interpolation";
  for (int l = 0; l < grid.levels; ++l) {
    const BoundaryGrid g = grid.boundary(l);
    const HalfSpaceGrid h = grid.half(l, height, gamma);
    const auto q = PairQuadrature::make(g, grid.pairs);
    const double semi = magnetic_gagliardo(u, par, s, p, QuadratureMeasure::lebesgue(), g, q).value_pow();
    const WeightedEnergy E = weighted_energy(sample(h, U), field, p);
    main.add_level(g.n, semi, E.gradient + std::pow(beta, p / 2) * E.mass);
    const double up = lp_norm_pow(sample(g, u), p);
    interp.add_level(g.n, up, std::pow(E.gradient, 1 - s) * std::pow(E.mass, s));
  }
  main.params = {{"s", s}, {"p", p}, {"beta", beta}, {"gamma", gamma}, {"T", height}, {"grid", grid.to_json()}};
  interp.params = main.params;
  main.secondary.push_back(interp);
  return main;
}

/// Extension inequality for U = Ext u: lhs = \iint |grad_A U|^p t^{-gamma},
/// rhs = |u|^p_{W^{s,p}_{A^par}} + beta^{sp/2} ||u||_p^p. Secondary "lp":
/// \iint |U|^p t^{-gamma} against beta^{-(1-s)p/2} ||u||_p^p.
inline RatioReport extension_inequality_report(const Function& u, const PotentialField& field, double s, double p,
                                               double beta, const LabGrid& grid) {
  validate_sp(s, p);
  grid.validate();
  if (u.dim != grid.d || field.dimension != grid.d + 1) throw Error("dimension mismatch", "dimension");
  if (!(beta > 0.0)) throw Error("extension needs beta > 0", "beta");
  const double gamma = grid.weight_exponent(s, p);
  const ExtensionKernel kernel(grid.d, beta);
  const double height = grid.height(beta);
  detail::check_beta(field, detail::working_box(grid, height), beta);
  const PotentialField par = restrict_parallel(field);
  RatioReport main, lp;
  main.label = "extension";
  lp.label = "lp";
  for (int l = 0; l < grid.levels; ++l) {
    const BoundaryGrid g = grid.boundary(l);
    const HalfSpaceGrid h = grid.half(l, height, gamma);
    const auto q = PairQuadrature::make(g, grid.pairs);
    const double semi = magnetic_gagliardo(u, par, s, p, QuadratureMeasure::lebesgue(), g, q).value_pow();
    const double up = lp_norm_pow(sample(g, u), p);
    const WeightedEnergy E = weighted_energy(extend_grid(u, field, kernel, h), field, p);
    main.add_level(g.n, E.gradient, semi + std::pow(beta, s * p / 2) * up);
    lp.add_level(g.n, E.mass, std::pow(beta, -(1 - s) * p / 2) * up);
  }
  main.params = {{"s", s}, {"p", p}, {"beta", beta}, {"gamma", gamma}, {"T", height}, {"a", kernel.a()}, {"grid", grid.to_json()}};
  lp.params = main.params;
  main.secondary.push_back(lp);
  return main;
}

/// Slope of log(|u|^p_{W^{s,p}_{A_beta}} / ||u||_p^p) against log beta.
inline SlopeReport poincare_scaling(const Function& u, const std::function<PotentialField(double)>& family, double s,
                                    double p, const std::vector<double>& betas, const BoundaryGrid& g,
                                    const PairQuadrature& q) {
  validate_sp(s, p);
  if (betas.size() < 5) throw Error("Poincare scaling needs at least 5 beta values", "beta_list");
  for (std::size_t i = 1; i < betas.size(); ++i)
    if (!(betas[i] > betas[i - 1] && betas[0] > 0.0)) throw Error("beta values must be positive and increasing", "beta_list");
  const double up = lp_norm_pow(sample(g, u), p);
  if (up == 0.0) {
    SlopeReport z;
    z.label = "poincare";
    z.zero_data = true;
    return z;
  }
  std::vector<std::pair<double, double>> xy;
  for (double beta : betas) {
    const PotentialField A = family(beta);
    if (!has_constant_dA(A, g.box())) throw Error("field family member has non-constant dA", "field");
    const double semi = magnetic_gagliardo(u, A, s, p, QuadratureMeasure::lebesgue(), g, q).value_pow();
    xy.emplace_back(beta, semi / up);
  }
  SlopeReport r = loglog_slope(xy);
  r.label = "poincare";
  r.min_slope = s * p / 2 - 0.15;
  r.min_r_squared = 0.9;
  r.params = {{"s", s}, {"p", p}, {"betas", betas}, {"grid", {{"d", g.d}, {"n", g.n}, {"L", g.L}}}};
  return r;
}

/// c(b) = \int_{R^d} |e^{i |h| (b.h)} - 1|^p |h|^{-d-sp} dh, via polar
/// coordinates: (K/2) \sum_w |b.w|^{sp/2} with
/// K = \int_0^inf |2 sin(rho/2)|^p rho^{-1-sp/2} d rho.
inline double shifted_gap_constant(const Vec& b, double s, double p, const std::vector<Vec>& dirs,
                                   const std::vector<double>& dir_weights) {
  const double e = s * p / 2;
  const double period = 2.0 * std::numbers::pi;
  const int periods = 4000;
  KahanSum k;
  auto f = [&](double rho) { return std::pow(std::abs(2.0 * std::sin(rho / 2)), p) * std::pow(rho, -1.0 - e); };
  // first period graded towards 0, where the integrand is rho^{p-1-sp/2}
  double lo = period * 1e-12;
  for (double hi = period * 1e-11; lo < period; hi = std::min(period, hi * 4)) {
    const NodesWeights g = composite_gauss(16, 1, lo, hi);
    for (std::size_t i = 0; i < g.x.size(); ++i) k += g.w[i] * f(g.x[i]);
    lo = hi;
  }
  for (int j = 1; j < periods; ++j) {
    const NodesWeights g = composite_gauss(16, 2, j * period, (j + 1) * period);
    for (std::size_t i = 0; i < g.x.size(); ++i) k += g.w[i] * f(g.x[i]);
  }
  const double mean = std::pow(2.0, p) * std::tgamma((p + 1) / 2) / (std::sqrt(std::numbers::pi) * std::tgamma(p / 2 + 1));
  k += mean * std::pow(periods * period, -e) / e;
  double ang = 0.0;
  for (std::size_t i = 0; i < dirs.size(); ++i) ang += dir_weights[i] * std::pow(std::abs(dot(b, dirs[i])), e);
  return 0.5 * k.value() * ang;
}

/// Constant-field improved trace: lhs = |u|^p_{W^{s,p}_{A^par}} + |dA|^{sp/2} ||u||_p^p,
/// rhs = \iint |grad_A U|^p t^{-gamma} (no zeroth-order term). The secondary
/// reports reproduce the lambda = 1, 2 split used in the argument:
///   shifted_1, shifted_2: S_lambda / rhs
///   split: seminorm^p / (2^{p-1} (S_1 + G)),  G = c(b) ||u||_p^p
///   gap:   G / (2^{p-1} (S_1 + S_2))
///   poincare (d >= 2): |dA^par|^{sp/2} ||u||_p^p / seminorm^p
inline RatioReport constant_field_trace_report(const Function& U, const PotentialField& field, double s, double p,
                                               const LabGrid& grid) {
  validate_sp(s, p);
  grid.validate();
  if (U.dim != grid.d + 1 || field.dimension != grid.d + 1) throw Error("dimension mismatch", "dimension");
  const double gamma = grid.weight_exponent(s, p);
  const double height = grid.height(0.0, detail::reach(U));
  const Box box = detail::working_box(grid, height);
  if (!has_constant_dA(field, box, field.has_jacobian() ? 1e-9 : 1e-6)) throw Error("field must have constant dA", "field");
  std::optional<double> fd;
  if (!field.has_jacobian()) fd = 1e-4 * box.diameter();
  const double dA = exterior_derivative(field, box.lo + 0.5 * (box.hi - box.lo), fd).norm();
  const Function u = boundary_restriction(U);
  const PotentialField par = restrict_parallel(field);
  double dApar = 0.0;
  if (grid.d >= 2) {
    std::optional<double> fd;
    if (!par.has_jacobian()) fd = 1e-4;
    dApar = exterior_derivative(par, Vec(grid.d), fd).norm();
  }
  RatioReport main, s1r, s2r, split, gap, poin;
  main.label = "constant_field_trace";
  s1r.label = "shifted_1";
  s2r.label = "shifted_2";
  split.label = "split";
  gap.label = "gap";
  poin.label = "poincare";
  const double c2 = std::pow(2.0, p - 1);
  for (int l = 0; l < grid.levels; ++l) {
    const BoundaryGrid g = grid.boundary(l);
    const HalfSpaceGrid h = grid.half(l, height, gamma);
    const auto q = PairQuadrature::make(g, grid.pairs);
    const double semi = magnetic_gagliardo(u, par, s, p, QuadratureMeasure::lebesgue(), g, q).value_pow();
    const double S1 = shifted_gagliardo(u, field, 1.0, s, p, g, q).value_pow();
    const double S2 = shifted_gagliardo(u, field, 2.0, s, p, g, q).value_pow();
    const double up = lp_norm_pow(sample(g, u), p);
    const ShiftedPhase ph(field, 1.0, box);
    const double G = shifted_gap_constant(ph.normal_flux(), s, p, q.directions, q.direction_weights) * up;
    const double Eg = weighted_energy(sample(h, U), field, p).gradient;
    main.add_level(g.n, semi + std::pow(dA, s * p / 2) * up, Eg);
    s1r.add_level(g.n, S1, Eg);
    s2r.add_level(g.n, S2, Eg);
    split.add_level(g.n, semi, c2 * (S1 + G));
    gap.add_level(g.n, G, c2 * (S1 + S2));
    if (grid.d >= 2) poin.add_level(g.n, std::pow(dApar, s * p / 2) * up, semi);
  }
  main.params = {{"s", s}, {"p", p}, {"dA", dA}, {"gamma", gamma}, {"T", height}, {"grid", grid.to_json()}};
  for (RatioReport* r : {&s1r, &s2r, &split, &gap}) {
    r->params = main.params;
    main.secondary.push_back(*r);
  }
  if (grid.d >= 2) {
    poin.params = main.params;
    main.secondary.push_back(poin);
  }
  return main;
}

/// |seminorm_{mu2}(lambda A) - seminorm_{mu1}(lambda A)| against lambda.
/// With k matching moments the gap decays at least like lambda^{s/(k+1)}.
inline SlopeReport variant_gap(const Function& u, const PotentialField& base, const QuadratureMeasure& mu1,
                               const QuadratureMeasure& mu2, double s, double p, const std::vector<double>& scales,
                               const BoundaryGrid& g, const PairQuadrature& q) {
  validate_sp(s, p);
  if (scales.size() < 4) throw Error("gap sweep needs at least 4 scales", "scales");
  const double lo = *std::min_element(scales.begin(), scales.end());
  const double hi = *std::max_element(scales.begin(), scales.end());
  if (!(lo > 0.0) || hi / lo < 100.0 * (1 - 1e-12)) throw Error("scales must be positive and span two decades", "scales");
  const int k = matching_moments(mu1, mu2);
  if (k < 1) throw Error("measures do not share total mass (moment 0)", "mu");
  std::vector<std::pair<double, double>> xy;
  double worst = 0.0;
  for (double lam : scales) {
    const PotentialField A = scale_field(base, lam);
    const double a = magnetic_gagliardo(u, A, s, p, mu1, g, q).value;
    const double b = magnetic_gagliardo(u, A, s, p, mu2, g, q).value;
    xy.emplace_back(lam, std::abs(b - a));
    worst = std::max(worst, std::abs(b - a));
  }
  SlopeReport r;
  if (worst <= 1e-10) {
    r.zero_data = true;
    for (const auto& [x, y] : xy) r.points.emplace_back(std::log(x), y > 0 ? std::log(y) : -std::numeric_limits<double>::infinity());
  } else {
    r = loglog_slope(xy);
    r.min_slope = s / (k + 1) - 0.15;
  }
  r.label = "variant_gap";
  r.params = {{"s", s}, {"p", p}, {"mu1", mu1.name()}, {"mu2", mu2.name()}, {"matching_moments", k},
              {"max_gap", worst}, {"scales", scales}, {"grid", {{"d", g.d}, {"n", g.n}, {"L", g.L}}}};
  return r;
}

/// Two-sided extension: lhs = two-sided energy, rhs = one-sided energy of
/// U = Ext u; secondary "trace_agreement" compares the lower trace with u.
inline RatioReport whole_space_report(const Function& u, const PotentialField& field, double s, double p, double beta,
                                      const LabGrid& grid) {
  validate_sp(s, p);
  grid.validate();
  const double gamma = grid.weight_exponent(s, p);
  const ExtensionKernel kernel(grid.d, beta);
  const double height = grid.height(beta);
  RatioReport main, agree;
  main.label = "whole_space";
  agree.label = "trace_agreement";
  for (int l = 0; l < grid.levels; ++l) {
    const HalfSpaceGrid h = grid.half(l, height, gamma);
    const GridFunction U = extend_grid(u, field, kernel, h);
    const TwoSidedFunction W = extend_whole_space(U, field, kernel, p);
    double err = 0.0, ref = 0.0;
    for (std::size_t i = 0; i < h.base.size(); ++i) {
      err = std::max(err, std::abs(W.lower.at(0, i) - u(h.base.point(i))));
      ref = std::max(ref, std::abs(u(h.base.point(i))));
    }
    main.add_level(h.base.n, weighted_energy(W, field, p).total(), weighted_energy(U, field, p).total());
    agree.add_level(h.base.n, err, ref);
  }
  main.params = {{"s", s}, {"p", p}, {"beta", beta}, {"gamma", gamma}, {"T", height}, {"grid", grid.to_json()}};
  agree.params = main.params;
  main.secondary.push_back(agree);
  return main;
}

/// Covariant energy of the phase-based two-sided extension over that of the
/// even reflection of the same upper half.
inline RatioReport reflection_report(const Function& u, const PotentialField& field, double s, double p, double beta,
                                     const LabGrid& grid) {
  validate_sp(s, p);
  grid.validate();
  const double gamma = grid.weight_exponent(s, p);
  const ExtensionKernel kernel(grid.d, beta);
  const double height = grid.height(beta);
  RatioReport main;
  main.label = "reflection";
  for (int l = 0; l < grid.levels; ++l) {
    const HalfSpaceGrid h = grid.half(l, height, gamma);
    const GridFunction U = extend_grid(u, field, kernel, h);
    const double phase = weighted_energy(extend_whole_space(U, field, kernel, p), field, p).total();
    const double refl = weighted_energy(reflection_extension(U), field, p).total();
    main.add_level(h.base.n, phase, refl);
  }
  main.params = {{"s", s}, {"p", p}, {"beta", beta}, {"gamma", gamma}, {"T", height}, {"grid", grid.to_json()}};
  return main;
}

}  // namespace magtrace
