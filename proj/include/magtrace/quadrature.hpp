#pragma once

// Gauss-Legendre rules on [0,1], the mirrored node layout used by segment
// potentials, the Duffy-mapped simplex rule, and quadrature measures on [0,1].

#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "magtrace/core.hpp"

namespace magtrace {

struct NodesWeights {
  std::vector<double> x;
  std::vector<double> w;
};

/// Gauss-Legendre nodes on [-1,1] in ascending order, computed by Newton
/// iteration on P_n. Node i and node n-1-i are exact negatives.
inline NodesWeights gauss_legendre(int n) {
  if (n < 1) throw Error("Gauss-Legendre order must be >= 1", "order");
  NodesWeights r;
  r.x.assign(static_cast<std::size_t>(n), 0.0);
  r.w.assign(static_cast<std::size_t>(n), 0.0);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double pp = 1.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p1 = 1.0, p2 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
      }
      pp = n * (z * p1 - p2) / (z * z - 1.0);
      const double dz = p1 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    {
      double p1 = 1.0, p2 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
      }
      pp = n * (z * p1 - p2) / (z * z - 1.0);
    }
    const double w = 2.0 / ((1.0 - z * z) * pp * pp);
    r.x[static_cast<std::size_t>(i)] = -z;
    r.x[static_cast<std::size_t>(n - 1 - i)] = z;
    r.w[static_cast<std::size_t>(i)] = w;
    r.w[static_cast<std::size_t>(n - 1 - i)] = w;
  }
  if (n % 2 == 1) r.x[static_cast<std::size_t>(n / 2)] = 0.0;
  return r;
}

/// Composite Gauss-Legendre rule on [a,b].
inline NodesWeights composite_gauss(int order, int panels, double a, double b) {
  const NodesWeights g = gauss_legendre(order);
  NodesWeights r;
  const double width = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * width;
    for (int i = 0; i < order; ++i) {
      r.x.push_back(lo + 0.5 * width * (1.0 + g.x[static_cast<std::size_t>(i)]));
      r.w.push_back(0.5 * width * g.w[static_cast<std::size_t>(i)]);
    }
  }
  return r;
}

/// Composite Gauss rule on [0,1]: `order` points per panel, `panels` equal
/// subintervals. Exact for polynomials of degree <= 2*order-1.
struct SegmentRule {
  int order = 16;
  int panels = 1;

  int points() const { return order * panels; }
  friend bool operator<(const SegmentRule& a, const SegmentRule& b) {
    return std::pair(a.order, a.panels) < std::pair(b.order, b.panels);
  }
  friend bool operator==(const SegmentRule& a, const SegmentRule& b) = default;

  /// Smallest single-panel rule integrating a degree-`degree` polynomial exactly.
  static SegmentRule exact_for_degree(int degree) {
    return SegmentRule{std::max(1, (degree + 2) / 2), 1};
  }
};

/// Nodes of a SegmentRule stored as mirrored pairs (t, 1-t) with t < 1/2 and a
/// shared weight, plus an optional centre node. Evaluating pairs through the
/// coefficients (1-t, t) and (t, 1-t) makes reversing a segment permute the
/// evaluation points bit-for-bit.
struct MirroredNodes {
  std::vector<double> t;
  std::vector<double> w;
  double center_weight = 0.0;
  bool has_center = false;
};

inline MirroredNodes make_mirrored(const SegmentRule& rule) {
  if (rule.order < 1 || rule.panels < 1) throw Error("segment rule needs order >= 1 and panels >= 1", "rule");
  const NodesWeights g = gauss_legendre(rule.order);
  const int total = rule.order * rule.panels;
  MirroredNodes m;
  for (int gi = 0; gi < total / 2; ++gi) {
    const int p = gi / rule.order;
    const int i = gi % rule.order;
    const double lo = static_cast<double>(p) / rule.panels;
    const double width = 1.0 / rule.panels;
    m.t.push_back(lo + 0.5 * width * (1.0 + g.x[static_cast<std::size_t>(i)]));
    m.w.push_back(0.5 * width * g.w[static_cast<std::size_t>(i)]);
  }
  if (total % 2 == 1) {
    m.has_center = true;
    m.center_weight = 0.5 * g.w[static_cast<std::size_t>(rule.order / 2)] / rule.panels;
  }
  return m;
}

/// Process-wide cache of mirrored nodes; entries are never evicted.
inline const MirroredNodes& mirrored_nodes(const SegmentRule& rule) {
  static std::mutex mu;
  static std::map<SegmentRule, std::unique_ptr<MirroredNodes>> cache;
  std::lock_guard lock(mu);
  auto it = cache.find(rule);
  if (it == cache.end()) it = cache.emplace(rule, std::make_unique<MirroredNodes>(make_mirrored(rule))).first;
  return *it->second;
}

/// Tensor Gauss rule mapped to the simplex {(t,s): 0<=s<=1, 0<=t<=1-s} via
/// t = (1-s) u. Weights include the Jacobian (1-s).
struct SimplexRule {
  std::vector<double> t, s, w;
};

inline SimplexRule simplex_rule(int order) {
  const NodesWeights g = composite_gauss(order, 1, 0.0, 1.0);
  SimplexRule r;
  for (std::size_t i = 0; i < g.x.size(); ++i) {
    for (std::size_t j = 0; j < g.x.size(); ++j) {
      const double s = g.x[i];
      const double u = g.x[j];
      r.s.push_back(s);
      r.t.push_back((1.0 - s) * u);
      r.w.push_back(g.w[i] * g.w[j] * (1.0 - s));
    }
  }
  return r;
}

/// Exact rational, used for measure moments.
struct Fraction {
  long long num = 0;
  long long den = 1;

  static Fraction make(long long n, long long d) {
    if (d < 0) n = -n, d = -d;
    const long long g = std::gcd(n < 0 ? -n : n, d);
    return g == 0 ? Fraction{0, 1} : Fraction{n / g, d / g};
  }
  friend Fraction operator+(Fraction a, Fraction b) {
    return make(a.num * b.den + b.num * a.den, a.den * b.den);
  }
  friend Fraction operator*(Fraction a, Fraction b) { return make(a.num * b.num, a.den * b.den); }
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

/// Finite measure on [0,1]: weighted atoms plus a multiple of Lebesgue measure.
struct QuadratureMeasure {
  struct Atom {
    double node;
    double weight;
    std::optional<Fraction> exact_node;
    std::optional<Fraction> exact_weight;
  };
  enum class Kind { lebesgue, midpoint, endpoints, simpson, custom };

  std::vector<Atom> atoms;
  double continuous_weight = 0.0;
  Kind kind = Kind::custom;

  std::string name() const {
    switch (kind) {
      case Kind::lebesgue: return "lebesgue";
      case Kind::midpoint: return "midpoint";
      case Kind::endpoints: return "endpoints";
      case Kind::simpson: return "simpson";
      default: return "custom";
    }
  }

  double total_mass() const {
    double m = continuous_weight;
    for (const auto& a : atoms) m += a.weight;
    return m;
  }

  static Atom exact_atom(Fraction node, Fraction weight) {
    return Atom{node.value(), weight.value(), node, weight};
  }

  static QuadratureMeasure lebesgue() { return {{}, 1.0, Kind::lebesgue}; }
  static QuadratureMeasure midpoint() {
    return {{exact_atom({1, 2}, {1, 1})}, 0.0, Kind::midpoint};
  }
  static QuadratureMeasure endpoints() {
    return {{exact_atom({0, 1}, {1, 2}), exact_atom({1, 1}, {1, 2})}, 0.0, Kind::endpoints};
  }
  static QuadratureMeasure simpson() {
    return {{exact_atom({0, 1}, {1, 6}), exact_atom({1, 2}, {2, 3}), exact_atom({1, 1}, {1, 6})},
            0.0,
            Kind::simpson};
  }
  static QuadratureMeasure custom(std::vector<std::pair<double, double>> node_weight, double continuous = 0.0) {
    QuadratureMeasure m;
    m.continuous_weight = continuous;
    for (auto [t, w] : node_weight) {
      if (t < 0.0 || t > 1.0) throw Error("measure atoms must lie in [0,1]", "mu");
      m.atoms.push_back(Atom{t, w, std::nullopt, std::nullopt});
    }
    return m;
  }
  static QuadratureMeasure named(const std::string& name) {
    if (name == "lebesgue") return lebesgue();
    if (name == "midpoint") return midpoint();
    if (name == "endpoints") return endpoints();
    if (name == "simpson") return simpson();
    throw Error("unknown measure '" + name + "'", "mu");
  }
};

/// Moments \int t^j dmu for j = 0..up_to. Rational arithmetic is used when every
/// atom is rational, so named measures reproduce their closed forms exactly.
inline std::vector<double> measure_moments(const QuadratureMeasure& mu, int up_to) {
  if (up_to < 0) throw Error("moment order must be >= 0", "up_to");
  std::vector<double> out;
  const bool exact = std::all_of(mu.atoms.begin(), mu.atoms.end(), [](const auto& a) {
    return a.exact_node.has_value() && a.exact_weight.has_value();
  });
  const bool continuous_exact = mu.continuous_weight == 0.0 || mu.continuous_weight == 1.0;
  for (int j = 0; j <= up_to; ++j) {
    if (exact && continuous_exact && j < 40) {
      Fraction m = Fraction::make(mu.continuous_weight == 1.0 ? 1 : 0, j + 1);
      for (const auto& a : mu.atoms) {
        Fraction p{1, 1};
        for (int k = 0; k < j; ++k) p = p * *a.exact_node;
        m = m + p * *a.exact_weight;
      }
      out.push_back(m.value());
    } else {
      double m = mu.continuous_weight / (j + 1);
      for (const auto& a : mu.atoms) m += a.weight * std::pow(a.node, j);
      out.push_back(m);
    }
  }
  return out;
}

/// Number of leading moments on which two measures agree (to 1e-14 relative).
inline int matching_moments(const QuadratureMeasure& a, const QuadratureMeasure& b, int up_to = 12) {
  const auto ma = measure_moments(a, up_to);
  const auto mb = measure_moments(b, up_to);
  int k = 0;
  while (k <= up_to && std::abs(ma[k] - mb[k]) <= 1e-14 * std::max(1.0, std::abs(ma[k]))) ++k;
  return k;
}

}  // namespace magtrace
