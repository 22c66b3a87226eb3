#pragma once

// Sparse multivariate polynomials in up to kMaxDim variables, stored as
// (multi-index, coefficient) tables.

#include <map>
#include <random>
#include <vector>

#include "magtrace/core.hpp"

namespace magtrace {

using MultiIndex = std::array<int, kMaxDim>;

class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(int dim) : dim_(dim) {
    if (dim < 1 || dim > kMaxDim) throw Error("polynomial dimension out of range", "dimension");
  }

  static Polynomial constant(int dim, double c) {
    Polynomial p(dim);
    p.add({0, 0, 0}, c);
    return p;
  }
  /// a . x (+ c)
  static Polynomial linear(const Vec& a, double c = 0.0) {
    Polynomial p(a.n);
    p.add({0, 0, 0}, c);
    for (int i = 0; i < a.n; ++i) {
      MultiIndex e{};
      e[static_cast<std::size_t>(i)] = 1;
      p.add(e, a[i]);
    }
    return p;
  }
  /// Dense polynomial of total degree <= `degree`, coefficients uniform in
  /// [-scale, scale] drawn from a seeded mt19937_64.
  static Polynomial random(int dim, int degree, std::uint64_t seed, double scale = 1.0) {
    Polynomial p(dim);
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> coef(-scale, scale);
    for_each_index(dim, degree, [&](const MultiIndex& e) { p.add(e, coef(gen)); });
    return p;
  }

  int dim() const { return dim_; }
  const std::map<MultiIndex, double>& terms() const { return terms_; }

  Polynomial& add(const MultiIndex& e, double c) {
    if (c == 0.0) return *this;
    auto& slot = terms_[e];
    slot += c;
    if (slot == 0.0) terms_.erase(e);
    return *this;
  }

  int degree() const {
    int d = -1;
    for (const auto& [e, c] : terms_) d = std::max(d, e[0] + e[1] + e[2]);
    return d;
  }

  double operator()(const Vec& x) const {
    if (x.n != dim_) throw Error("point dimension does not match polynomial", "dimension");
    double s = 0.0;
    for (const auto& [e, c] : terms_) {
      double m = c;
      for (int i = 0; i < dim_; ++i)
        for (int k = 0; k < e[static_cast<std::size_t>(i)]; ++k) m *= x[i];
      s += m;
    }
    return s;
  }

  Polynomial derivative(int axis) const {
    Polynomial d(dim_);
    for (const auto& [e, c] : terms_) {
      const int k = e[static_cast<std::size_t>(axis)];
      if (k == 0) continue;
      MultiIndex f = e;
      --f[static_cast<std::size_t>(axis)];
      d.add(f, c * k);
    }
    return d;
  }

  Vec gradient(const Vec& x) const {
    Vec g(dim_);
    for (const auto& [e, c] : terms_) {
      for (int a = 0; a < dim_; ++a) {
        const int k = e[static_cast<std::size_t>(a)];
        if (k == 0) continue;
        double m = c * k;
        for (int i = 0; i < dim_; ++i) {
          const int pw = e[static_cast<std::size_t>(i)] - (i == a ? 1 : 0);
          for (int j = 0; j < pw; ++j) m *= x[i];
        }
        g[a] += m;
      }
    }
    return g;
  }

  /// p(x_1, .., x_{n-1}, sign * x_n): flips odd powers of the last variable.
  Polynomial reflect_last(double sign = -1.0) const {
    Polynomial r(dim_);
    for (const auto& [e, c] : terms_) {
      const int k = e[static_cast<std::size_t>(dim_ - 1)];
      r.add(e, (k % 2 == 1 && sign < 0) ? -c : c);
    }
    return r;
  }

  /// Restriction to the hyperplane x_n = 0, as a polynomial in n-1 variables.
  Polynomial restrict_last() const {
    Polynomial r(dim_ - 1);
    for (const auto& [e, c] : terms_)
      if (e[static_cast<std::size_t>(dim_ - 1)] == 0) r.add(e, c);
    return r;
  }

  /// Scales every coefficient.
  Polynomial scaled(double s) const {
    Polynomial r(dim_);
    for (const auto& [e, c] : terms_) r.add(e, c * s);
    return r;
  }

  friend Polynomial operator+(const Polynomial& a, const Polynomial& b) {
    Polynomial r = a;
    if (r.dim_ == 0) r.dim_ = b.dim_;
    if (a.dim_ != 0 && b.dim_ != 0 && a.dim_ != b.dim_) throw Error("polynomial dimension mismatch", "dimension");
    for (const auto& [e, c] : b.terms_) r.add(e, c);
    return r;
  }

  template <class Fn>
  static void for_each_index(int dim, int degree, Fn&& fn) {
    MultiIndex e{};
    for (e[0] = 0; e[0] <= degree; ++e[0])
      for (e[1] = 0; e[1] <= (dim > 1 ? degree - e[0] : 0); ++e[1])
        for (e[2] = 0; e[2] <= (dim > 2 ? degree - e[0] - e[1] : 0); ++e[2]) fn(e);
  }

 private:
  int dim_ = 0;
  std::map<MultiIndex, double> terms_;
};

}  // namespace magtrace
