#pragma once

// Small fixed-capacity linear algebra, complex helpers, compensated sums and the
// deterministic block-parallel driver shared by every module.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace magtrace {

using cplx = std::complex<double>;

inline constexpr int kMaxDim = 3;

/// Error raised on contract violations. `field()` names the offending input
/// so the CLI can echo it back.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what, std::string field = {})
      : std::runtime_error(what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Point or covector in R^n, n <= kMaxDim.
struct Vec {
  std::array<double, kMaxDim> c{};
  int n = 0;

  Vec() = default;
  explicit Vec(int dim) : n(dim) {
    if (dim < 0 || dim > kMaxDim) throw Error("dimension out of range", "dimension");
  }
  Vec(std::initializer_list<double> xs) : n(static_cast<int>(xs.size())) {
    if (n > kMaxDim) throw Error("dimension out of range", "dimension");
    std::copy(xs.begin(), xs.end(), c.begin());
  }
  static Vec unit(int dim, int axis) {
    Vec e(dim);
    e[axis] = 1.0;
    return e;
  }

  int size() const { return n; }
  double& operator[](int i) { return c[static_cast<std::size_t>(i)]; }
  double operator[](int i) const { return c[static_cast<std::size_t>(i)]; }

  Vec& operator+=(const Vec& o) {
    for (int i = 0; i < n; ++i) c[i] += o.c[i];
    return *this;
  }
  Vec& operator-=(const Vec& o) {
    for (int i = 0; i < n; ++i) c[i] -= o.c[i];
    return *this;
  }
  Vec& operator*=(double s) {
    for (int i = 0; i < n; ++i) c[i] *= s;
    return *this;
  }
  friend Vec operator+(Vec a, const Vec& b) { return a += b; }
  friend Vec operator-(Vec a, const Vec& b) { return a -= b; }
  friend Vec operator*(double s, Vec a) { return a *= s; }
  friend Vec operator*(Vec a, double s) { return a *= s; }
  friend Vec operator-(Vec a) { return a *= -1.0; }
  friend bool operator==(const Vec& a, const Vec& b) {
    if (a.n != b.n) return false;
    for (int i = 0; i < a.n; ++i)
      if (a.c[i] != b.c[i]) return false;
    return true;
  }
};

inline double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (int i = 0; i < a.n; ++i) s += a[i] * b[i];
  return s;
}
inline double norm(const Vec& a) { return std::sqrt(dot(a, a)); }

/// Appends `t` as an extra trailing coordinate: (x, t).
inline Vec lift(const Vec& x, double t) {
  Vec r(x.n + 1);
  for (int i = 0; i < x.n; ++i) r[i] = x[i];
  r[x.n] = t;
  return r;
}

/// Drops the trailing coordinate.
inline Vec head(const Vec& x) {
  Vec r(x.n - 1);
  for (int i = 0; i < r.n; ++i) r[i] = x[i];
  return r;
}

/// Dense matrix up to kMaxDim x kMaxDim, row-major.
struct Mat {
  std::array<std::array<double, kMaxDim>, kMaxDim> a{};
  int rows = 0;
  int cols = 0;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c) {}
  static Mat identity(int n) {
    Mat m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
  double& operator()(int i, int j) { return a[i][j]; }
  double operator()(int i, int j) const { return a[i][j]; }

  Vec operator*(const Vec& v) const {
    Vec r(rows);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) r[i] += a[i][j] * v[j];
    return r;
  }
  Mat transpose() const {
    Mat t(cols, rows);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) t(j, i) = a[i][j];
    return t;
  }
  double max_abs() const {
    double m = 0.0;
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) m = std::max(m, std::abs(a[i][j]));
    return m;
  }
};

/// Complex covector (e.g. a covariant gradient).
struct CVec {
  std::array<cplx, kMaxDim> c{};
  int n = 0;

  CVec() = default;
  explicit CVec(int dim) : n(dim) {}
  cplx& operator[](int i) { return c[static_cast<std::size_t>(i)]; }
  const cplx& operator[](int i) const { return c[static_cast<std::size_t>(i)]; }
  double norm() const {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += std::norm(c[i]);
    return std::sqrt(s);
  }
  CVec& operator*=(cplx s) {
    for (int i = 0; i < n; ++i) c[i] *= s;
    return *this;
  }
};

/// e^{i phase}
inline cplx phase_factor(double phase) { return {std::cos(phase), std::sin(phase)}; }

/// Neumaier compensated accumulator.
class KahanSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  KahanSum& operator+=(double x) {
    add(x);
    return *this;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Area of the unit sphere S^{d-1} in R^d.
inline double sphere_area(int d) {
  switch (d) {
    case 1: return 2.0;
    case 2: return 2.0 * std::numbers::pi;
    case 3: return 4.0 * std::numbers::pi;
    default: throw Error("unsupported dimension", "d");
  }
}

namespace parallel {

inline std::atomic<int>& thread_setting() {
  static std::atomic<int> n{1};
  return n;
}

inline void set_threads(int n) { thread_setting().store(std::max(1, n)); }
inline int threads() { return thread_setting().load(); }

/// Runs `fn(block)` for block in [0, blocks). The block decomposition is
/// chosen by the caller and never depends on the thread count, so any
/// reduction performed over the per-block results in block order is
/// bit-identical for every worker count.
template <class Fn>
void for_blocks(std::size_t blocks, Fn&& fn) {
  const auto workers = static_cast<std::size_t>(threads());
  if (workers <= 1 || blocks <= 1) {
    for (std::size_t b = 0; b < blocks; ++b) fn(b);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t b = next.fetch_add(1); b < blocks; b = next.fetch_add(1)) fn(b);
      } catch (...) {
        errors[w] = std::current_exception();
        next.store(blocks);
      }
    });
  }
  pool.clear();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

/// Sums `term(i)` for i in [0, count) with fixed-size blocks and an ordered,
/// compensated reduction.
template <class Term>
double ordered_sum(std::size_t count, std::size_t block_size, Term&& term) {
  const std::size_t blocks = (count + block_size - 1) / block_size;
  std::vector<double> partial(blocks, 0.0);
  for_blocks(blocks, [&](std::size_t b) {
    KahanSum s;
    const std::size_t end = std::min(count, (b + 1) * block_size);
    for (std::size_t i = b * block_size; i < end; ++i) s += term(i);
    partial[b] = s.value();
  });
  KahanSum total;
  for (double v : partial) total += v;
  return total.value();
}

}  // namespace parallel

/// Counter-based generator (splitmix64 finalizer over a keyed counter). The
/// k-th draw for a given (seed, stream) is a pure function, so sampled values
/// do not depend on scheduling.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline double counter_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t k) {
  const std::uint64_t h = mix64(mix64(seed ^ 0x5851f42d4c957f2dULL) ^ mix64(stream) ^ (k * 0xd1b54a32d192ed03ULL));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

/// Box [lo, hi] in R^n.
struct Box {
  Vec lo;
  Vec hi;
  int dim() const { return lo.n; }
  double diameter() const { return norm(hi - lo); }
  bool empty() const {
    for (int i = 0; i < lo.n; ++i)
      if (!(hi[i] > lo[i])) return true;
    return lo.n == 0;
  }
};

}  // namespace magtrace
