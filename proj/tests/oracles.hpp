#pragma once

// Reference integrators for the test suite. Deliberately unrelated to the
// library's Gauss machinery: composite Simpson rules and brute-force sums.

#include <cmath>
#include <complex>
#include <functional>
#include <vector>

namespace oracle {

/// Composite Simpson on [a,b] with n (even) intervals.
template <class F>
double simpson(F&& f, double a, double b, int n = 2000) {
  if (n % 2) ++n;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

template <class F>
std::complex<double> simpson_c(F&& f, double a, double b, int n = 2000) {
  return {simpson([&](double t) { return std::real(f(t)); }, a, b, n),
          simpson([&](double t) { return std::imag(f(t)); }, a, b, n)};
}

/// Simpson over [a,b] then Richardson with the half-step result.
template <class F>
double simpson_richardson(F&& f, double a, double b, int n = 2000) {
  const double coarse = simpson(f, a, b, n);
  const double fine = simpson(f, a, b, 2 * n);
  return fine + (fine - coarse) / 15.0;
}

/// Tensor Simpson over the triangle {0 <= s <= 1, 0 <= t <= 1 - s}.
template <class F>
double simpson_triangle(F&& f, int n = 400) {
  return simpson([&](double s) { return simpson([&](double t) { return f(t, s); }, 0.0, 1.0 - s, n); }, 0.0, 1.0, n);
}

/// Least-squares slope of log y against log x.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0, my = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) mx += std::log(x[i]), my += std::log(y[i]);
  mx /= n, my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
    sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
  }
  return sxy / sxx;
}

/// Splitmix-style generator independent of the library's RNG.
struct Rng {
  unsigned long long s;
  explicit Rng(unsigned long long seed) : s(seed * 2654435761ULL + 1) {}
  double uniform(double lo = 0.0, double hi = 1.0) {
    s ^= s << 13;
    s ^= s >> 7;
    s ^= s << 17;
    return lo + (hi - lo) * static_cast<double>(s >> 11) * 0x1.0p-53;
  }
};

}  // namespace oracle
