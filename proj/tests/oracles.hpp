#pragma once

// Reference computations that share no code with the library.

#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

namespace oracle {

inline double gaussian_density(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

/// Trapezoid rule for the integral of f(z) Dz over [lo, hi].
inline double gauss_trapezoid(const std::function<double(double)>& f, double lo = -10.0,
                              double hi = 10.0, double step = 1e-4) {
  const long n = std::lround((hi - lo) / step);
  const double h = (hi - lo) / static_cast<double>(n);
  long double sum = 0.5L * (f(lo) * gaussian_density(lo) + f(hi) * gaussian_density(hi));
  for (long i = 1; i < n; ++i) {
    const double z = lo + h * static_cast<double>(i);
    sum += f(z) * gaussian_density(z);
  }
  return static_cast<double>(sum * h);
}

/// Trapezoid rule on a square grid for E[f(z1, z2)] with independent normals.
inline double gauss_trapezoid_2d(const std::function<double(double, double)>& f, double half = 8.0,
                                 double step = 0.02) {
  const long n = std::lround(2.0 * half / step);
  const double h = 2.0 * half / static_cast<double>(n);
  std::vector<double> z(n + 1), w(n + 1);
  for (long i = 0; i <= n; ++i) {
    z[i] = -half + h * static_cast<double>(i);
    w[i] = gaussian_density(z[i]) * h * ((i == 0 || i == n) ? 0.5 : 1.0);
  }
  double sum = 0.0;
  for (long i = 0; i <= n; ++i)
    for (long j = 0; j <= n; ++j) sum += w[i] * w[j] * f(z[i], z[j]);
  return sum;
}

/// E[tanh^2(kappa sqrt(q) z)].
inline double e_tanh2(double q, double kappa) {
  const double s = std::sqrt(q);
  return gauss_trapezoid([&](double z) {
    const double t = std::tanh(kappa * s * z);
    return t * t;
  });
}

/// The variance recursion written out directly.
inline double variance_map(double q, double sigma_m2, double sigma_b2, double kappa) {
  const double a = sigma_m2 * e_tanh2(q, kappa);
  return (a + sigma_b2) / (1.0 - a);
}

/// Root of g on [lo, hi] by plain bisection; g(lo) and g(hi) must differ in sign.
inline double bisect(const std::function<double(double)>& g, double lo, double hi,
                     int iterations = 200) {
  const bool lo_positive = g(lo) > 0.0;
  for (int i = 0; i < iterations; ++i) {
    const double mid = 0.5 * (lo + hi);
    ((g(mid) > 0.0) == lo_positive ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Standard normal CDF.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

struct Moments {
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
};

inline Moments sample_moments(const std::vector<double>& x) {
  const double n = static_cast<double>(x.size());
  Moments m;
  for (double v : x) m.mean += v;
  m.mean /= n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double d = v - m.mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  m.variance = m2 / (n - 1.0);
  m2 /= n;
  m3 /= n;
  m4 /= n;
  m.skewness = m3 / std::pow(m2, 1.5);
  m.excess_kurtosis = m4 / (m2 * m2) - 3.0;
  return m;
}

}  // namespace oracle
