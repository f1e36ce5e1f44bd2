#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "bnmf/detail/fixed_point.hpp"
#include "bnmf/mean_field.hpp"

namespace bnmf::continuous {
namespace {

double tanh_prime(double u) {
  const double t = std::tanh(u);
  return 1.0 - t * t;
}

double tanh_fn(double u) { return std::tanh(u); }

}  // namespace

double variance_map(double q_prev, double sigma_w2, double sigma_b2, const QuadratureRule& rule) {
  if (!(q_prev >= 0.0)) throw std::invalid_argument("variance must be >= 0");
  const double e = gaussian_expectation(rule, q_prev, 1.0, [](double u) {
    const double t = std::tanh(u);
    return t * t;
  });
  return sigma_w2 * e + sigma_b2;
}

double correlation_map(double c_prev, double q_star, double sigma_w2, double sigma_b2,
                       const QuadratureRule& rule) {
  if (!(std::abs(c_prev) <= 1.0 + 1e-12))
    throw std::invalid_argument(fmt::format("correlation must lie in [-1, 1], got {}", c_prev));
  if (!(q_star > 0.0)) throw std::invalid_argument("correlation_map needs q* > 0");
  const double c = std::clamp(c_prev, -1.0, 1.0);
  const double e = gaussian_pair_expectation(rule, q_star, q_star, c, tanh_fn, tanh_fn);
  return (sigma_w2 * e + sigma_b2) / q_star;
}

double chi(double c, double q_star, double sigma_w2, const QuadratureRule& rule) {
  if (!(std::abs(c) <= 1.0 + 1e-12))
    throw std::invalid_argument(fmt::format("correlation must lie in [-1, 1], got {}", c));
  if (!(q_star >= 0.0)) throw std::invalid_argument("chi needs q* >= 0");
  const double cc = std::clamp(c, -1.0, 1.0);
  return sigma_w2 * gaussian_pair_expectation(rule, q_star, q_star, cc, tanh_prime, tanh_prime);
}

double fixed_point_q(double sigma_w2, double sigma_b2, const QuadratureRule& rule,
                     const FixedPointOptions& options) {
  if (!(sigma_w2 >= 0.0 && sigma_b2 >= 0.0))
    throw std::invalid_argument("continuous variances must be >= 0");
  // Without bias, q = 0 is the only fixed point unless the origin is unstable.
  if (sigma_b2 == 0.0 && sigma_w2 <= 1.0) return 0.0;
  return detail::solve_variance_fixed_point(
      [&](double q) { return variance_map(q, sigma_w2, sigma_b2, rule); },
      sigma_w2 + sigma_b2 + 1.0, options);
}

}  // namespace bnmf::continuous
