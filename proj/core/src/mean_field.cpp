#include "bnmf/mean_field.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "bnmf/detail/fixed_point.hpp"

namespace bnmf {
namespace {

constexpr double kCorrelationSlack = 1e-12;

void check_correlation(double c) {
  if (!(std::abs(c) <= 1.0 + kCorrelationSlack))
    throw std::invalid_argument(fmt::format("correlation must lie in [-1, 1], got {}", c));
}

double clamp_unit(double c) { return std::clamp(c, -1.0, 1.0); }

double e_psi_psi(double q_a, double q_b, double c, double kappa, const QuadratureRule& rule) {
  const auto f = [kappa](double u) { return psi(u, kappa); };
  return gaussian_pair_expectation(rule, q_a, q_b, clamp_unit(c), f, f, kappa);
}

double e_dpsi_dpsi(double q_a, double q_b, double c, double kappa, const QuadratureRule& rule) {
  const auto f = [kappa](double u) { return psi_prime(u, kappa); };
  return gaussian_pair_expectation(rule, q_a, q_b, clamp_unit(c), f, f, kappa);
}

}  // namespace

double e_phi2(double q, const MfParams& params, const QuadratureRule& rule) {
  if (!(q >= 0.0)) throw std::invalid_argument(fmt::format("variance must be >= 0, got {}", q));
  const double kappa = params.kappa;
  return gaussian_expectation(rule, q, kappa, [kappa](double u) {
    const double t = psi(u, kappa);
    return t * t;
  });
}

double variance_map(double q_prev, const MfParams& params, const QuadratureRule& rule) {
  const double a = params.sigma_m2 * e_phi2(q_prev, params, rule);
  return (a + params.sigma_b2) / (1.0 - a);
}

double correlation_map(double c_prev, double q_star, const MfParams& params,
                       const QuadratureRule& rule) {
  check_correlation(c_prev);
  if (!(q_star > 0.0))
    throw std::invalid_argument(fmt::format("correlation_map needs q* > 0, got {}", q_star));
  const double e = e_psi_psi(q_star, q_star, c_prev, params.kappa, rule);
  return (1.0 + q_star) / q_star * (params.sigma_m2 * e + params.sigma_b2) /
         (1.0 + params.sigma_b2);
}

LayerMoments hidden_layer_step(const LayerMoments& prev, const MfParams& params,
                               const QuadratureRule& rule) {
  check_correlation(prev.c_ab);
  const double s = params.sigma_m2;
  const double den_a = 1.0 - s * e_phi2(prev.q_aa, params, rule);
  const double den_b = 1.0 - s * e_phi2(prev.q_bb, params, rule);
  LayerMoments next;
  next.q_aa = (1.0 - den_a + params.sigma_b2) / den_a;
  next.q_bb = (1.0 - den_b + params.sigma_b2) / den_b;
  if (!(next.q_aa > 0.0 && next.q_bb > 0.0))
    throw std::domain_error("zero-variance fields: correlation undefined");
  const double e_ab = e_psi_psi(prev.q_aa, prev.q_bb, prev.c_ab, params.kappa, rule);
  const double q_ab = (s * e_ab + params.sigma_b2) / std::sqrt(den_a * den_b);
  next.c_ab = clamp_unit(q_ab / std::sqrt(next.q_aa * next.q_bb));
  return next;
}

LayerMoments input_layer_step(const LayerMoments& inputs, const MfParams& params) {
  check_correlation(inputs.c_ab);
  if (!(inputs.q_aa > 0.0 && inputs.q_bb > 0.0))
    throw std::domain_error("deterministic-input layer needs nonzero input norms");
  const double s = params.sigma_m2;
  const double b = params.sigma_b2;
  LayerMoments next;
  next.q_aa = (s * inputs.q_aa + b) / ((1.0 - s) * inputs.q_aa);
  next.q_bb = (s * inputs.q_bb + b) / ((1.0 - s) * inputs.q_bb);
  const double root = std::sqrt(inputs.q_aa * inputs.q_bb);
  const double q_ab = (s * inputs.c_ab * root + b) / ((1.0 - s) * root);
  next.c_ab = clamp_unit(q_ab / std::sqrt(next.q_aa * next.q_bb));
  return next;
}

double fixed_point_q(const MfParams& params, const QuadratureRule& rule,
                     const FixedPointOptions& options) {
  params.validate();
  // Without bias, q = 0 is the only fixed point unless the origin is unstable.
  if (params.sigma_b2 == 0.0 && params.sigma_m2 * params.kappa * params.kappa <= 1.0) return 0.0;
  // E psi^2 < 1, so the map is bounded by (sigma_m2 + sigma_b2) / (1 - sigma_m2).
  const double upper = (params.sigma_m2 + params.sigma_b2) / (1.0 - params.sigma_m2) + 1.0;
  return detail::solve_variance_fixed_point(
      [&](double q) { return variance_map(q, params, rule); }, upper, options);
}

double chi(double c, double q_star, const MfParams& params, const QuadratureRule& rule) {
  check_correlation(c);
  if (!(q_star > 0.0)) throw std::invalid_argument(fmt::format("chi needs q* > 0, got {}", q_star));
  if (params.sigma_m2 == 0.0) return 0.0;
  const double e = e_dpsi_dpsi(q_star, q_star, c, params.kappa, rule);
  return (1.0 + q_star) / (1.0 + params.sigma_b2) * params.sigma_m2 * e;
}

double chi1_variance_slope(double q_star, const MfParams& params, const QuadratureRule& rule) {
  if (!(q_star > 0.0))
    throw std::invalid_argument(fmt::format("variance slope needs q* > 0, got {}", q_star));
  if (params.sigma_m2 == 0.0) return 0.0;
  const double kappa = params.kappa;
  const double curvature = gaussian_expectation(
      rule, q_star, kappa, [kappa](double u) { return psi_second(u, kappa) * psi(u, kappa); });
  const double prefactor = (1.0 + q_star) / (1.0 + params.sigma_b2) * params.sigma_m2;
  return (1.0 + q_star) * (chi(1.0, q_star, params, rule) + prefactor * curvature);
}

double depth_scale(double multiplier) {
  if (multiplier >= 1.0 - 1e-12) return kInfinity;
  if (multiplier <= 0.0) return 0.0;
  return -1.0 / std::log(multiplier);
}

double correlation_fixed_point(double q_star, const MfParams& params, const QuadratureRule& rule,
                               double tol) {
  const double chi_one = chi(1.0, q_star, params, rule);
  if (chi_one <= 1.0 + 1e-12) return 1.0;

  // c = 1 is repelling: the stable root lies in [0, 1) where cmap(c) - c
  // changes sign (cmap(0) >= 0 for sigma_b2 >= 0).
  double lo = 0.0;
  double hi = 1.0 - 1e-9;
  const auto g = [&](double c) { return correlation_map(c, q_star, params, rule) - c; };
  if (g(hi) > 0.0)
    throw ConvergenceError("correlation fixed point not bracketed", hi, g(hi), 0);
  for (int it = 0; it < 200 && hi - lo > tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

DepthScales depth_scales(const MfParams& params, const QuadratureRule& rule,
                         const FixedPointOptions& options) {
  DepthScales out;
  out.q_star = fixed_point_q(params, rule, options);
  if (!(out.q_star > 0.0))
    throw ConvergenceError("q* = 0: correlations undefined (sigma_b2 = 0?)", out.q_star, 0.0, 0);
  out.c_star = correlation_fixed_point(out.q_star, params, rule, options.tol);
  out.chi1 = chi(1.0, out.q_star, params, rule);
  out.chi_cstar = out.c_star == 1.0 ? out.chi1 : chi(out.c_star, out.q_star, params, rule);
  out.variance_slope = chi1_variance_slope(out.q_star, params, rule);
  out.xi_q = depth_scale(out.variance_slope);
  out.xi_c = depth_scale(out.chi_cstar);
  return out;
}

RecursionTrace iterate_theory(const MfParams& params, double q0_aa, double q0_bb, double c0,
                              int depth, const QuadratureRule& rule, FirstLayer first_layer) {
  params.validate();
  if (depth < 0) throw std::invalid_argument("depth must be >= 0");
  if (!(q0_aa >= 0.0 && q0_bb >= 0.0))
    throw std::invalid_argument("input variances must be >= 0");
  check_correlation(c0);

  RecursionTrace trace;
  LayerMoments m{q0_aa, q0_bb, clamp_unit(c0)};
  const auto push = [&trace](const LayerMoments& x) {
    trace.q_aa.push_back(x.q_aa);
    trace.q_bb.push_back(x.q_bb);
    trace.c_ab.push_back(x.c_ab);
  };
  push(m);
  for (int layer = 1; layer <= depth; ++layer) {
    m = (layer == 1 && first_layer == FirstLayer::kDeterministicInput)
            ? input_layer_step(m, params)
            : hidden_layer_step(m, params, rule);
    push(m);
  }
  return trace;
}

}  // namespace bnmf
