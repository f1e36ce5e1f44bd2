#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace bnmf {

inline constexpr int kDefaultQuadratureNodes = 129;

/// Nodes and weights for integrals against the standard Gaussian measure
/// Dz = exp(-z^2/2) dz / sqrt(2 pi). Weights sum to one.
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
};

/// Probabilists' Gauss-Hermite rule with `n_nodes` points; exact for
/// polynomials up to degree 2 n_nodes - 1. Throws for n_nodes < 2.
QuadratureRule gauss_hermite_rule(int n_nodes);

/// Shared immutable 129-node rule.
const QuadratureRule& default_rule();

/// Largest rate of variation around the origin (in units of z) at which the
/// rule still resolves tanh-like integrands to round-off: sqrt(n / 129).
double resolution_limit(const QuadratureRule& rule);

/// Dz rule made of 10-point Gauss-Legendre panels on [-9, 9]: panels of
/// `width` over center +- 24 width, panels of at most 0.75 elsewhere. Covers
/// integrands that switch on a scale the Gauss-Hermite nodes step over.
QuadratureRule composite_gaussian_rule(double center, double width);

/// \int Dz f(z)
template <class F>
double integrate(const QuadratureRule& rule, F&& f) {
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i) acc += rule.weights[i] * f(rule.nodes[i]);
  return acc;
}

/// E[f(sqrt(q) z)] where f changes over a scale 1/gain around the origin.
/// Uses `rule` when it resolves that scale, panels otherwise.
template <class F>
double gaussian_expectation(const QuadratureRule& rule, double q, double gain, F&& f) {
  const double s = std::sqrt(q);
  const double sharpness = gain * s;
  const auto scaled = [&](double z) { return f(s * z); };
  if (sharpness <= resolution_limit(rule)) return integrate(rule, scaled);
  return integrate(composite_gaussian_rule(0.0, 1.0 / sharpness), scaled);
}

/// E[f(u_a) g(u_b)] for a centred Gaussian pair with variances q_a, q_b and
/// correlation c, via a tensor-product rule on
///   u_a = sqrt(q_a) z1,  u_b = sqrt(q_b) (c z1 + sqrt(1 - c^2) z2).
/// f and g change over a scale 1/gain; either axis switches to panels when
/// `rule` cannot resolve it.
template <class F, class G>
double gaussian_pair_expectation(const QuadratureRule& rule, double q_a, double q_b, double c,
                                 F&& f, G&& g, double gain = 1.0) {
  const double sa = std::sqrt(q_a);
  const double sb = std::sqrt(q_b);
  const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
  const double limit = resolution_limit(rule);
  const double outer_sharpness = gain * std::max(sa, sb * std::abs(c));
  const double inner_sharpness = gain * sb * s;
  const bool panel_inner = inner_sharpness > limit;

  const QuadratureRule panels =
      outer_sharpness > limit ? composite_gaussian_rule(0.0, 1.0 / outer_sharpness) : QuadratureRule{};
  const QuadratureRule& outer = outer_sharpness > limit ? panels : rule;

  double acc = 0.0;
  for (std::size_t i = 0; i < outer.size(); ++i) {
    const double z1 = outer.nodes[i];
    const double fa = f(sa * z1);
    if (fa == 0.0) continue;
    const double shift = sb * c * z1;
    double inner = 0.0;
    if (s == 0.0) {
      inner = g(shift);
    } else if (panel_inner) {
      // g switches where c z1 + s z2 = 0.
      const QuadratureRule local = composite_gaussian_rule(-c * z1 / s, 1.0 / inner_sharpness);
      for (std::size_t j = 0; j < local.size(); ++j)
        inner += local.weights[j] * g(shift + sb * s * local.nodes[j]);
    } else {
      for (std::size_t j = 0; j < rule.size(); ++j)
        inner += rule.weights[j] * g(shift + sb * s * rule.nodes[j]);
    }
    acc += outer.weights[i] * fa * inner;
  }
  return acc;
}

}  // namespace bnmf
