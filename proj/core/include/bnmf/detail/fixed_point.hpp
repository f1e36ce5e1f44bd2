#pragma once

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "bnmf/mean_field.hpp"

namespace bnmf::detail {

// Damped iteration q <- q + d (F(q) - q), falling back to bisection on
// F(q) - q over [0, upper] when iteration stalls. F(0) >= 0 and
// F(upper) < upper must hold. The residual target is tol * min(1, q), so
// small fixed points are resolved to relative accuracy as well.
template <class Map>
double solve_variance_fixed_point(Map&& map, double upper, const FixedPointOptions& options) {
  if (!(options.tol > 0.0)) throw std::invalid_argument("fixed-point tol must be > 0");
  double q = options.q0;
  double residual = kInfinity;
  for (int it = 0; it < options.max_iter; ++it) {
    const double next = map(q);
    residual = std::abs(next - q);
    if (residual < options.tol * std::min(1.0, q)) return q;
    q += options.damping * (next - q);
    if (!std::isfinite(q) || q < 0.0) break;
  }

  double lo = 0.0;
  double hi = upper;
  if (map(lo) - lo < 0.0 || map(hi) - hi > 0.0)
    throw ConvergenceError("variance fixed point not bracketed", q, residual, options.max_iter);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double g = map(mid) - mid;
    if (std::abs(g) < options.tol * std::min(1.0, mid)) return mid;
    (g > 0.0 ? lo : hi) = mid;
    if (hi - lo < 1e-300) break;
  }
  const double mid = 0.5 * (lo + hi);
  throw ConvergenceError(
      fmt::format("variance fixed point did not converge (residual {})", std::abs(map(mid) - mid)),
      mid, std::abs(map(mid) - mid), options.max_iter + 200);
}

}  // namespace bnmf::detail
