#pragma once

// Mean-field signal propagation for random Gaussian-binary networks.
//
// A hidden layer computes
//   h_i = (sum_j M_ij psi(h_j) + b_i) / sqrt(sum_j (1 - M_ij^2 psi(h_j)^2))
// with M_ij of variance sigma_m2 and b_i ~ N(0, N sigma_b2). Self-averaging of
// the denominator yields closed scalar maps for the field variance q and the
// correlation c between two inputs; everything below evaluates those maps
// with Gauss-Hermite quadrature.

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "bnmf/params.hpp"
#include "bnmf/quadrature.hpp"

namespace bnmf {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Thrown when a fixed-point search fails; carries the last iterate.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double last_iterate, double residual, int iterations)
      : std::runtime_error(what),
        last_iterate_(last_iterate),
        residual_(residual),
        iterations_(iterations) {}

  double last_iterate() const { return last_iterate_; }
  double residual() const { return residual_; }
  int iterations() const { return iterations_; }

 private:
  double last_iterate_;
  double residual_;
  int iterations_;
};

/// E[psi(sqrt(q) z)^2] under Dz.
double e_phi2(double q, const MfParams& params, const QuadratureRule& rule = default_rule());

/// q' = (sigma_m2 E psi^2 + sigma_b2) / (1 - sigma_m2 E psi^2)
double variance_map(double q_prev, const MfParams& params,
                    const QuadratureRule& rule = default_rule());

/// Correlation map at a common variance q_star:
///   c' = ((1+q)/q) (sigma_m2 E[psi(u_a) psi(u_b)] + sigma_b2) / (1 + sigma_b2).
/// Throws std::invalid_argument if q_star <= 0 or |c_prev| > 1.
double correlation_map(double c_prev, double q_star, const MfParams& params,
                       const QuadratureRule& rule = default_rule());

/// Second moments of the fields of two inputs at one layer.
struct LayerMoments {
  double q_aa = 0.0;
  double q_bb = 0.0;
  double c_ab = 0.0;
};

/// One hidden layer of the two-input recursion. Handles q_aa != q_bb by
/// normalizing each field with its own self-averaged denominator; equals
/// variance_map / correlation_map when q_aa == q_bb.
LayerMoments hidden_layer_step(const LayerMoments& prev, const MfParams& params,
                               const QuadratureRule& rule = default_rule());

/// First layer fed by deterministic inputs x with (1/N) |x|^2 = q0. The
/// weight-only variance sum_j x_j^2 (1 - M_ij^2) replaces the hidden-layer
/// denominator, so no nonlinearity is involved:
///   q1 = (s q0 + sigma_b2) / ((1 - s) q0),   s = sigma_m2.
LayerMoments input_layer_step(const LayerMoments& inputs, const MfParams& params);

struct FixedPointOptions {
  double tol = 1e-12;
  int max_iter = 10'000;
  double damping = 0.5;
  double q0 = 1.0;
};

/// Fixed point q* of variance_map. Damped iteration with a bisection
/// fallback; throws ConvergenceError if neither reaches |F(q) - q| < tol.
double fixed_point_q(const MfParams& params, const QuadratureRule& rule = default_rule(),
                     const FixedPointOptions& options = {});

/// Slope of the correlation map,
///   chi(c) = ((1+q*)/(1+sigma_b2)) sigma_m2 E[psi'(u_a) psi'(u_b)].
double chi(double c, double q_star, const MfParams& params,
           const QuadratureRule& rule = default_rule());

/// Multiplier of a small perturbation q* + eps through variance_map:
///   (1+q*) [chi(1) + ((1+q*)/(1+sigma_b2)) sigma_m2 E[psi'' psi]].
double chi1_variance_slope(double q_star, const MfParams& params,
                           const QuadratureRule& rule = default_rule());

/// Depth scale -1/ln(multiplier). Returns +inf once multiplier >= 1 - 1e-12
/// and 0 for a zero multiplier.
double depth_scale(double multiplier);

/// Stable fixed point of correlation_map at q*. c* = 1 when chi(1) < 1;
/// otherwise the interior root found by bisection.
double correlation_fixed_point(double q_star, const MfParams& params,
                               const QuadratureRule& rule = default_rule(), double tol = 1e-12);

struct DepthScales {
  double q_star = 0.0;
  double c_star = 1.0;
  double chi_cstar = 0.0;
  double chi1 = 0.0;            // chi at c = 1
  double variance_slope = 0.0;  // chi1_variance_slope at q*
  double xi_q = 0.0;
  double xi_c = 0.0;
};

DepthScales depth_scales(const MfParams& params, const QuadratureRule& rule = default_rule(),
                         const FixedPointOptions& options = {});

struct RecursionTrace {
  std::vector<double> q_aa;
  std::vector<double> q_bb;
  std::vector<double> c_ab;

  int depth() const { return static_cast<int>(q_aa.size()) - 1; }
};

enum class FirstLayer {
  kFieldMap,            // inputs are layer-0 fields, every layer is hidden_layer_step
  kDeterministicInput,  // layer 1 uses input_layer_step
};

/// Theory trace of length depth + 1 starting at the inputs.
RecursionTrace iterate_theory(const MfParams& params, double q0_aa, double q0_bb, double c0,
                              int depth, const QuadratureRule& rule = default_rule(),
                              FirstLayer first_layer = FirstLayer::kFieldMap);

/// Baseline maps of a standard tanh network with W ~ N(0, sigma_w2/N), b ~ N(0, sigma_b2).
namespace continuous {

double variance_map(double q_prev, double sigma_w2, double sigma_b2,
                    const QuadratureRule& rule = default_rule());
double correlation_map(double c_prev, double q_star, double sigma_w2, double sigma_b2,
                       const QuadratureRule& rule = default_rule());
double chi(double c, double q_star, double sigma_w2, const QuadratureRule& rule = default_rule());
double fixed_point_q(double sigma_w2, double sigma_b2, const QuadratureRule& rule = default_rule(),
                     const FixedPointOptions& options = {});

}  // namespace continuous

}  // namespace bnmf
