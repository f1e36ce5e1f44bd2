#pragma once

#include <cmath>
#include <string>
#include <string_view>

namespace bnmf {

/// Gain of the probit approximation to the logistic sigmoid, sqrt(8/pi).
inline const double kProbitGain = std::sqrt(8.0 / M_PI);

enum class Activation { kTanh };

/// How the weight means are drawn at initialization.
enum class MeanInit {
  kSymmetricBernoulli,  // M = +-sigma_m with probability 1/2 each
  kClippedGaussian,     // N(0, sigma_m^2) clamped to [-1, 1]
};

MeanInit parse_mean_init(std::string_view name);
std::string to_string(MeanInit init);

/// Hyperparameters of a random Gaussian-binary network. The effective
/// nonlinearity is psi(h) = tanh(kappa * h).
struct MfParams {
  double sigma_m2 = 0.5;
  double sigma_b2 = 0.001;
  double kappa = 1.0;
  Activation activation = Activation::kTanh;

  /// Throws std::invalid_argument unless 0 <= sigma_m2 < 1, sigma_b2 >= 0 and kappa > 0.
  void validate() const;
};

/// E[M^2] under the given initializer. Equals sigma_m2 for the Bernoulli
/// scheme; smaller for the clipped Gaussian because of the clamp.
double mean_second_moment(MeanInit init, double sigma_m2);

/// Copy of `params` whose sigma_m2 is the realized second moment of `init`.
MfParams effective_params(const MfParams& params, MeanInit init);

// psi(h) = tanh(kappa h) and its first two derivatives.
inline double psi(double h, double kappa) { return std::tanh(kappa * h); }

inline double psi_prime(double h, double kappa) {
  const double t = std::tanh(kappa * h);
  return kappa * (1.0 - t * t);
}

inline double psi_second(double h, double kappa) {
  const double t = std::tanh(kappa * h);
  return -2.0 * kappa * kappa * t * (1.0 - t * t);
}

}  // namespace bnmf
