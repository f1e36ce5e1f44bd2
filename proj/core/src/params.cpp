#include "bnmf/params.hpp"

#include <stdexcept>

#include <fmt/format.h>

namespace bnmf {

MeanInit parse_mean_init(std::string_view name) {
  if (name == "bernoulli" || name == "symmetric-bernoulli") return MeanInit::kSymmetricBernoulli;
  if (name == "clipped" || name == "clipped-gaussian") return MeanInit::kClippedGaussian;
  throw std::invalid_argument(fmt::format("unknown mean init '{}'", name));
}

std::string to_string(MeanInit init) {
  return init == MeanInit::kSymmetricBernoulli ? "bernoulli" : "clipped";
}

void MfParams::validate() const {
  if (!(sigma_m2 >= 0.0 && sigma_m2 < 1.0))
    throw std::invalid_argument(fmt::format("sigma_m2 must lie in [0, 1), got {}", sigma_m2));
  if (!(sigma_b2 >= 0.0))
    throw std::invalid_argument(fmt::format("sigma_b2 must be >= 0, got {}", sigma_b2));
  if (!(kappa > 0.0))
    throw std::invalid_argument(fmt::format("kappa must be > 0, got {}", kappa));
}

double mean_second_moment(MeanInit init, double sigma_m2) {
  if (init == MeanInit::kSymmetricBernoulli || sigma_m2 == 0.0) return sigma_m2;
  // E[clamp(X,-1,1)^2] for X ~ N(0, s^2):
  //   s^2 (2 Phi(a) - 1 - 2 a phi(a)) + 2 (1 - Phi(a)),  a = 1/s
  const double s = std::sqrt(sigma_m2);
  const double a = 1.0 / s;
  const double pdf = std::exp(-0.5 * a * a) / std::sqrt(2.0 * M_PI);
  const double tail = 0.5 * std::erfc(a / std::sqrt(2.0));  // 1 - Phi(a)
  return sigma_m2 * (1.0 - 2.0 * tail - 2.0 * a * pdf) + 2.0 * tail;
}

MfParams effective_params(const MfParams& params, MeanInit init) {
  MfParams out = params;
  out.sigma_m2 = mean_second_moment(init, params.sigma_m2);
  return out;
}

}  // namespace bnmf
