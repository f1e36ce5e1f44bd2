#include "bnmf/optimizer.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace bnmf {
namespace {

void check_shapes(const SurrogateNetwork& net, const GradientBundle& grads) {
  if (grads.d_means.size() != net.layers.size() || grads.d_bias.size() != net.layers.size())
    throw std::invalid_argument("gradient bundle has wrong layer count");
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const auto& layer = net.layers[l];
    if (grads.d_means[l].rows() != layer.means.rows() ||
        grads.d_means[l].cols() != layer.means.cols() ||
        grads.d_bias[l].size() != layer.bias.size())
      throw std::invalid_argument("gradient shape mismatch at layer " + std::to_string(l));
  }
}

template <typename T>
void update(T& param, const T& grad, T& m, T& v, long step, const OptimizerConfig& c) {
  switch (c.kind) {
    case OptimizerKind::kSgd:
      param -= c.learning_rate * grad;
      break;
    case OptimizerKind::kMomentum:
      m = c.momentum * m + grad;
      param -= c.learning_rate * m;
      break;
    case OptimizerKind::kAdam: {
      m = c.beta1 * m + (1.0 - c.beta1) * grad;
      v = c.beta2 * v + (1.0 - c.beta2) * grad.cwiseAbs2();
      const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(step));
      param.array() -= c.learning_rate * (m.array() / bc1) /
                       ((v.array() / bc2).sqrt() + c.adam_eps);
      break;
    }
  }
}

}  // namespace

OptimizerKind parse_optimizer(std::string_view name) {
  if (name == "sgd") return OptimizerKind::kSgd;
  if (name == "momentum") return OptimizerKind::kMomentum;
  if (name == "adam") return OptimizerKind::kAdam;
  throw std::invalid_argument("unknown optimizer '" + std::string(name) +
                              "' (expected sgd, momentum or adam)");
}

std::string_view to_string(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::kSgd: return "sgd";
    case OptimizerKind::kMomentum: return "momentum";
    case OptimizerKind::kAdam: return "adam";
  }
  return "?";
}

void optimizer_step(OptimizerState& state, SurrogateNetwork& net, const GradientBundle& grads,
                    const OptimizerConfig& config) {
  check_shapes(net, grads);
  if (state.m_means.size() != net.layers.size()) {
    const GradientBundle zeros = GradientBundle::zeros_like(net);
    state.m_means = state.v_means = zeros.d_means;
    state.m_bias = state.v_bias = zeros.d_bias;
    state.step = 0;
  }
  ++state.step;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    update(net.layers[l].means, grads.d_means[l], state.m_means[l], state.v_means[l], state.step,
           config);
    update(net.layers[l].bias, grads.d_bias[l], state.m_bias[l], state.v_bias[l], state.step,
           config);
  }
  net.project(config.clip_eps);
}

}  // namespace bnmf
