#pragma once

#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "bnmf/surrogate.hpp"

namespace bnmf {

enum class OptimizerKind { kSgd, kMomentum, kAdam };

OptimizerKind parse_optimizer(std::string_view name);
std::string_view to_string(OptimizerKind kind);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kAdam;
  double learning_rate = 2e-4;
  double momentum = 0.9;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double clip_eps = kDefaultClipEps;
};

/// Per-parameter moment buffers. Lazily shaped on the first step.
struct OptimizerState {
  long step = 0;
  std::vector<Eigen::MatrixXd> m_means, v_means;
  std::vector<Eigen::VectorXd> m_bias, v_bias;
};

/// One update followed by projection of every mean onto [-(1 - clip_eps), 1 - clip_eps].
/// Throws std::invalid_argument if gradient shapes do not mirror the network.
void optimizer_step(OptimizerState& state, SurrogateNetwork& net, const GradientBundle& grads,
                    const OptimizerConfig& config);

}  // namespace bnmf
