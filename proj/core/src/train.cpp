#include "bnmf/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "bnmf/gb_layer.hpp"
#include "bnmf/rng.hpp"

namespace bnmf {

void TrainConfig::validate() const {
  if (depth < 0) throw std::invalid_argument("depth must be >= 0");
  if (width < 1) throw std::invalid_argument("width must be >= 1");
  if (!(sigma_m2 >= 0.0 && sigma_m2 < 1.0))
    throw std::invalid_argument(fmt::format("sigma_m2 must lie in [0, 1), got {}", sigma_m2));
  if (!(sigma_b2 >= 0.0)) throw std::invalid_argument("sigma_b2 must be >= 0");
  if (!(optimizer.learning_rate >= 0.0) || !std::isfinite(optimizer.learning_rate))
    throw std::invalid_argument("learning rate must be finite and >= 0");
  if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
  if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");
}

std::vector<int> TrainConfig::widths(int input_dim, int n_classes) const {
  std::vector<int> w{input_dim};
  w.insert(w.end(), static_cast<std::size_t>(depth), width);
  w.push_back(n_classes);
  return w;
}

Evaluation evaluate(const SurrogateNetwork& net, const Dataset& data, long chunk) {
  Evaluation out;
  if (data.size() == 0) {
    out.loss = out.accuracy = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  double loss_sum = 0.0;
  double hit_sum = 0.0;
  for (Eigen::Index start = 0; start < data.size(); start += chunk) {
    const Eigen::Index n = std::min<Eigen::Index>(chunk, data.size() - start);
    const std::span<const int> labels(data.labels.data() + start, static_cast<std::size_t>(n));
    const Eigen::MatrixXd logits = forward(net, data.inputs.middleCols(start, n));
    loss_sum += softmax_cross_entropy(logits, labels) * static_cast<double>(n);
    hit_sum += accuracy(logits, labels) * static_cast<double>(n);
  }
  out.loss = loss_sum / static_cast<double>(data.size());
  out.accuracy = hit_sum / static_cast<double>(data.size());
  return out;
}

TrainResult train(const TrainConfig& config, const Dataset& train_set, const Dataset& test_set,
                  const EpochCallback& on_epoch) {
  config.validate();
  if (train_set.size() == 0) throw std::invalid_argument("training set is empty");
  if (test_set.size() > 0 && test_set.dim() != train_set.dim())
    throw std::invalid_argument("train and test inputs differ in dimension");

  const auto widths = config.widths(static_cast<int>(train_set.dim()), train_set.n_classes);
  TrainResult result;
  result.network = init_network(widths, config.sigma_m2, config.sigma_b2, config.mean_init,
                                config.seed, config.activation_gain);
  SurrogateNetwork& net = result.network;
  OptimizerState state;

  const Eigen::Index n = train_set.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  Eigen::MatrixXd batch_x;
  std::vector<int> batch_y;
  GradientBundle grads;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    PhiloxEngine rng(config.seed,
                     derive_stream({static_cast<std::uint64_t>(StreamTag::kShuffle),
                                    static_cast<std::uint64_t>(epoch)}));
    for (Eigen::Index i = n - 1; i > 0; --i)
      std::swap(order[i], order[rng.below(static_cast<std::uint64_t>(i) + 1)]);

    long batch_index = 0;
    for (Eigen::Index start = 0; start < n; start += config.batch_size, ++batch_index) {
      const Eigen::Index m = std::min<Eigen::Index>(config.batch_size, n - start);
      batch_x.resize(train_set.dim(), m);
      batch_y.resize(static_cast<std::size_t>(m));
      for (Eigen::Index k = 0; k < m; ++k) {
        batch_x.col(k) = train_set.inputs.col(order[start + k]);
        batch_y[k] = train_set.labels[order[start + k]];
      }
      try {
        loss_and_grad(net, batch_x, batch_y, &grads, config.loss);
      } catch (const DegenerateInputError& e) {
        throw TrainingError(fmt::format("epoch {} batch {}: {}", epoch, batch_index, e.what()),
                            epoch, batch_index);
      }
      optimizer_step(state, net, grads, config.optimizer);
    }

    const Evaluation tr = evaluate(net, train_set);
    EpochMetrics metrics{epoch, tr.loss, tr.accuracy, evaluate(net, test_set).accuracy};
    result.history.push_back(metrics);
    if (on_epoch) on_epoch(metrics);
  }
  return result;
}

}  // namespace bnmf
