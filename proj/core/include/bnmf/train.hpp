#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bnmf/dataset.hpp"
#include "bnmf/optimizer.hpp"
#include "bnmf/params.hpp"
#include "bnmf/surrogate.hpp"

namespace bnmf {

struct TrainConfig {
  int depth = 10;   // hidden layers; a readout layer is added on top
  int width = 256;
  double sigma_m2 = 0.5;
  double sigma_b2 = 0.001;
  MeanInit mean_init = MeanInit::kSymmetricBernoulli;
  double activation_gain = 1.0;
  OptimizerConfig optimizer;
  int batch_size = 64;
  int epochs = 20;
  std::uint64_t seed = 0;
  LossOptions loss;

  /// Throws std::invalid_argument. A zero learning rate is accepted so that
  /// frozen runs can be used as controls.
  void validate() const;
  /// [dim, width x depth, n_classes]
  std::vector<int> widths(int input_dim, int n_classes) const;
};

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  double test_acc = 0.0;
};

struct TrainResult {
  std::vector<EpochMetrics> history;
  SurrogateNetwork network;
};

/// Raised when a mini-batch cannot be propagated (e.g. an all-zero input).
class TrainingError : public std::runtime_error {
 public:
  TrainingError(const std::string& what, int epoch, long batch)
      : std::runtime_error(what), epoch_(epoch), batch_(batch) {}
  int epoch() const { return epoch_; }
  long batch() const { return batch_; }

 private:
  int epoch_;
  long batch_;
};

/// Loss and accuracy over a whole dataset, evaluated in chunks.
struct Evaluation {
  double loss = 0.0;
  double accuracy = 0.0;
};
Evaluation evaluate(const SurrogateNetwork& net, const Dataset& data, long chunk = 1024);

using EpochCallback = std::function<void(const EpochMetrics&)>;

/// Mini-batch training. Each epoch visits the training set in a Fisher-Yates
/// order seeded by (seed, epoch); metrics come from a full pass after the
/// epoch's updates. An empty test set reports test_acc = nan.
TrainResult train(const TrainConfig& config, const Dataset& train_set, const Dataset& test_set,
                  const EpochCallback& on_epoch = {});

}  // namespace bnmf
