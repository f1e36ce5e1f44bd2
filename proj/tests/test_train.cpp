#include <doctest.h>

#include <cmath>

#include "bnmf/train.hpp"

using namespace bnmf;

namespace {

TrainConfig blob_config() {
  TrainConfig c;
  c.depth = 2;
  c.width = 32;
  c.sigma_m2 = 0.5;
  c.sigma_b2 = 0.001;
  c.optimizer.kind = OptimizerKind::kAdam;
  c.optimizer.learning_rate = 0.01;
  c.batch_size = 32;
  c.epochs = 20;
  c.seed = 1;
  return c;
}

}  // namespace

TEST_CASE("surrogate learns separable blobs") {
  const Dataset train_set = make_blobs(1000, 2, 3.0, 1);
  const Dataset test_set = make_blobs(500, 2, 3.0, 2);
  const auto result = train(blob_config(), train_set, test_set);
  REQUIRE(result.history.size() == 20);
  CHECK(result.history.back().train_acc > 0.95);
  CHECK(result.history.back().test_acc > 0.95);
  CHECK(result.history.back().train_loss < result.history.front().train_loss);
  CHECK(result.network.max_abs_mean() <= 1.0 - kDefaultClipEps);
}

TEST_CASE("trained blob classifier survives binarization") {
  // Eight input dimensions, one informative: sign(M) keeps enough of the
  // learned direction. With one or two inputs the readout is fragile.
  const Dataset train_set = make_blobs(1000, 8, 3.0, 1);
  const Dataset test_set = make_blobs(500, 8, 3.0, 2);
  const auto result = train(blob_config(), train_set, test_set);
  CHECK(result.history.back().train_acc > 0.95);
  CHECK(binarize_and_eval(result.network, test_set.inputs, test_set.labels) > 0.8);
}

TEST_CASE("wide margin: a single readout layer separates perfectly") {
  auto c = blob_config();
  c.depth = 0;
  c.optimizer.learning_rate = 0.05;
  const Dataset d = make_blobs(400, 2, 10.0, 3);
  CHECK(train(c, d, d).history.back().train_acc == 1.0);
}

TEST_CASE("zero learning rate freezes the metrics") {
  auto c = blob_config();
  c.optimizer.learning_rate = 0.0;
  c.epochs = 4;
  const Dataset d = make_blobs(200, 2, 1.0, 4);
  const auto h = train(c, d, d).history;
  for (const auto& m : h) {
    CHECK(m.train_loss == h.front().train_loss);
    CHECK(m.train_acc == h.front().train_acc);
    CHECK(m.test_acc == h.front().test_acc);
  }
}

TEST_CASE("training is deterministic in the seed") {
  auto c = blob_config();
  c.epochs = 3;
  const Dataset d = make_blobs(300, 3, 1.0, 5);
  const auto a = train(c, d, d);
  const auto b = train(c, d, d);
  for (std::size_t k = 0; k < a.history.size(); ++k) {
    CHECK(a.history[k].train_loss == b.history[k].train_loss);
    CHECK(a.history[k].test_acc == b.history[k].test_acc);
  }
  c.seed = 2;
  CHECK(train(c, d, d).history.back().train_loss != a.history.back().train_loss);
}

TEST_CASE("a zero sample surfaces as a batch-indexed training error") {
  auto c = blob_config();
  c.batch_size = 10;
  Dataset d = make_blobs(100, 2, 1.0, 6);
  d.inputs.col(37).setZero();
  try {
    train(c, d, d);
    FAIL("expected TrainingError");
  } catch (const TrainingError& e) {
    CHECK(e.epoch() == 1);
    CHECK(e.batch() >= 0);
    CHECK(e.batch() < 10);
    CHECK(std::string(e.what()).find("batch") != std::string::npos);
  }
}

TEST_CASE("config validation") {
  auto c = blob_config();
  c.batch_size = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = blob_config();
  c.optimizer.learning_rate = -1.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = blob_config();
  c.sigma_m2 = 1.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  CHECK(blob_config().widths(784, 10) == std::vector<int>{784, 32, 32, 10});
  Dataset empty;
  empty.n_classes = 2;
  empty.inputs.resize(2, 0);
  CHECK_THROWS_AS(train(blob_config(), empty, empty), std::invalid_argument);
}

TEST_CASE("empty test set reports nan accuracy") {
  auto c = blob_config();
  c.epochs = 1;
  Dataset none;
  none.n_classes = 2;
  none.inputs.resize(2, 0);
  const auto h = train(c, make_blobs(50, 2, 2.0, 7), none).history;
  CHECK(std::isnan(h.back().test_acc));
}
