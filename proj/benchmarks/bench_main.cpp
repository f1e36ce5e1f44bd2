#include <vector>

#include <benchmark/benchmark.h>

#include "bnmf/ensemble.hpp"
#include "bnmf/gb_layer.hpp"
#include "bnmf/mean_field.hpp"
#include "bnmf/quadrature.hpp"
#include "bnmf/rng.hpp"
#include "bnmf/surrogate.hpp"

using namespace bnmf;

namespace {

MfParams params(double m, double b) {
  MfParams p;
  p.sigma_m2 = m;
  p.sigma_b2 = b;
  return p;
}

Eigen::MatrixXd uniform_matrix(int rows, int cols, std::uint64_t seed) {
  PhiloxEngine rng(seed, 0);
  Eigen::MatrixXd x(rows, cols);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = 2.0 * rng.uniform() - 1.0;
  return x;
}

void BM_GaussHermiteRule(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(gauss_hermite_rule(static_cast<int>(state.range(0))));
}
BENCHMARK(BM_GaussHermiteRule)->Arg(64)->Arg(129)->Arg(258);

void BM_CorrelationMap(benchmark::State& state) {
  const auto p = params(0.5, 0.001);
  const double q = fixed_point_q(p);
  for (auto _ : state) benchmark::DoNotOptimize(correlation_map(0.4, q, p));
}
BENCHMARK(BM_CorrelationMap);

void BM_DepthScales(benchmark::State& state) {
  const auto p = params(static_cast<double>(state.range(0)) / 100.0, 0.001);
  for (auto _ : state) benchmark::DoNotOptimize(depth_scales(p));
}
BENCHMARK(BM_DepthScales)->Arg(20)->Arg(50)->Arg(99);

void BM_SampleNetwork(benchmark::State& state) {
  EnsembleConfig cfg;
  cfg.width = static_cast<int>(state.range(0));
  cfg.depth = 5;
  int i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(sample_network(cfg, i++));
  state.SetItemsProcessed(state.iterations() * cfg.depth * cfg.width * cfg.width);
}
BENCHMARK(BM_SampleNetwork)->Arg(250)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_GbLayerForward(benchmark::State& state) {
  const int width = static_cast<int>(state.range(0));
  const Eigen::MatrixXd m = 0.7 * uniform_matrix(width, width, 1);
  const Eigen::VectorXd b = Eigen::VectorXd::Zero(width);
  const Eigen::MatrixXd x = uniform_matrix(width, 64, 2);
  for (auto _ : state) benchmark::DoNotOptimize(gb_layer_forward(m, b, x, LayerInput::kStochastic));
}
BENCHMARK(BM_GbLayerForward)->Arg(256)->Arg(1000)->Unit(benchmark::kMicrosecond);

void BM_LossAndGrad(benchmark::State& state) {
  const int depth = static_cast<int>(state.range(0));
  std::vector<int> widths{784};
  widths.insert(widths.end(), depth, 256);
  widths.push_back(10);
  const auto net = init_network(widths, 0.9, 0.001, MeanInit::kSymmetricBernoulli, 3);
  const Eigen::MatrixXd x = uniform_matrix(784, 64, 4);
  std::vector<int> y(64);
  for (int i = 0; i < 64; ++i) y[i] = i % 10;
  GradientBundle g;
  for (auto _ : state) benchmark::DoNotOptimize(loss_and_grad(net, x, y, &g));
}
BENCHMARK(BM_LossAndGrad)->Arg(5)->Arg(25)->Unit(benchmark::kMillisecond);

void BM_JacobianMsv(benchmark::State& state) {
  const auto p = params(0.5, 0.001);
  const int width = static_cast<int>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(jacobian_sweep(p, MeanInit::kSymmetricBernoulli, width, 1, 0, 5));
}
BENCHMARK(BM_JacobianMsv)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
