#include "bnmf/ensemble.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/QR>
#include <fmt/format.h>

#include "bnmf/gb_layer.hpp"
#include "bnmf/parallel.hpp"
#include "bnmf/rng.hpp"

namespace bnmf {
namespace {

constexpr auto tag(StreamTag t) { return static_cast<std::uint64_t>(t); }

double sample_std(const std::vector<double>& xs, double mean) {
  if (xs.size() < 2) return 0.0;
  double acc = 0.0;
  for (double x : xs) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / static_cast<double>(xs.size() - 1));
}

double mean_of(const std::vector<double>& xs) {
  double acc = 0.0;
  for (double x : xs) acc += x;
  return acc / static_cast<double>(xs.size());
}

}  // namespace

void EnsembleConfig::validate() const {
  params.validate();
  if (width < 1 || depth < 1 || n_realizations < 1)
    throw std::invalid_argument("width, depth and n_realizations must all be >= 1");
  if (!(std::abs(c0_ab) <= 1.0)) throw std::invalid_argument("|c0_ab| must be <= 1");
  if (!(q0_aa > 0.0 && q0_bb > 0.0)) throw std::invalid_argument("input variances must be > 0");
}

Eigen::MatrixXd sample_means(int rows, int cols, double sigma_m2, MeanInit init,
                             std::uint64_t seed, std::uint64_t stream) {
  Eigen::MatrixXd m(rows, cols);
  PhiloxEngine rng(seed, stream);
  const double sigma = std::sqrt(sigma_m2);
  if (init == MeanInit::kSymmetricBernoulli) {
    std::uint32_t bits = 0;
    int left = 0;
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) {
        if (left == 0) {
          bits = rng();
          left = 32;
        }
        m(i, j) = (bits & 1u) ? sigma : -sigma;
        bits >>= 1;
        --left;
      }
    }
  } else {
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) m(i, j) = std::clamp(sigma * rng.normal(), -1.0, 1.0);
  }
  return m;
}

RandomNetwork sample_network(const EnsembleConfig& config, int realization_index) {
  config.validate();
  RandomNetwork net;
  net.kappa = config.params.kappa;
  const auto r = static_cast<std::uint64_t>(realization_index);
  const double bias_sd = std::sqrt(config.width * config.params.sigma_b2);
  for (int layer = 0; layer < config.depth; ++layer) {
    const auto l = static_cast<std::uint64_t>(layer);
    RandomNetwork::Layer out;
    out.means = sample_means(config.width, config.width, config.params.sigma_m2, config.mean_init,
                             config.seed, derive_stream({tag(StreamTag::kMeans), r, l}));
    PhiloxEngine rng(config.seed, derive_stream({tag(StreamTag::kBias), r, l}));
    out.bias.resize(config.width);
    for (int i = 0; i < config.width; ++i) out.bias(i) = bias_sd * rng.normal();
    net.layers.push_back(std::move(out));
  }
  return net;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> generate_input_pair(int dim, double q0_aa,
                                                                double q0_bb, double c0_ab,
                                                                std::uint64_t seed) {
  if (dim < 2) throw std::invalid_argument("input pair needs dim >= 2");
  if (!(std::abs(c0_ab) <= 1.0)) throw std::invalid_argument("|c0_ab| must be <= 1");
  if (!(q0_aa >= 0.0 && q0_bb >= 0.0)) throw std::invalid_argument("input variances must be >= 0");
  PhiloxEngine rng(seed, derive_stream({tag(StreamTag::kInput)}));
  Eigen::VectorXd g1(dim), g2(dim);
  for (int i = 0; i < dim; ++i) g1(i) = rng.normal();
  for (int i = 0; i < dim; ++i) g2(i) = rng.normal();

  const double n = static_cast<double>(dim);
  const Eigen::VectorXd e1 = g1 * (std::sqrt(n) / g1.norm());
  Eigen::VectorXd e2 = g2 - e1 * (e1.dot(g2) / n);
  e2 -= e1 * (e1.dot(e2) / n);  // second pass for orthogonality to round-off
  e2 *= std::sqrt(n) / e2.norm();

  Eigen::VectorXd xa = std::sqrt(q0_aa) * e1;
  Eigen::VectorXd xb = std::sqrt(q0_bb) * (c0_ab * e1 + std::sqrt(1.0 - c0_ab * c0_ab) * e2);
  return {std::move(xa), std::move(xb)};
}

std::vector<Eigen::MatrixXd> forward_fields(const RandomNetwork& net, const Eigen::MatrixXd& x0) {
  std::vector<Eigen::MatrixXd> out;
  out.reserve(net.layers.size() + 1);
  out.push_back(x0);
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const auto& layer = net.layers[l];
    if (l == 0) {
      out.push_back(gb_layer_forward(layer.means, layer.bias, x0, LayerInput::kDeterministic).fields);
    } else {
      const Eigen::MatrixXd x = apply_psi(out.back(), net.kappa);
      out.push_back(gb_layer_forward(layer.means, layer.bias, x, LayerInput::kStochastic).fields);
    }
  }
  return out;
}

std::vector<Eigen::VectorXd> forward_fields(const RandomNetwork& net, const Eigen::VectorXd& x0) {
  const auto batch = forward_fields(net, Eigen::MatrixXd(x0));
  std::vector<Eigen::VectorXd> out;
  out.reserve(batch.size());
  for (const auto& m : batch) out.emplace_back(m.col(0));
  return out;
}

std::vector<LayerMoments> empirical_moments(std::span<const Eigen::VectorXd> fields_a,
                                            std::span<const Eigen::VectorXd> fields_b) {
  if (fields_a.size() != fields_b.size())
    throw std::invalid_argument("field traces differ in length");
  std::vector<LayerMoments> out;
  out.reserve(fields_a.size());
  for (std::size_t l = 0; l < fields_a.size(); ++l) {
    const auto& a = fields_a[l];
    const auto& b = fields_b[l];
    if (a.size() != b.size() || a.size() == 0)
      throw std::invalid_argument(fmt::format("layer {}: field shapes differ", l));
    const double n = static_cast<double>(a.size());
    LayerMoments m;
    m.q_aa = a.squaredNorm() / n;
    m.q_bb = b.squaredNorm() / n;
    if (m.q_aa == 0.0 || m.q_bb == 0.0)
      throw std::domain_error(fmt::format("layer {}: zero empirical variance", l));
    m.c_ab = a.dot(b) / n / std::sqrt(m.q_aa * m.q_bb);
    out.push_back(m);
  }
  return out;
}

double EnsembleStats::standard_error(double std) const {
  return n_realizations > 0 ? std / std::sqrt(static_cast<double>(n_realizations)) : 0.0;
}

EnsembleStats run_ensemble(const EnsembleConfig& config, const QuadratureRule& rule) {
  config.validate();
  const auto per_realization = parallel_map(
      static_cast<std::size_t>(config.n_realizations), config.workers,
      [&](std::size_t r) {
        try {
          const RandomNetwork net = sample_network(config, static_cast<int>(r));
          const auto [xa, xb] = generate_input_pair(
              config.width, config.q0_aa, config.q0_bb, config.c0_ab,
              derive_stream({config.seed, static_cast<std::uint64_t>(r)}));
          Eigen::MatrixXd x0(config.width, 2);
          x0.col(0) = xa;
          x0.col(1) = xb;
          const auto fields = forward_fields(net, x0);
          std::vector<Eigen::VectorXd> fa, fb;
          for (const auto& f : fields) {
            fa.emplace_back(f.col(0));
            fb.emplace_back(f.col(1));
          }
          return empirical_moments(fa, fb);
        } catch (const std::exception& e) {
          throw std::runtime_error(fmt::format("realization {}: {}", r, e.what()));
        }
      });

  const int layers = config.depth + 1;
  EnsembleStats stats;
  stats.n_realizations = config.n_realizations;
  const auto aggregate = [&](auto field, std::vector<double>& mean, std::vector<double>& sd) {
    for (int l = 0; l < layers; ++l) {
      std::vector<double> xs;
      xs.reserve(per_realization.size());
      for (const auto& trace : per_realization) xs.push_back(field(trace[l]));
      const double m = mean_of(xs);
      mean.push_back(m);
      sd.push_back(sample_std(xs, m));
    }
  };
  aggregate([](const LayerMoments& m) { return m.q_aa; }, stats.q_aa_mean, stats.q_aa_std);
  aggregate([](const LayerMoments& m) { return m.q_bb; }, stats.q_bb_mean, stats.q_bb_std);
  aggregate([](const LayerMoments& m) { return m.c_ab; }, stats.c_ab_mean, stats.c_ab_std);

  stats.theory = iterate_theory(effective_params(config.params, config.mean_init), config.q0_aa,
                                config.q0_bb, config.c0_ab, config.depth, rule,
                                FirstLayer::kDeterministicInput);
  return stats;
}

Eigen::VectorXd hidden_layer_fields(const RandomNetwork& net, int layer_index,
                                    const Eigen::VectorXd& h_prev) {
  if (layer_index < 1 || layer_index >= static_cast<int>(net.layers.size()))
    throw std::out_of_range(fmt::format("hidden layer index {} out of range", layer_index));
  const auto& layer = net.layers[layer_index];
  const Eigen::MatrixXd x = apply_psi(Eigen::MatrixXd(h_prev), net.kappa);
  return gb_layer_forward(layer.means, layer.bias, x, LayerInput::kStochastic).fields.col(0);
}

Eigen::MatrixXd single_layer_jacobian(const RandomNetwork& net, int layer_index,
                                      const Eigen::VectorXd& h_prev) {
  if (layer_index < 1 || layer_index >= static_cast<int>(net.layers.size()))
    throw std::out_of_range(fmt::format("hidden layer index {} out of range", layer_index));
  const auto& layer = net.layers[layer_index];
  const double kappa = net.kappa;
  const Eigen::VectorXd x = (kappa * h_prev.array()).tanh().matrix();
  const Eigen::VectorXd dx = (kappa * (1.0 - x.array().square())).matrix();
  const Eigen::MatrixXd means_sq = layer.means.array().square().matrix();
  const auto f = gb_layer_forward(layer.means, layer.bias, Eigen::MatrixXd(x), LayerInput::kStochastic,
                                  &means_sq);
  const Eigen::ArrayXd var = f.variance.col(0).array();
  const Eigen::VectorXd inv_sqrt = var.rsqrt().matrix();
  const Eigen::VectorXd corr = (f.pre.col(0).array() / (var * var.sqrt())).matrix();

  Eigen::MatrixXd jac = inv_sqrt.asDiagonal() * layer.means;
  jac += corr.asDiagonal() * means_sq * x.asDiagonal();
  return jac * dx.asDiagonal();
}

double jacobian_msv(const Eigen::MatrixXd& jacobian, int n_probes, std::uint64_t seed) {
  if (n_probes < 1) throw std::invalid_argument("n_probes must be >= 1");
  const Eigen::Index n = jacobian.cols();
  PhiloxEngine rng(seed, derive_stream({tag(StreamTag::kProbe)}));
  double total = 0.0;
  int done = 0;
  while (done < n_probes) {
    const Eigen::Index block = std::min<Eigen::Index>(n, n_probes - done);
    Eigen::MatrixXd g(n, block);
    for (Eigen::Index j = 0; j < block; ++j)
      for (Eigen::Index i = 0; i < n; ++i) g(i, j) = rng.normal();
    Eigen::MatrixXd probes;
    if (block == 1) {
      probes = g / g.norm();
    } else {
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
      probes = qr.householderQ() * Eigen::MatrixXd::Identity(n, block);
    }
    total += (jacobian * probes).squaredNorm();
    done += static_cast<int>(block);
  }
  return total / n_probes;
}

JacobianSweepRow jacobian_sweep(const MfParams& params, MeanInit mean_init, int width,
                                int n_networks, int n_probes, std::uint64_t seed, int workers,
                                const QuadratureRule& rule) {
  if (width < 1 || n_networks < 1) throw std::invalid_argument("width and n_networks must be >= 1");
  const MfParams eff = effective_params(params, mean_init);
  const double q_star = fixed_point_q(eff, rule);
  JacobianSweepRow row;
  row.width = width;
  row.n_networks = n_networks;
  row.chi_theory = params.sigma_m2 == 0.0 ? 0.0 : chi(1.0, q_star, eff, rule);
  const int probes = n_probes > 0 ? n_probes : width;

  EnsembleConfig cfg;
  cfg.width = width;
  cfg.depth = 2;
  cfg.n_realizations = n_networks;
  cfg.params = params;
  cfg.mean_init = mean_init;
  cfg.seed = derive_stream({seed, static_cast<std::uint64_t>(width)});

  const auto msvs = parallel_map(static_cast<std::size_t>(n_networks), workers, [&](std::size_t k) {
    const RandomNetwork net = sample_network(cfg, static_cast<int>(k));
    PhiloxEngine rng(cfg.seed, derive_stream({static_cast<std::uint64_t>(StreamTag::kFields), k}));
    Eigen::VectorXd h_prev(width);
    const double sd = std::sqrt(q_star);
    for (int i = 0; i < width; ++i) h_prev(i) = sd * rng.normal();
    const Eigen::MatrixXd jac = single_layer_jacobian(net, 1, h_prev);
    return jacobian_msv(jac, probes, derive_stream({cfg.seed, k}));
  });

  row.msv_mean = mean_of(msvs);
  row.msv_std = sample_std(msvs, row.msv_mean);
  double err = 0.0;
  for (double m : msvs) err += std::abs(m - row.chi_theory);
  row.abs_err_mean = err / n_networks;
  return row;
}

std::vector<double> stochastic_binary_field_sample(std::span<const double> m_row,
                                                   std::span<const double> x_mean, double bias,
                                                   int n_samples, std::uint64_t seed) {
  if (m_row.size() != x_mean.size()) throw std::invalid_argument("m_row and x_mean differ in size");
  for (std::size_t j = 0; j < m_row.size(); ++j)
    if (std::abs(m_row[j]) > 1.0 || std::abs(x_mean[j]) > 1.0)
      throw std::invalid_argument("means must lie in [-1, 1]");

  // P(+1) = (1 + m) / 2 as a 32-bit threshold; 2^32 encodes probability one.
  const auto threshold = [](double m) {
    return static_cast<std::uint64_t>(std::ldexp(0.5 * (1.0 + m), 32));
  };
  std::vector<std::uint64_t> t_weight, t_neuron;
  for (std::size_t j = 0; j < m_row.size(); ++j) {
    t_weight.push_back(threshold(m_row[j]));
    t_neuron.push_back(threshold(x_mean[j]));
  }

  PhiloxEngine rng(seed, derive_stream({static_cast<std::uint64_t>(StreamTag::kSampler)}));
  std::vector<double> out(static_cast<std::size_t>(std::max(0, n_samples)));
  for (double& sample : out) {
    long acc = 0;
    for (std::size_t j = 0; j < m_row.size(); ++j) {
      const int s = rng() < t_weight[j] ? 1 : -1;
      const int x = rng() < t_neuron[j] ? 1 : -1;
      acc += s * x;
    }
    sample = static_cast<double>(acc) + bias;
  }
  return out;
}

}  // namespace bnmf
