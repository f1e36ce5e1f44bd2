#include "bnmf/surrogate.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "bnmf/ensemble.hpp"
#include "bnmf/gb_layer.hpp"
#include "bnmf/rng.hpp"

namespace bnmf {
namespace {

LayerInput input_kind(int layer) {
  return layer == 0 ? LayerInput::kDeterministic : LayerInput::kStochastic;
}

Eigen::Index argmax(const Eigen::MatrixXd& m, Eigen::Index col) {
  Eigen::Index best = 0;
  m.col(col).maxCoeff(&best);
  return best;
}

double sign_of(double v) { return v >= 0.0 ? 1.0 : -1.0; }

}  // namespace

std::vector<int> SurrogateNetwork::widths() const {
  std::vector<int> w;
  if (layers.empty()) return w;
  w.push_back(static_cast<int>(layers.front().means.cols()));
  for (const auto& l : layers) w.push_back(static_cast<int>(l.means.rows()));
  return w;
}

void SurrogateNetwork::project(double clip_eps) {
  const double limit = 1.0 - clip_eps;
  for (auto& l : layers) l.means = l.means.cwiseMax(-limit).cwiseMin(limit);
}

double SurrogateNetwork::max_abs_mean() const {
  double m = 0.0;
  for (const auto& l : layers) m = std::max(m, l.means.cwiseAbs().maxCoeff());
  return m;
}

SurrogateNetwork init_network(std::span<const int> widths, double sigma_m2, double sigma_b2,
                              MeanInit mean_init, std::uint64_t seed, double activation_gain) {
  if (!(sigma_m2 >= 0.0 && sigma_m2 < 1.0))
    throw std::invalid_argument(fmt::format("sigma_m2 must lie in [0, 1), got {}", sigma_m2));
  if (!(sigma_b2 >= 0.0)) throw std::invalid_argument("sigma_b2 must be >= 0");
  if (widths.size() < 2) throw std::invalid_argument("need at least input and output widths");
  for (int w : widths)
    if (w < 1) throw std::invalid_argument("layer widths must be >= 1");

  SurrogateNetwork net;
  net.activation_gain = activation_gain;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const int fan_in = widths[l];
    const int fan_out = widths[l + 1];
    DenseLayer layer;
    layer.means = sample_means(fan_out, fan_in, sigma_m2, mean_init, seed,
                               derive_stream({static_cast<std::uint64_t>(StreamTag::kMeans), l}));
    PhiloxEngine rng(seed, derive_stream({static_cast<std::uint64_t>(StreamTag::kBias), l}));
    const double sd = std::sqrt(fan_in * sigma_b2);
    layer.bias.resize(fan_out);
    for (int i = 0; i < fan_out; ++i) layer.bias(i) = sd * rng.normal();
    net.layers.push_back(std::move(layer));
  }
  net.project();
  return net;
}

Eigen::MatrixXd forward(const SurrogateNetwork& net, const Eigen::MatrixXd& inputs,
                        ForwardCache* cache) {
  if (net.layers.empty()) throw std::invalid_argument("empty network");
  if (cache != nullptr) cache->layers.assign(net.layers.size(), {});
  Eigen::MatrixXd x = inputs;
  const int last = net.n_layers() - 1;
  for (int l = 0; l <= last; ++l) {
    const auto& layer = net.layers[l];
    LayerFields f = gb_layer_forward(layer.means, layer.bias, x, input_kind(l));
    Eigen::MatrixXd out = l == last ? Eigen::MatrixXd(net.output_gain * f.fields)
                                    : apply_psi(f.fields, net.activation_gain);
    if (cache != nullptr) {
      auto& c = cache->layers[l];
      c.input = std::move(x);
      c.pre = std::move(f.pre);
      c.variance = std::move(f.variance);
      c.fields = std::move(f.fields);
      if (l != last) c.output = out;
    }
    x = std::move(out);
  }
  return x;
}

GradientBundle GradientBundle::zeros_like(const SurrogateNetwork& net) {
  GradientBundle g;
  for (const auto& l : net.layers) {
    g.d_means.push_back(Eigen::MatrixXd::Zero(l.means.rows(), l.means.cols()));
    g.d_bias.push_back(Eigen::VectorXd::Zero(l.bias.size()));
  }
  return g;
}

double softmax_cross_entropy(const Eigen::MatrixXd& logits, std::span<const int> labels,
                             Eigen::MatrixXd* d_logits) {
  const Eigen::Index batch = logits.cols();
  if (static_cast<Eigen::Index>(labels.size()) != batch)
    throw std::invalid_argument("labels and logits disagree on batch size");
  if (d_logits != nullptr) d_logits->resize(logits.rows(), batch);
  double loss = 0.0;
  for (Eigen::Index n = 0; n < batch; ++n) {
    const int y = labels[n];
    if (y < 0 || y >= logits.rows())
      throw std::invalid_argument(fmt::format("label {} outside [0, {})", y, logits.rows()));
    const double top = logits.col(n).maxCoeff();
    const Eigen::ArrayXd e = (logits.col(n).array() - top).exp();
    const double z = e.sum();
    loss += std::log(z) - (logits(y, n) - top);
    if (d_logits != nullptr) {
      d_logits->col(n) = (e / z).matrix();
      (*d_logits)(y, n) -= 1.0;
    }
  }
  if (d_logits != nullptr) *d_logits /= static_cast<double>(batch);
  return loss / static_cast<double>(batch);
}

double loss_and_grad(const SurrogateNetwork& net, const Eigen::MatrixXd& inputs,
                     std::span<const int> labels, GradientBundle* grads,
                     const LossOptions& options) {
  if (grads == nullptr) return softmax_cross_entropy(forward(net, inputs), labels);

  ForwardCache cache;
  const Eigen::MatrixXd logits = forward(net, inputs, &cache);
  Eigen::MatrixXd d_fields;
  const double loss = softmax_cross_entropy(logits, labels, &d_fields);
  d_fields *= net.output_gain;

  *grads = GradientBundle::zeros_like(net);
  for (int l = net.n_layers() - 1; l >= 0; --l) {
    const auto& c = cache.layers[l];
    const auto& means = net.layers[l].means;
    const Eigen::MatrixXd inputs_sq = c.input.array().square().matrix();

    // h = hbar / sqrt(S):  dL/dhbar = g / sqrt(S),  dL/dS = -g h / (2 S)
    const Eigen::MatrixXd d_pre = (d_fields.array() / c.variance.array().sqrt()).matrix();
    grads->d_means[l].noalias() = d_pre * c.input.transpose();
    grads->d_bias[l] = d_pre.rowwise().sum();

    Eigen::MatrixXd d_var;
    if (options.variance_path) {
      d_var = (-0.5 * d_fields.array() * c.fields.array() / c.variance.array()).matrix();
      // dS_i/dM_ij = -2 M_ij x_j^2
      grads->d_means[l].array() -= 2.0 * means.array() * (d_var * inputs_sq.transpose()).array();
    }
    if (l == 0) break;

    Eigen::MatrixXd d_x = means.transpose() * d_pre;
    if (options.variance_path) {
      // dS_i/dx_j = -2 M_ij^2 x_j (hidden layers: v_j = 1 has no x dependence)
      const Eigen::MatrixXd means_sq = means.array().square().matrix();
      d_x.array() -= 2.0 * c.input.array() * (means_sq.transpose() * d_var).array();
    }
    // x = tanh(kappa h_prev)
    d_fields = (d_x.array() * net.activation_gain * (1.0 - c.input.array().square())).matrix();
  }
  return loss;
}

double accuracy(const Eigen::MatrixXd& logits, std::span<const int> labels) {
  if (labels.empty()) return 0.0;
  Eigen::Index hits = 0;
  for (Eigen::Index n = 0; n < logits.cols(); ++n) hits += argmax(logits, n) == labels[n];
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

double gradient_discrepancy(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), kGradcheckFloor});
  return std::abs(analytic - numeric) / scale;
}

std::string GradcheckReport::describe() const {
  return fmt::format("max discrepancy {:.3e} at layer {} {}[{},{}] (analytic {:.9e}, numeric {:.9e})",
                     max_discrepancy, worst_layer, worst_param, worst_row, worst_col,
                     worst_analytic, worst_numeric);
}

GradcheckReport gradcheck(const SurrogateNetwork& net, const Eigen::MatrixXd& inputs,
                          std::span<const int> labels, double epsilon, double tolerance,
                          const LossOptions& options) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("gradcheck epsilon must be > 0");
  GradientBundle grads;
  loss_and_grad(net, inputs, labels, &grads, options);

  GradcheckReport report;
  SurrogateNetwork probe = net;
  const auto numeric_at = [&](double& param) {
    const double saved = param;
    param = saved + epsilon;
    const double up = loss_and_grad(probe, inputs, labels, nullptr);
    param = saved - epsilon;
    const double down = loss_and_grad(probe, inputs, labels, nullptr);
    param = saved;
    return (up - down) / (2.0 * epsilon);
  };
  const auto record = [&](int layer, const char* name, Eigen::Index r, Eigen::Index c,
                          double analytic, double numeric) {
    const double d = gradient_discrepancy(analytic, numeric);
    if (d > report.max_discrepancy || report.worst_layer < 0) {
      report.max_discrepancy = d;
      report.worst_layer = layer;
      report.worst_param = name;
      report.worst_row = r;
      report.worst_col = c;
      report.worst_analytic = analytic;
      report.worst_numeric = numeric;
    }
  };

  for (int l = 0; l < probe.n_layers(); ++l) {
    auto& layer = probe.layers[l];
    for (Eigen::Index i = 0; i < layer.means.rows(); ++i)
      for (Eigen::Index j = 0; j < layer.means.cols(); ++j)
        record(l, "M", i, j, grads.d_means[l](i, j), numeric_at(layer.means(i, j)));
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i)
      record(l, "b", i, 0, grads.d_bias[l](i), numeric_at(layer.bias(i)));
  }
  report.passed = report.max_discrepancy < tolerance;
  return report;
}

double binarize_and_eval(const SurrogateNetwork& net, const Eigen::MatrixXd& inputs,
                         std::span<const int> labels) {
  Eigen::MatrixXd x = inputs;
  for (int l = 0; l < net.n_layers(); ++l) {
    const auto& layer = net.layers[l];
    const Eigen::MatrixXd signs = layer.means.unaryExpr(&sign_of);
    Eigen::MatrixXd pre = signs * x;
    pre.colwise() += layer.bias;
    x = l + 1 == net.n_layers() ? pre : Eigen::MatrixXd(pre.unaryExpr(&sign_of));
  }
  return accuracy(x, labels);
}

double sign_activation_eval(const SurrogateNetwork& net, const Eigen::MatrixXd& inputs,
                            std::span<const int> labels) {
  Eigen::MatrixXd x = inputs;
  for (int l = 0; l < net.n_layers(); ++l) {
    const auto& layer = net.layers[l];
    Eigen::MatrixXd pre = layer.means * x;
    pre.colwise() += layer.bias;
    x = l + 1 == net.n_layers() ? pre : Eigen::MatrixXd(pre.unaryExpr(&sign_of));
  }
  return accuracy(x, labels);
}

}  // namespace bnmf
