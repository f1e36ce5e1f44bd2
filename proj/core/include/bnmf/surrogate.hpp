#pragma once

// Trainable deterministic Gaussian-binary surrogate of a stochastic binary
// network. Hidden layer l computes
//   hbar = M x + b,  Sigma_ii = sum_j v_j - sum_j M_ij^2 x_j^2,  h = hbar / sqrt(Sigma)
// with v_j = x_j^2 for the (deterministic) input layer and v_j = 1 for neuron
// means, then x = tanh(kappa h). The last layer emits logits output_gain * h.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bnmf/params.hpp"

namespace bnmf {

inline constexpr double kDefaultClipEps = 1e-6;

struct DenseLayer {
  Eigen::MatrixXd means;  // out x in, |M_ij| <= 1 - clip_eps
  Eigen::VectorXd bias;
};

struct SurrogateNetwork {
  std::vector<DenseLayer> layers;
  double activation_gain = 1.0;
  double output_gain = kProbitGain;

  /// [in, hidden..., out]
  std::vector<int> widths() const;
  int n_layers() const { return static_cast<int>(layers.size()); }
  /// Clamps every mean into [-(1 - clip_eps), 1 - clip_eps].
  void project(double clip_eps = kDefaultClipEps);
  double max_abs_mean() const;
};

/// widths = [in, hidden_1, ..., hidden_depth, out]. Means per `mean_init`,
/// biases N(0, fan_in sigma_b2). Throws for sigma_m2 outside [0, 1).
SurrogateNetwork init_network(std::span<const int> widths, double sigma_m2, double sigma_b2,
                              MeanInit mean_init, std::uint64_t seed,
                              double activation_gain = 1.0);

struct LayerCache {
  Eigen::MatrixXd input;     // x^{l-1}
  Eigen::MatrixXd pre;       // hbar^l
  Eigen::MatrixXd variance;  // Sigma^l diagonal
  Eigen::MatrixXd fields;    // h^l
  Eigen::MatrixXd output;    // psi(h^l); unused for the last layer
};

struct ForwardCache {
  std::vector<LayerCache> layers;
};

/// Logits (n_out x batch). Columns of `inputs` are samples in [-1, 1].
/// Throws DegenerateInputError when an input column is all zeros.
Eigen::MatrixXd forward(const SurrogateNetwork& net, const Eigen::MatrixXd& inputs,
                        ForwardCache* cache = nullptr);

struct GradientBundle {
  std::vector<Eigen::MatrixXd> d_means;
  std::vector<Eigen::VectorXd> d_bias;

  static GradientBundle zeros_like(const SurrogateNetwork& net);
};

struct LossOptions {
  /// Backpropagate through the Sigma denominators. Off reproduces the
  /// mean-only approximation and is used only for ablation.
  bool variance_path = true;
};

/// Mean softmax cross-entropy of the logits.
double softmax_cross_entropy(const Eigen::MatrixXd& logits, std::span<const int> labels,
                             Eigen::MatrixXd* d_logits = nullptr);

/// Loss and (optionally) exact gradients with respect to every M and b.
double loss_and_grad(const SurrogateNetwork& net, const Eigen::MatrixXd& inputs,
                     std::span<const int> labels, GradientBundle* grads,
                     const LossOptions& options = {});

/// Fraction of columns whose argmax logit equals the label.
double accuracy(const Eigen::MatrixXd& logits, std::span<const int> labels);

struct GradcheckReport {
  double max_discrepancy = 0.0;
  bool passed = false;
  int worst_layer = -1;
  std::string worst_param;  // "M" or "b"
  Eigen::Index worst_row = -1;
  Eigen::Index worst_col = -1;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;

  std::string describe() const;
};

/// Relative discrepancy |a - n| / max(|a|, |n|, floor) used by gradcheck.
inline constexpr double kGradcheckFloor = 1e-3;
double gradient_discrepancy(double analytic, double numeric);

/// Compares analytic gradients (computed with `options`) against central
/// differences of the full loss over every parameter.
GradcheckReport gradcheck(const SurrogateNetwork& net, const Eigen::MatrixXd& inputs,
                          std::span<const int> labels, double epsilon, double tolerance,
                          const LossOptions& options = {});

/// Accuracy of the surrogate read as a binary network: sign(M) weights,
/// sign activations, real biases, no normalization.
double binarize_and_eval(const SurrogateNetwork& net, const Eigen::MatrixXd& inputs,
                         std::span<const int> labels);

/// Surrogate means kept as they are, sign activations on hbar, argmax of the
/// output hbar. Matches binarize_and_eval once every |M_ij| = 1.
double sign_activation_eval(const SurrogateNetwork& net, const Eigen::MatrixXd& inputs,
                            std::span<const int> labels);

}  // namespace bnmf
