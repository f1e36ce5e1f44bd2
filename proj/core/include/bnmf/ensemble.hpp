#pragma once

// Monte-Carlo check of the mean-field recursions on finite random networks.

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "bnmf/mean_field.hpp"
#include "bnmf/params.hpp"

namespace bnmf {

struct EnsembleConfig {
  int width = 1000;
  int depth = 20;
  int n_realizations = 50;
  MfParams params;
  MeanInit mean_init = MeanInit::kSymmetricBernoulli;
  double q0_aa = 1.0;
  double q0_bb = 1.0;
  double c0_ab = 0.5;
  std::uint64_t seed = 0;
  int workers = 1;

  void validate() const;
};

/// Square random layers: layers[0] reads the deterministic input, the rest
/// read neuron means psi(h).
struct RandomNetwork {
  struct Layer {
    Eigen::MatrixXd means;
    Eigen::VectorXd bias;
  };
  std::vector<Layer> layers;
  double kappa = 1.0;
};

/// Draws means per config.mean_init and biases N(0, width sigma_b2).
/// Depends only on (config.seed, realization_index) and the shape.
RandomNetwork sample_network(const EnsembleConfig& config, int realization_index);

/// Fills an out x in matrix of weight means.
Eigen::MatrixXd sample_means(int rows, int cols, double sigma_m2, MeanInit init,
                             std::uint64_t seed, std::uint64_t stream);

/// Two inputs whose empirical second moments are exactly (q0_aa, q0_bb,
/// c0 sqrt(q0_aa q0_bb)) after Gram-Schmidt on Gaussian draws.
std::pair<Eigen::VectorXd, Eigen::VectorXd> generate_input_pair(int dim, double q0_aa,
                                                                double q0_bb, double c0_ab,
                                                                std::uint64_t seed);

/// Per-layer fields [x0, h^1, ..., h^L]. Throws DegenerateInputError for x0 = 0.
std::vector<Eigen::VectorXd> forward_fields(const RandomNetwork& net, const Eigen::VectorXd& x0);

/// Batched variant; columns of x0 are inputs.
std::vector<Eigen::MatrixXd> forward_fields(const RandomNetwork& net, const Eigen::MatrixXd& x0);

/// q = mean of squares, c = mean of products / sqrt(q_a q_b), per layer.
std::vector<LayerMoments> empirical_moments(std::span<const Eigen::VectorXd> fields_a,
                                            std::span<const Eigen::VectorXd> fields_b);

struct EnsembleStats {
  std::vector<double> q_aa_mean, q_aa_std;
  std::vector<double> q_bb_mean, q_bb_std;
  std::vector<double> c_ab_mean, c_ab_std;
  RecursionTrace theory;
  int n_realizations = 0;

  /// Standard error of the ensemble mean for a per-layer std.
  double standard_error(double std) const;
};

/// Aggregates empirical_moments over realizations (sample std, zero for a
/// single realization) and attaches the deterministic-input theory trace.
EnsembleStats run_ensemble(const EnsembleConfig& config,
                           const QuadratureRule& rule = default_rule());

/// Analytic d h^l / d h^{l-1} for hidden layer `layer_index` (>= 1) at the
/// previous-layer fields h_prev, including the denominator correction
///   psi'(h_j) [ M_ij / sqrt(S_i) + M_ij^2 psi(h_j) hbar_i / S_i^{3/2} ].
Eigen::MatrixXd single_layer_jacobian(const RandomNetwork& net, int layer_index,
                                      const Eigen::VectorXd& h_prev);

/// Fields of hidden layer `layer_index` as a function of h_prev.
Eigen::VectorXd hidden_layer_fields(const RandomNetwork& net, int layer_index,
                                    const Eigen::VectorXd& h_prev);

/// Mean of |J u|^2 over unit probes. Probes come in Haar-random orthonormal
/// blocks of up to N vectors, so n_probes = N reproduces trace(J^T J) / N.
double jacobian_msv(const Eigen::MatrixXd& jacobian, int n_probes, std::uint64_t seed);

struct JacobianSweepRow {
  int width = 0;
  double chi_theory = 0.0;
  double msv_mean = 0.0;
  double msv_std = 0.0;
  double abs_err_mean = 0.0;  // mean over networks of |msv - chi|
  int n_networks = 0;
};

/// MSV of one hidden layer over `n_networks` random networks of the given
/// width, fed with i.i.d. N(0, q*) fields, against chi at c = 1.
/// n_probes <= 0 means n_probes = width.
JacobianSweepRow jacobian_sweep(const MfParams& params, MeanInit mean_init, int width,
                                int n_networks, int n_probes, std::uint64_t seed, int workers = 1,
                                const QuadratureRule& rule = default_rule());

/// n_samples draws of sum_j S_j x_j + b with S_j, x_j independent +-1
/// variables of means m_row[j], x_mean[j].
std::vector<double> stochastic_binary_field_sample(std::span<const double> m_row,
                                                   std::span<const double> x_mean, double bias,
                                                   int n_samples, std::uint64_t seed);

}  // namespace bnmf
