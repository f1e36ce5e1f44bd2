#pragma once

// Forward map of one Gaussian-binary layer, shared by the random-network
// simulator and the trainable surrogate.

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace bnmf {

enum class LayerInput {
  kDeterministic,  // raw inputs: variance sum_j x_j^2 (1 - M_ij^2)
  kStochastic,     // neuron means: variance sum_j (1 - M_ij^2 x_j^2)
};

/// A mean-field variance Sigma_ii <= 0 (e.g. an all-zero input column).
class DegenerateInputError : public std::runtime_error {
 public:
  DegenerateInputError(const std::string& what, long column)
      : std::runtime_error(what), column_(column) {}
  long column() const { return column_; }

 private:
  long column_;
};

struct LayerFields {
  Eigen::MatrixXd pre;       // M x + b
  Eigen::MatrixXd variance;  // Sigma diagonal, one column per sample
  Eigen::MatrixXd fields;    // pre / sqrt(variance)
};

/// Columns of `inputs` are samples. `means_sq` may pass a cached M.^2.
LayerFields gb_layer_forward(const Eigen::MatrixXd& means, const Eigen::VectorXd& bias,
                             const Eigen::MatrixXd& inputs, LayerInput kind,
                             const Eigen::MatrixXd* means_sq = nullptr);

/// psi applied elementwise.
Eigen::MatrixXd apply_psi(const Eigen::MatrixXd& fields, double kappa);

}  // namespace bnmf
