#include "bnmf/gb_layer.hpp"

#include <fmt/format.h>

namespace bnmf {

LayerFields gb_layer_forward(const Eigen::MatrixXd& means, const Eigen::VectorXd& bias,
                             const Eigen::MatrixXd& inputs, LayerInput kind,
                             const Eigen::MatrixXd* means_sq) {
  if (inputs.rows() != means.cols())
    throw std::invalid_argument(fmt::format("layer expects {} inputs, got {}", means.cols(),
                                            inputs.rows()));
  Eigen::MatrixXd local_sq;
  if (means_sq == nullptr) {
    local_sq = means.array().square().matrix();
    means_sq = &local_sq;
  }
  const Eigen::MatrixXd inputs_sq = inputs.array().square().matrix();

  LayerFields out;
  out.pre.noalias() = means * inputs;
  out.pre.colwise() += bias;
  out.variance.noalias() = -(*means_sq) * inputs_sq;
  if (kind == LayerInput::kDeterministic) {
    out.variance.rowwise() += inputs_sq.colwise().sum();
  } else {
    out.variance.array() += static_cast<double>(inputs.rows());
  }

  for (Eigen::Index col = 0; col < out.variance.cols(); ++col) {
    const double worst = out.variance.col(col).minCoeff();
    if (!(worst > 0.0))
      throw DegenerateInputError(
          fmt::format("non-positive mean-field variance {} for sample {}", worst, col), col);
  }
  out.fields = (out.pre.array() / out.variance.array().sqrt()).matrix();
  return out;
}

Eigen::MatrixXd apply_psi(const Eigen::MatrixXd& fields, double kappa) {
  return (kappa * fields.array()).tanh().matrix();
}

}  // namespace bnmf
