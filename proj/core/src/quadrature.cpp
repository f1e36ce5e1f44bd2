#include "bnmf/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

namespace bnmf {
namespace {

// Orthonormal probabilists' Hermite polynomials p_0..p_{n}, evaluated at x.
// Returns p_n, p_{n-1} and sum_{k<n} p_k^2.
struct HermiteEval {
  double pn;
  double pn_1;
  double sum_sq;
};

HermiteEval eval_hermite(int n, double x) {
  double prev = 0.0;
  double cur = 1.0;
  double sum_sq = 0.0;
  for (int k = 0; k < n; ++k) {
    sum_sq += cur * cur;
    const double next = (x * cur - std::sqrt(static_cast<double>(k)) * prev) / std::sqrt(k + 1.0);
    prev = cur;
    cur = next;
  }
  return {cur, prev, sum_sq};
}

}  // namespace

QuadratureRule gauss_hermite_rule(int n_nodes) {
  if (n_nodes < 2)
    throw std::invalid_argument(fmt::format("Gauss-Hermite rule needs >= 2 nodes, got {}", n_nodes));

  // Golub-Welsch: eigenvalues of the symmetric Jacobi matrix give starting nodes.
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n_nodes, n_nodes);
  for (int k = 1; k < n_nodes; ++k) {
    jacobi(k, k - 1) = std::sqrt(static_cast<double>(k));
    jacobi(k - 1, k) = jacobi(k, k - 1);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd& eig = solver.eigenvalues();

  QuadratureRule rule;
  rule.nodes.resize(n_nodes);
  rule.weights.resize(n_nodes);
  for (int i = 0; i < n_nodes; ++i) {
    // Newton polish on p_n, then w = 1 / sum_k p_k(x)^2.
    double x = eig(i);
    for (int it = 0; it < 8; ++it) {
      const HermiteEval e = eval_hermite(n_nodes, x);
      const double dp = std::sqrt(static_cast<double>(n_nodes)) * e.pn_1;
      const double step = e.pn / dp;
      if (!std::isfinite(step)) break;  // far tail: p_n overflows, eigenvalue is good enough
      x -= step;
      if (std::abs(step) <= 1e-16 * std::max(1.0, std::abs(x))) break;
    }
    rule.nodes[i] = x;
    rule.weights[i] = 1.0 / eval_hermite(n_nodes, x).sum_sq;
  }

  // Symmetrize to kill round-off asymmetry, then normalize.
  for (int i = 0; i < n_nodes / 2; ++i) {
    const int j = n_nodes - 1 - i;
    const double x = 0.5 * (rule.nodes[j] - rule.nodes[i]);
    const double w = 0.5 * (rule.weights[i] + rule.weights[j]);
    rule.nodes[i] = -x;
    rule.nodes[j] = x;
    rule.weights[i] = rule.weights[j] = w;
  }
  if (n_nodes % 2 == 1) rule.nodes[n_nodes / 2] = 0.0;

  // Sum the small tail weights first.
  std::vector<double> sorted = rule.weights;
  std::sort(sorted.begin(), sorted.end());
  const double total = std::accumulate(sorted.begin(), sorted.end(), 0.0);
  for (double& w : rule.weights) w /= total;
  return rule;
}

const QuadratureRule& default_rule() {
  static const QuadratureRule rule = gauss_hermite_rule(kDefaultQuadratureNodes);
  return rule;
}

double resolution_limit(const QuadratureRule& rule) {
  return std::sqrt(static_cast<double>(rule.size()) / kDefaultQuadratureNodes);
}

namespace {

constexpr int kPanelOrder = 10;
constexpr double kDomain = 9.0;        // Dz mass beyond +-9 is below 1e-18
constexpr double kFineHalfWidth = 24;  // tanh(24) = 1 to double precision
constexpr double kCoarseWidth = 0.75;

// Gauss-Legendre nodes and weights on [-1, 1].
const QuadratureRule& legendre_panel() {
  static const QuadratureRule rule = [] {
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(kPanelOrder, kPanelOrder);
    for (int k = 1; k < kPanelOrder; ++k) {
      jacobi(k, k - 1) = k / std::sqrt(4.0 * k * k - 1.0);
      jacobi(k - 1, k) = jacobi(k, k - 1);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
    QuadratureRule r;
    for (int i = 0; i < kPanelOrder; ++i) {
      // Newton polish on P_n via the three-term recurrence.
      double x = solver.eigenvalues()(i);
      double dp = 1.0;
      for (int it = 0; it < 6; ++it) {
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= kPanelOrder; ++k) {
          const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        dp = kPanelOrder * (x * p1 - p0) / (x * x - 1.0);
        x -= p1 / dp;
      }
      r.nodes.push_back(x);
      r.weights.push_back(2.0 / ((1.0 - x * x) * dp * dp));
    }
    return r;
  }();
  return rule;
}

void add_panels(QuadratureRule& out, double lo, double hi, double max_width) {
  if (!(hi > lo)) return;
  const int count = std::max(1, static_cast<int>(std::ceil((hi - lo) / max_width - 1e-9)));
  const double h = (hi - lo) / count;
  const auto& gl = legendre_panel();
  for (int p = 0; p < count; ++p) {
    const double mid = lo + (p + 0.5) * h;
    for (std::size_t i = 0; i < gl.size(); ++i) {
      const double z = mid + 0.5 * h * gl.nodes[i];
      out.nodes.push_back(z);
      out.weights.push_back(0.5 * h * gl.weights[i] * std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI));
    }
  }
}

}  // namespace

QuadratureRule composite_gaussian_rule(double center, double width) {
  if (!(width > 0.0)) throw std::invalid_argument("panel width must be > 0");
  QuadratureRule rule;
  const double fine_lo = std::clamp(center - kFineHalfWidth * width, -kDomain, kDomain);
  const double fine_hi = std::clamp(center + kFineHalfWidth * width, -kDomain, kDomain);
  rule.nodes.reserve(static_cast<std::size_t>(kPanelOrder) * 80);
  rule.weights.reserve(rule.nodes.capacity());
  add_panels(rule, -kDomain, fine_lo, kCoarseWidth);
  add_panels(rule, fine_lo, fine_hi, std::min(width, kCoarseWidth));
  add_panels(rule, fine_hi, kDomain, kCoarseWidth);
  return rule;
}

}  // namespace bnmf
