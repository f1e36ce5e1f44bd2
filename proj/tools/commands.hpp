#pragma once
// Subcommands of the bnmf tool. Each writes CSV artifacts under --out.
#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace bnmf::cli {

/// Invalid grid or parameter; reported with exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SharedOptions {
  std::uint64_t seed = 0;
  std::string out = ".";
  int workers = 1;
  bool dry_run = false;
  bool resume = false;
  std::string data_dir;  // empty: fall back to BNMF_DATA_DIR
};

struct TheoryOptions {
  std::vector<double> sigma_m2{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99};
  std::vector<double> sigma_b2{1e-5, 1e-3, 1e-1};
  double kappa = 1.0;
  int nodes = 0;  // 0: default rule
};

struct PropagateOptions {
  std::vector<double> sigma_m2{0.2, 0.5, 0.99};
  std::vector<double> sigma_b2{0.001};
  int width = 1000;
  int depth = 20;
  int realizations = 50;
  double q0_aa = 1.0;
  double q0_bb = 1.0;
  double c0 = 0.5;
  std::string mean_init = "bernoulli";
  double kappa = 1.0;
  int nodes = 0;
};

struct JacobianOptions {
  double sigma_m2 = 0.5;
  double sigma_b2 = 0.001;
  std::vector<int> widths{50, 100, 200, 400, 800};
  int networks = 20;
  int probes = 0;  // 0: one orthonormal block of `width` probes
  std::string mean_init = "bernoulli";
  double kappa = 1.0;
  int nodes = 0;
};

struct TrainOptions {
  std::string dataset = "mnist";  // mnist | blobs
  std::vector<int> depths{5, 10, 15, 20, 25, 30, 35, 40};
  std::vector<double> sigma_m2{0.1, 0.3, 0.5, 0.7, 0.9, 0.95};
  double sigma_b2 = 0.001;
  int width = 256;
  int epochs = 20;
  int batch = 64;
  std::string optimizer = "adam";
  double lr = 2e-4;
  double fraction = 0.25;  // share of the MNIST training set
  std::string mean_init = "bernoulli";
  double activation_gain = 1.0;
  bool smoke = false;  // depths {5, 15, 25} x sigma_m2 {0.1, 0.5, 0.95}
  bool save_checkpoints = false;
  int blob_samples = 2000;
  int blob_dim = 8;
  double blob_margin = 3.0;
};

struct VerifyOptions {
  int nodes = 0;
  bool full = false;
  std::vector<std::string> only;
};

/// Lines of "key = value" describing a resolved configuration.
using ConfigEcho = std::vector<std::string>;

int cmd_theory(const SharedOptions& shared, const TheoryOptions& opts, const ConfigEcho& echo,
               std::ostream& out);
int cmd_propagate(const SharedOptions& shared, const PropagateOptions& opts,
                  const ConfigEcho& echo, std::ostream& out);
int cmd_jacobian(const SharedOptions& shared, const JacobianOptions& opts, const ConfigEcho& echo,
                 std::ostream& out);
int cmd_train(const SharedOptions& shared, const TrainOptions& opts, const ConfigEcho& echo,
              std::ostream& out);
int cmd_verify(const SharedOptions& shared, const VerifyOptions& opts, std::ostream& out);

/// Parses argv and dispatches. Exit codes: 0 success, 1 failure, 2 usage.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bnmf::cli
