#pragma once
// Acceptance suite shared by `bnmf verify` and the ctest acceptance binary.
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace bnmf::acceptance {

enum class Status { kPass, kFail, kSkipped, kReport };

std::string_view to_string(Status status);

struct CheckResult {
  std::string name;
  Status status = Status::kPass;
  std::string detail;  // measured vs expected
  double seconds = 0.0;
};

struct Options {
  /// Gauss-Hermite nodes for every theory evaluation; 0 keeps the default.
  int quadrature_nodes = 0;
  std::uint64_t seed = 0;  // reference seed, same default as the CLI
  int workers = 1;
  /// Explicit MNIST directory; otherwise BNMF_DATA_DIR is consulted.
  std::string data_dir;
  /// Full depth grid {5, ..., 40} instead of the smoke grid {5, 15, 25}.
  bool full_training_grid = false;
  /// Restrict to these check names; empty runs everything.
  std::vector<std::string> only;
};

/// Names in execution order.
const std::vector<std::string>& check_names();

using Reporter = std::function<void(const CheckResult&)>;

/// Runs the selected checks in order, calling `report` after each one.
/// Throws std::invalid_argument for an unknown name in options.only.
std::vector<CheckResult> run(const Options& options, const Reporter& report = {});

/// "PASS  name  (1.2 s)  detail"
std::string format_line(const CheckResult& result);

/// True when no result has Status::kFail.
bool all_passed(const std::vector<CheckResult>& results);

}  // namespace bnmf::acceptance
