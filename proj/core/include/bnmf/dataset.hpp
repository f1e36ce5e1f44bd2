#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace bnmf {

/// Labelled samples; inputs are stored one sample per column.
struct Dataset {
  Eigen::MatrixXd inputs;  // dim x n, values in [-1, 1]
  std::vector<int> labels;
  int n_classes = 0;

  Eigen::Index size() const { return inputs.cols(); }
  Eigen::Index dim() const { return inputs.rows(); }

  /// Checks label range, sizes and the [-1, 1] input range.
  void validate() const;
  /// Samples `indices` in the given order.
  Dataset select(const std::vector<Eigen::Index>& indices) const;
};

class IdxError : public std::runtime_error {
 public:
  enum class Kind { kIo, kBadMagic, kTruncated, kCountMismatch, kBadHeader };

  IdxError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

/// Raw contents of an IDX image file.
struct IdxImages {
  std::uint32_t count = 0;
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::vector<std::uint8_t> pixels;  // count * rows * cols, row-major per image
};

IdxImages read_idx_images(const std::filesystem::path& path);
std::vector<std::uint8_t> read_idx_labels(const std::filesystem::path& path);
void write_idx_images(const std::filesystem::path& path, const IdxImages& images);
void write_idx_labels(const std::filesystem::path& path, const std::vector<std::uint8_t>& labels);

/// Maps pixels x -> 2 x / 255 - 1. Refuses values outside [0, 255], which
/// catches data that has already been normalized.
Eigen::MatrixXd normalize_pixels(const Eigen::MatrixXd& raw);

/// Parses an image/label pair and normalizes pixels to [-1, 1]. Errors:
/// bad magic, truncated payload, count mismatch.
Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path);

/// Writes a dataset back as IDX; inputs are quantized with
/// round((x + 1) 255 / 2), so normalized 8-bit data round-trips exactly.
void write_idx(const Dataset& data, const std::filesystem::path& images_path,
               const std::filesystem::path& labels_path, std::uint32_t rows, std::uint32_t cols);

struct MnistSplit {
  Dataset train;
  Dataset test;
};

/// Loads the canonical 60k/10k files (train-images-idx3-ubyte, ...) from dir.
MnistSplit load_mnist(const std::filesystem::path& dir);

/// True if all four canonical MNIST files exist in dir.
bool mnist_available(const std::filesystem::path& dir);

/// Environment variable naming the dataset directory.
inline constexpr const char* kDataDirEnv = "BNMF_DATA_DIR";

/// Flag value if set, else $BNMF_DATA_DIR, else nullopt.
std::optional<std::filesystem::path> resolve_data_dir(const std::string& flag_value);

/// Stratified subset keeping round(fraction * n_c) samples of each class,
/// returned in original order. fraction = 1 is the identity.
Dataset subsample(const Dataset& data, double fraction, std::uint64_t seed);

/// Two unit-variance Gaussian clusters at -margin e1 (label 0) and +margin e1
/// (label 1), alternating labels, scaled into [-1, 1] by the largest
/// absolute coordinate.
Dataset make_blobs(int n, int dim, double margin, std::uint64_t seed);

}  // namespace bnmf
