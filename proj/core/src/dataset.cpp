#include <algorithm>
#include <cmath>
#include <cstdlib>

#include <fmt/format.h>

#include "bnmf/dataset.hpp"
#include "bnmf/rng.hpp"

namespace bnmf {

void Dataset::validate() const {
  if (static_cast<Eigen::Index>(labels.size()) != inputs.cols())
    throw std::invalid_argument(fmt::format("{} samples but {} labels", inputs.cols(), labels.size()));
  for (int l : labels)
    if (l < 0 || l >= n_classes)
      throw std::invalid_argument(fmt::format("label {} outside [0, {})", l, n_classes));
  if (inputs.size() > 0 && inputs.cwiseAbs().maxCoeff() > 1.0)
    throw std::invalid_argument("inputs must lie in [-1, 1]");
}

Dataset Dataset::select(const std::vector<Eigen::Index>& indices) const {
  Dataset out;
  out.n_classes = n_classes;
  out.inputs.resize(inputs.rows(), static_cast<Eigen::Index>(indices.size()));
  out.labels.reserve(indices.size());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    out.inputs.col(static_cast<Eigen::Index>(k)) = inputs.col(indices[k]);
    out.labels.push_back(labels[indices[k]]);
  }
  return out;
}

std::optional<std::filesystem::path> resolve_data_dir(const std::string& flag_value) {
  if (!flag_value.empty()) return std::filesystem::path(flag_value);
  if (const char* env = std::getenv(kDataDirEnv); env != nullptr && *env != '\0')
    return std::filesystem::path(env);
  return std::nullopt;
}

Dataset subsample(const Dataset& data, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw std::invalid_argument(fmt::format("fraction must lie in (0, 1], got {}", fraction));
  std::vector<std::vector<Eigen::Index>> by_class(static_cast<std::size_t>(data.n_classes));
  for (Eigen::Index i = 0; i < data.size(); ++i) by_class[data.labels[i]].push_back(i);

  std::vector<Eigen::Index> keep;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& idx = by_class[c];
    const auto take = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(idx.size())));
    PhiloxEngine rng(seed, derive_stream({static_cast<std::uint64_t>(StreamTag::kSubsample), c}));
    // Partial Fisher-Yates: the first `take` slots become a uniform sample.
    for (std::size_t i = 0; i < take; ++i) {
      const std::size_t j = i + rng.below(idx.size() - i);
      std::swap(idx[i], idx[j]);
    }
    keep.insert(keep.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(take));
  }
  if (keep.empty()) throw std::invalid_argument("subsample selected no samples");
  std::sort(keep.begin(), keep.end());
  return data.select(keep);
}

Dataset make_blobs(int n, int dim, double margin, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("make_blobs needs n >= 2");
  if (dim < 1) throw std::invalid_argument("make_blobs needs dim >= 1");
  if (!(margin > 0.0)) throw std::invalid_argument("make_blobs needs margin > 0");
  PhiloxEngine rng(seed, derive_stream({static_cast<std::uint64_t>(StreamTag::kData)}));
  Dataset data;
  data.n_classes = 2;
  data.inputs.resize(dim, n);
  data.labels.resize(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const int label = k % 2;
    data.labels[k] = label;
    for (int i = 0; i < dim; ++i) data.inputs(i, k) = rng.normal();
    data.inputs(0, k) += label == 1 ? margin : -margin;
  }
  const double scale = data.inputs.cwiseAbs().maxCoeff();
  if (scale > 1.0) data.inputs /= scale;
  return data;
}

}  // namespace bnmf
