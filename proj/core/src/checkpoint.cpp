#include "bnmf/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

#include <fmt/format.h>

namespace bnmf {
namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::filesystem::path& path) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T)))
    throw CheckpointError(fmt::format("{}: truncated checkpoint", path.string()));
  return value;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const SurrogateNetwork& net) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError(fmt::format("cannot open {} for writing", path.string()));
  out.write("BNMF", 4);
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(net.layers.size()));
  for (const auto& l : net.layers) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(l.means.rows()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(l.means.cols()));
  }
  for (const auto& l : net.layers) {
    for (Eigen::Index i = 0; i < l.means.rows(); ++i)
      for (Eigen::Index j = 0; j < l.means.cols(); ++j) put<double>(out, l.means(i, j));
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) put<double>(out, l.bias(i));
  }
  if (!out) throw CheckpointError(fmt::format("write to {} failed", path.string()));
}

SurrogateNetwork load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError(fmt::format("cannot open {}", path.string()));
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), 4) || std::memcmp(magic.data(), "BNMF", 4) != 0)
    throw CheckpointError(fmt::format("{}: bad magic", path.string()));
  const auto version = get<std::uint32_t>(in, path);
  if (version != kCheckpointVersion)
    throw CheckpointError(fmt::format("{}: unsupported version {}", path.string(), version));
  const auto n_layers = get<std::uint32_t>(in, path);
  std::vector<std::array<std::uint32_t, 2>> dims(n_layers);
  for (auto& d : dims) {
    d[0] = get<std::uint32_t>(in, path);
    d[1] = get<std::uint32_t>(in, path);
  }
  SurrogateNetwork net;
  for (std::uint32_t l = 0; l < n_layers; ++l) {
    if (l > 0 && dims[l][1] != dims[l - 1][0])
      throw CheckpointError(fmt::format("{}: layer {} input width {} does not match {}",
                                        path.string(), l, dims[l][1], dims[l - 1][0]));
    DenseLayer layer;
    layer.means.resize(dims[l][0], dims[l][1]);
    layer.bias.resize(dims[l][0]);
    for (Eigen::Index i = 0; i < layer.means.rows(); ++i)
      for (Eigen::Index j = 0; j < layer.means.cols(); ++j) layer.means(i, j) = get<double>(in, path);
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias(i) = get<double>(in, path);
    net.layers.push_back(std::move(layer));
  }
  if (in.peek() != std::char_traits<char>::eof())
    throw CheckpointError(fmt::format("{}: trailing bytes", path.string()));
  return net;
}

}  // namespace bnmf
