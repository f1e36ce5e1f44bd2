#pragma once

// Binary checkpoint layout, all little-endian:
//   "BNMF"            4 bytes magic
//   version           u32 (currently 1)
//   n_layers          u32
//   rows, cols        u32 pair per layer
//   per layer: rows*cols f64 of M in row-major order, then rows f64 of b
// Gains are not stored; loaders keep the network defaults.

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "bnmf/surrogate.hpp"

namespace bnmf {

inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void save_checkpoint(const std::filesystem::path& path, const SurrogateNetwork& net);
SurrogateNetwork load_checkpoint(const std::filesystem::path& path);

}  // namespace bnmf
