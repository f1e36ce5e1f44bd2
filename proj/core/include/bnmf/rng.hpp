#pragma once

// Counter-based random numbers. Every draw is a pure function of
// (seed, stream, position), so work units can run in any order and still
// reproduce bit-identical results.

#include <array>
#include <cstdint>
#include <initializer_list>
#include <limits>

namespace bnmf {

/// Philox4x32 with 10 rounds (Salmon et al., Random123).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Purposes of independent random streams.
enum class StreamTag : std::uint64_t {
  kMeans = 1,
  kBias = 2,
  kInput = 3,
  kProbe = 4,
  kShuffle = 5,
  kSampler = 6,
  kFields = 7,
  kData = 8,
  kSubsample = 9,
};

/// Mixes an ordered list of integers into one 64-bit stream id.
std::uint64_t derive_stream(std::initializer_list<std::uint64_t> parts);

/// Philox stream keyed by the seed; the stream id occupies the upper half of
/// the counter and the block index the lower half. Satisfies
/// UniformRandomBitGenerator.
class PhiloxEngine {
 public:
  using result_type = std::uint32_t;

  PhiloxEngine(std::uint64_t seed, std::uint64_t stream);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();
  std::uint64_t next_u64();

  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  /// Standard normal via Box-Muller.
  double normal();
  /// Uniform integer in [0, n) without modulo bias. n > 0.
  std::uint64_t below(std::uint64_t n);

 private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace bnmf
