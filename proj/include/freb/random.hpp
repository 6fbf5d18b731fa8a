#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>

namespace freb {

// Philox4x32-10 block function (Salmon et al., Random123). Maps a 128-bit
// counter and 64-bit key to 128 pseudo-random bits.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key);

// Stream identifiers used by the toolkit. A stream is addressed by
// (seed, stream id); draws within a stream are indexed by a 64-bit counter,
// so every (seed, stream, draw index) triple maps to a fixed value.
namespace streams {
inline constexpr std::uint64_t kTrain = 1;
inline constexpr std::uint64_t kCalibration = 2;
inline constexpr std::uint64_t kDiagnostic = 3;
inline constexpr std::uint64_t kTarget = 4;
inline constexpr std::uint64_t kAugmentation = 16;
}  // namespace streams

// Counter-based generator over Philox4x32-10.
//
// Key = the 64-bit seed. Counter words = (block index low, block index high,
// stream low, stream high). Each block yields two 64-bit outputs. Satisfies
// UniformRandomBitGenerator, but the distribution helpers below should be
// preferred: they are bit-reproducible across standard libraries, unlike
// std::normal_distribution and friends.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0) noexcept
      : seed_(seed), stream_(stream) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept;

  // Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  // Uniform on (0, 1).
  double uniform_open() noexcept;
  double uniform(double lower, double upper) noexcept;
  // Standard normal via Box-Muller; caches the second variate.
  double normal() noexcept;
  // Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) noexcept;

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

 private:
  void refill() noexcept;

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int buffered_ = 0;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace freb
