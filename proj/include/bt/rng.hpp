#pragma once

#include <array>
#include <cstdint>

namespace bt {

/// Philox4x32-10 block cipher (Salmon et al., "Parallel random numbers:
/// as easy as 1, 2, 3", SC 2011). Maps a 128-bit counter and a 64-bit key
/// to 128 bits of output. Counter-based: the output for any counter value
/// can be computed without generating the preceding ones.
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t kMul0 = 0xD2511F53u;
  constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    if (round != 0) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    const std::uint64_t p0 = std::uint64_t(kMul0) * ctr[0];
    const std::uint64_t p1 = std::uint64_t(kMul1) * ctr[2];
    ctr = {std::uint32_t(p1 >> 32) ^ ctr[1] ^ key[0], std::uint32_t(p1),
           std::uint32_t(p0 >> 32) ^ ctr[3] ^ key[1], std::uint32_t(p0)};
  }
  return ctr;
}

/// One independent stream of pseudo-random numbers, keyed by
/// (master seed, stream id). Streams with distinct ids never overlap, so a
/// replicate keyed by its index draws the same values no matter which worker
/// runs it. Not shared between threads; each worker owns its streams.
class Stream {
 public:
  Stream(std::uint64_t seed, std::uint64_t stream_id)
      : key_{std::uint32_t(seed), std::uint32_t(seed >> 32)},
        stream_id_(stream_id) {}

  std::uint64_t next_u64() {
    if (avail_ == 0) refill();
    --avail_;
    const int base = 2 * avail_;
    return std::uint64_t(block_[base]) | (std::uint64_t(block_[base + 1]) << 32);
  }

  /// Uniform double strictly inside (0, 1).
  double next_double() {
    return (double(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  bool bernoulli(double p) { return next_double() < p; }

 private:
  void refill() {
    block_ = philox4x32({std::uint32_t(counter_), std::uint32_t(counter_ >> 32),
                         std::uint32_t(stream_id_), std::uint32_t(stream_id_ >> 32)},
                        key_);
    ++counter_;
    avail_ = 2;
  }

  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_id_;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> block_{};
  int avail_ = 0;
};

}  // namespace bt
