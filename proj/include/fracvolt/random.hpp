#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace fracvolt {

/**
 * Philox4x32-10 counter-based generator (Salmon et al., SC'11).
 *
 * The 64-bit seed is the key; the 128-bit counter is split into a 64-bit
 * stream id (high words) and a 64-bit block index (low words). Two
 * generators with different (seed, stream) pairs produce independent
 * sequences, and the sequence for a pair never depends on how many other
 * streams exist or which thread draws from them.
 *
 * Satisfies UniformRandomBitGenerator with 64-bit output.
 */
class Philox4x32 {
 public:
  using result_type = std::uint64_t;
  using block_type = std::array<std::uint32_t, 4>;
  using key_type = std::array<std::uint32_t, 2>;

  explicit Philox4x32(std::uint64_t seed = 0, std::uint64_t stream = 0) noexcept
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_(stream) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    if (pos_ >= 4) {
      buffer_ = generate(counter_block(block_++), key_);
      pos_ = 0;
    }
    const std::uint64_t lo = buffer_[pos_];
    const std::uint64_t hi = buffer_[pos_ + 1];
    pos_ += 2;
    return (hi << 32) | lo;
  }

  /// Raw bijection: 10 Philox rounds of `ctr` under `key`.
  static block_type generate(block_type ctr, key_type key) noexcept {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  block_type counter_block(std::uint64_t block) const noexcept {
    return {static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32),
            static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
  }

  key_type key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  block_type buffer_{};
  int pos_ = 4;
};

/// SplitMix64 finalizer; used to derive per-replica seeds from a master seed.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Seed of replica `replica` under `master`. Distinct replicas get
/// unrelated keys; the mode index is carried separately as the stream id.
constexpr std::uint64_t replica_seed(std::uint64_t master, std::uint64_t replica) noexcept {
  return mix_seed(mix_seed(master) ^ mix_seed(replica + 0x632BE59BD9B4E019ull));
}

}  // namespace fracvolt
