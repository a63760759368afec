#pragma once

#include <array>
#include <cstdint>

namespace smfpca {

/// Philox4x32-10 counter-based block function (Salmon et al., SC'11).
using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

PhiloxCounter philox4x32_10(PhiloxCounter counter, PhiloxKey key);

/// Deterministic random stream addressed by (seed, a, b, c).
///
/// The 64-bit seed is the Philox key. Counter word 0 enumerates blocks
/// within the stream; words 1..3 hold the stream address, so streams with
/// different addresses never overlap and can be consumed in any order or
/// on any thread.
class PhiloxStream {
 public:
  PhiloxStream(std::uint64_t seed, std::uint32_t a, std::uint32_t b = 0, std::uint32_t c = 0);

  std::uint32_t next_u32();
  std::uint64_t next_u64();
  /// Uniform on the open interval (0, 1) with 53 random bits.
  double uniform();
  /// Uniform integer in [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  /// Standard normal via the Box-Muller transform.
  double normal();

 private:
  PhiloxKey key_;
  PhiloxCounter counter_;
  PhiloxCounter block_{};
  int used_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Child seed for sub-task (a, b) of a computation seeded by `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

}  // namespace smfpca
