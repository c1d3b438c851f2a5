#pragma once

#include <array>
#include <cstdint>

// Counter-based generator (Philox 4x64-10).  Streams are addressed by a
// 128-bit key (seed, purpose) and a 128-bit counter prefix (index, subindex),
// so replications, subsample draws and critical-value simulations all get
// independent, reproducible streams that can be consumed in parallel without
// coordination.

namespace sfa {

// Purpose tags keep streams for different pipeline stages disjoint even when
// they share (seed, index).
enum class RngStream : std::uint64_t {
  kSimulate = 1,
  kSubsample = 2,
  kCriticalValues = 3,
  kGeneric = 4,
};

class Philox {
 public:
  Philox(std::uint64_t seed, RngStream purpose, std::uint64_t index = 0,
         std::uint64_t subindex = 0)
      : key_{seed, static_cast<std::uint64_t>(purpose)},
        counter_{0, 0, index, subindex} {}

  // Raw key/counter access, mainly for known-answer tests.
  Philox(std::array<std::uint64_t, 2> key, std::array<std::uint64_t, 4> counter)
      : key_(key), counter_(counter) {}

  std::uint64_t next_u64();

  // Uniform on the open interval (0,1); never returns an exact endpoint.
  double next_double();

  // Standard normal via Box-Muller (second value cached).
  double next_normal();

 private:
  void generate_block();

  std::array<std::uint64_t, 2> key_;
  std::array<std::uint64_t, 4> counter_;
  std::array<std::uint64_t, 4> block_{};
  int block_pos_ = 4;  // exhausted
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace sfa
