#pragma once

// Seeded random streams with hierarchical substream derivation.
//
// A substream is identified by a root seed and a key path, e.g.
// (seed, kDataTag, level_key, replication, dataset). The path is folded into a
// 64-bit engine seed with splitmix64, so any stream can be created directly
// without consuming another: results for one key never depend on which other
// keys exist. Variates are built from raw engine output (not the
// implementation-defined std distributions) so streams are portable.

#include <cstdint>
#include <initializer_list>
#include <random>

namespace gimt_cdm {

std::uint64_t splitmix64(std::uint64_t x);

class RandomStream {
public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  static RandomStream derive(std::uint64_t root, std::initializer_list<std::uint64_t> keys);

  std::uint64_t next() { return engine_(); }
  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  bool bernoulli(double p) { return uniform() < p; }
  double normal();

private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

} // namespace gimt_cdm
