#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "repchain/crypto.hpp"

namespace repchain {

// Portable random stream. The standard distributions are implementation
// defined, so the conversions to doubles and bounded integers live here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 bits of resolution.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform01() < p; }

  // Uniform in [0, n) by rejection, n > 0.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  friend bool operator==(const Rng&, const Rng&) = default;

 private:
  std::mt19937_64 engine_;
};

// Independent substream derived from a root seed and a stream label, so that
// adding a node does not shift anyone else's randomness.
inline Rng substream(std::uint64_t root_seed, std::string_view label, std::uint64_t index = 0) {
  Bytes in;
  append_u64be(in, root_seed);
  append_u64be(in, index);
  auto d = tagged_hash("rng", {in, as_bytes(label)});
  return Rng(read_u64be(d));
}

}  // namespace repchain
