#pragma once

#include <cstdint>
#include <vector>

#include "abcfb/errors.hpp"

namespace abcfb {

// Counter-mode pseudo-random generator: draw t is the SplitMix64 finalizer
// applied to base + t*phi, where base is derived from (seed, stream) and phi
// is the 64-bit golden-ratio constant. Properties that matter here:
//   - fully deterministic and replayable from (seed, stream, counter);
//   - streams with different ids are statistically independent, so block
//     sampling and delay generation can use separate streams and neither
//     sequence depends on how often the other is consumed;
//   - stateless jumps: the t-th draw can be computed without the first t-1.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64();
  // Uniform on [0,1) with 53 random bits.
  double next_unit();
  // Uniform on {0, 1, ..., n-1}; n >= 1.
  std::uint64_t next_below(std::uint64_t n);

  std::uint64_t counter() const { return counter_; }
  std::uint64_t stream() const { return stream_; }

 private:
  std::uint64_t base_ = 0;
  std::uint64_t stream_ = 0;
  std::uint64_t counter_ = 0;
};

// Walker/Vose alias table: O(m) construction, O(1) sampling of an index from
// a fixed discrete distribution. Consumes exactly two draws per sample.
class AliasSampler {
 public:
  explicit AliasSampler(const std::vector<double>& p);

  std::size_t sample(CounterRng& rng) const;
  std::size_t size() const { return prob_.size(); }

 private:
  std::vector<double> prob_;       // acceptance threshold per column
  std::vector<std::size_t> alias_; // fallback index per column
};

}  // namespace abcfb
