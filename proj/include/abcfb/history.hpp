#pragma once

#include <cstdint>
#include <vector>

#include "abcfb/block.hpp"
#include "abcfb/errors.hpp"

namespace abcfb {

// Ring buffer holding the last tau+1 iterates as full snapshots, addressed by
// absolute iteration index. After k pushes the snapshots x^{max(0,k-tau)}..x^k
// are retrievable exactly; reads below index 0 resolve to x^0 (the iterate
// sequence is extended backwards by its initial point).
class IterateHistory {
 public:
  IterateHistory(unsigned tau, const BlockVector& x0);

  unsigned tau() const { return tau_; }
  std::uint64_t newest() const { return newest_; }

  // Appends the iterate with index newest()+1, evicting the oldest snapshot.
  void push(const BlockVector& x);

  // Snapshot x^j for j in [max(0, newest-tau), newest].
  const BlockVector& snapshot(std::uint64_t j) const;

 private:
  unsigned tau_;
  std::uint64_t newest_ = 0;
  std::vector<BlockVector> ring_;  // slot j % (tau+1) holds x^j
};

// Inconsistent read at iteration k = history.newest(): block i of the result
// is block i of x^{k - d_i}. Requires d_i <= min(k, tau) for every i.
BlockVector delayed_read(const IterateHistory& history, std::uint64_t k,
                         const std::vector<unsigned>& d);

}  // namespace abcfb
