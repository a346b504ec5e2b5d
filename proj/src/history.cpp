#include "abcfb/history.hpp"

#include <algorithm>

namespace abcfb {

IterateHistory::IterateHistory(unsigned tau, const BlockVector& x0) : tau_(tau) {
  if (x0.size() == 0) throw StructuralError("initial iterate is empty");
  ring_.assign(tau_ + 1u, x0);
}

void IterateHistory::push(const BlockVector& x) {
  if (x.layout() != ring_.front().layout()) throw StructuralError("iterate layout mismatch");
  ++newest_;
  ring_[newest_ % (tau_ + 1u)] = x;
}

const BlockVector& IterateHistory::snapshot(std::uint64_t j) const {
  if (j > newest_)
    throw ContractError("history read past the newest iterate");
  if (newest_ > tau_ && j < newest_ - tau_)
    throw ContractError("history read past the retention window");
  return ring_[j % (tau_ + 1u)];
}

BlockVector delayed_read(const IterateHistory& history, std::uint64_t k,
                         const std::vector<unsigned>& d) {
  if (k != history.newest())
    throw ContractError("delayed reads are only supported at the newest iterate");
  const BlockVector& newest = history.snapshot(k);
  if (d.size() != newest.blocks())
    throw StructuralError("delay vector does not match block count");

  const std::uint64_t bound = std::min<std::uint64_t>(k, history.tau());
  BlockVector out = newest;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d[i] > bound) throw ContractError("delay exceeds min(k, tau)");
    if (d[i] != 0) out.set_block(i, history.snapshot(k - d[i]).block(i));
  }
  return out;
}

}  // namespace abcfb
