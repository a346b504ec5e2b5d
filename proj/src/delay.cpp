#include "abcfb/delay.hpp"

#include <algorithm>

namespace abcfb {

std::vector<unsigned> gen_delay(const DelayModel& model, std::uint64_t k, std::size_t m,
                                CounterRng& rng) {
  if (m == 0) throw StructuralError("need at least one block");
  const unsigned bound = static_cast<unsigned>(
      std::min<std::uint64_t>(k, model.tau));
  std::vector<unsigned> d(m, 0);
  switch (model.kind) {
    case DelayKind::zero:
      break;
    case DelayKind::constant:
      std::fill(d.begin(), d.end(), std::min(bound, model.value));
      break;
    case DelayKind::uniform_iid: {
      const unsigned v = static_cast<unsigned>(rng.next_below(bound + 1ull));
      std::fill(d.begin(), d.end(), v);
      break;
    }
    case DelayKind::per_block_uniform_iid:
      for (auto& di : d) di = static_cast<unsigned>(rng.next_below(bound + 1ull));
      break;
    case DelayKind::adversarial_max:
      std::fill(d.begin(), d.end(), bound);
      break;
  }
  return d;
}

}  // namespace abcfb
