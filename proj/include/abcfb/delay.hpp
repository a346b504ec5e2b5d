#pragma once

#include <cstdint>
#include <vector>

#include "abcfb/errors.hpp"
#include "abcfb/rng.hpp"

namespace abcfb {

// How the read delays d^k are generated. Every model respects
// max_i d_i^k <= min(k, tau); the bound tau travels with the model.
//
//   zero                  d_i^k = 0
//   constant(c)           d_i^k = min(k, c), c <= tau
//   uniform_iid           one draw, uniform on {0..min(k,tau)}, shared by all
//                         blocks (iid across iterations)
//   per_block_uniform_iid independent uniform draw per block
//   adversarial_max       d_i^k = min(k, tau): every read is as stale as allowed
enum class DelayKind : std::uint8_t {
  zero,
  constant,
  uniform_iid,
  per_block_uniform_iid,
  adversarial_max,
};

struct DelayModel {
  DelayKind kind = DelayKind::zero;
  unsigned tau = 0;
  unsigned value = 0;  // the c of constant(c); unused otherwise

  static DelayModel zero() { return {DelayKind::zero, 0, 0}; }
  static DelayModel constant(unsigned c, unsigned tau);
  static DelayModel uniform(unsigned tau) { return {DelayKind::uniform_iid, tau, 0}; }
  static DelayModel per_block_uniform(unsigned tau) {
    return {DelayKind::per_block_uniform_iid, tau, 0};
  }
  static DelayModel adversarial(unsigned tau) { return {DelayKind::adversarial_max, tau, 0}; }
};

inline DelayModel DelayModel::constant(unsigned c, unsigned tau) {
  if (c > tau) throw ParameterError("constant delay exceeds the bound tau");
  return {DelayKind::constant, tau, c};
}

// Delay vector d^k for iteration k, one entry per block. Draws come from the
// dedicated delay stream of the generator, so the sequence never depends on
// how the block-selection stream is consumed.
std::vector<unsigned> gen_delay(const DelayModel& model, std::uint64_t k, std::size_t m,
                                CounterRng& rng);

}  // namespace abcfb
