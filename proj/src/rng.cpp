#include "abcfb/rng.hpp"

#include <cmath>

namespace abcfb {

namespace {

constexpr std::uint64_t kPhi = 0x9E3779B97F4A7C15ull;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream)
    : base_(mix64(seed + kPhi) ^ mix64(stream * kPhi + 0x6A09E667F3BCC909ull)),
      stream_(stream) {}

std::uint64_t CounterRng::next_u64() { return mix64(base_ + (++counter_) * kPhi); }

double CounterRng::next_unit() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t CounterRng::next_below(std::uint64_t n) {
  if (n == 0) throw ParameterError("next_below needs n >= 1");
  // Multiply-shift mapping of a 64-bit draw onto {0..n-1}; the bias is
  // O(n / 2^64), far below anything our statistical checks can resolve.
  return static_cast<std::uint64_t>(
      (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
}

AliasSampler::AliasSampler(const std::vector<double>& p) {
  const std::size_t m = p.size();
  if (m == 0) throw StructuralError("alias table needs at least one outcome");
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ParameterError("weights must be nonnegative");
    sum += v;
  }
  if (!(sum > 0.0)) throw ParameterError("weights must not all vanish");

  prob_.assign(m, 0.0);
  alias_.assign(m, 0);

  // Scaled weights; columns are classified as small/large around 1.
  std::vector<double> scaled(m);
  for (std::size_t i = 0; i < m; ++i) scaled[i] = p[i] * static_cast<double>(m) / sum;

  std::vector<std::size_t> small, large;
  small.reserve(m);
  large.reserve(m);
  for (std::size_t i = 0; i < m; ++i)
    (scaled[i] < 1.0 ? small : large).push_back(i);

  while (!small.empty() && !large.empty()) {
    const std::size_t s = small.back();
    const std::size_t l = large.back();
    small.pop_back();
    large.pop_back();
    prob_[s] = scaled[s];
    alias_[s] = l;
    scaled[l] = (scaled[l] + scaled[s]) - 1.0;
    (scaled[l] < 1.0 ? small : large).push_back(l);
  }
  // Leftovers are exactly 1 up to rounding.
  for (std::size_t i : large) prob_[i] = 1.0;
  for (std::size_t i : small) prob_[i] = 1.0;
}

std::size_t AliasSampler::sample(CounterRng& rng) const {
  const std::size_t col = static_cast<std::size_t>(rng.next_below(prob_.size()));
  const double u = rng.next_unit();
  return u < prob_[col] ? col : alias_[col];
}

}  // namespace abcfb
