#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>

namespace vcc {

// SplitMix64 finalizer. Used to expand user seeds and to derive independent
// sub-seeds (per epoch, per sample, per layer) from a parent seed.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t stream) noexcept {
  return mix64(parent ^ mix64(stream + 0x632BE59BD9B4E019ULL));
}

// xorshift64* (Marsaglia shifts 12/25/27, Vigna multiplier). All randomness in
// the project flows through this generator so results are identical on every
// platform; std::uniform_*_distribution is deliberately not used because its
// output is implementation-defined.
class Rng {
 public:
  explicit constexpr Rng(std::uint64_t seed) noexcept : state_(mix64(seed)) {
    if (state_ == 0) state_ = 0x2545F4914F6CDD1DULL;
  }

  constexpr std::uint64_t next_u64() noexcept {
    state_ ^= state_ >> 12;
    state_ ^= state_ << 25;
    state_ ^= state_ >> 27;
    return state_ * 0x2545F4914F6CDD1DULL;
  }

  // Uniform in [0, 1) with 53 bits of precision.
  constexpr double uniform() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  constexpr double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). n must be > 0.
  constexpr std::size_t below(std::size_t n) noexcept {
    auto i = static_cast<std::size_t>(uniform() * static_cast<double>(n));
    return i < n ? i : n - 1;
  }

  // Fisher-Yates, back to front.
  template <class T>
  constexpr void shuffle(std::span<T> items) noexcept {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = below(i);
      std::swap(items[i - 1], items[j]);
    }
  }

  constexpr std::uint64_t state() const noexcept { return state_; }

 private:
  std::uint64_t state_;
};

}  // namespace vcc
