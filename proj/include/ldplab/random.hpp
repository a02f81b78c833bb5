#pragma once

#include <cstdint>
#include <limits>

namespace ldplab {

// SplitMix64 output function; used as the block function of CounterStream.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * UINT64_C(0xBF58476D1CE4E5B9);
  z = (z ^ (z >> 27)) * UINT64_C(0x94D049BB133111EB);
  return z ^ (z >> 31);
}

// Counter-based random stream. Output k of stream (seed, id) is a pure
// function of (seed, id, k), so sample i of a Monte Carlo run does not depend
// on how many draws other samples consumed or on which thread produced it.
class CounterStream {
 public:
  using result_type = std::uint64_t;

  CounterStream(std::uint64_t seed, std::uint64_t stream_id) noexcept
      : key_(mix64(seed ^ mix64(stream_id + UINT64_C(0x9E3779B97F4A7C15)))) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept { return next_u64(); }

  std::uint64_t next_u64() noexcept {
    ++counter_;
    return mix64(key_ + counter_ * UINT64_C(0x9E3779B97F4A7C15));
  }

  // Uniform on [0, 1) with 53 random bits.
  double next_double() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform on {0, ..., n-1}; n > 0. Lemire's multiply-shift with rejection.
  std::uint64_t below(std::uint64_t n) noexcept {
    for (;;) {
      const unsigned __int128 m =
          static_cast<unsigned __int128>(next_u64()) * n;
      const auto low = static_cast<std::uint64_t>(m);
      if (low >= n || low >= (-n) % n) {
        return static_cast<std::uint64_t>(m >> 64);
      }
    }
  }

  // Independent child stream; children of distinct indices do not overlap.
  CounterStream split(std::uint64_t index) const noexcept {
    CounterStream child(0, 0);
    child.key_ = mix64(key_ ^ mix64(index + UINT64_C(0xD1B54A32D192ED03)));
    return child;
  }

  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace ldplab
