#pragma once

#include <cstdint>

namespace szego {

namespace detail {

// SplitMix64 finalizer: a bijective 64-bit avalanche mix.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

}  // namespace detail

// Stateless counter-based random stream. The value drawn for a counter depends
// only on (key, counter), so any subset of sites can be generated in any order.
class CounterStream {
 public:
  constexpr explicit CounterStream(std::uint64_t key) noexcept : key_(key) {}

  constexpr std::uint64_t key() const noexcept { return key_; }

  constexpr std::uint64_t bits(std::int64_t counter) const noexcept {
    const auto c = static_cast<std::uint64_t>(counter);
    return detail::mix64(key_ ^ detail::mix64(c * detail::kGolden + 0x632be59bd9b4e019ULL));
  }

  // Uniform double in [0, 1) with 53 random bits.
  constexpr double uniform(std::int64_t counter) const noexcept {
    return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
  }

  // Independent child stream, e.g. one per Monte Carlo role inside a realization.
  constexpr CounterStream substream(std::uint64_t tag) const noexcept {
    return CounterStream(detail::mix64(key_ + detail::mix64(tag ^ 0xd1b54a32d192ed03ULL)));
  }

 private:
  std::uint64_t key_;
};

// Master seed plus the rule deriving one stream per realization index.
struct SeedPolicy {
  std::uint64_t master_seed = 0;

  constexpr CounterStream stream(std::uint64_t realization_index) const noexcept {
    const std::uint64_t k = detail::mix64(master_seed ^ 0x5851f42d4c957f2dULL);
    return CounterStream(detail::mix64(k + detail::mix64(realization_index * detail::kGolden)));
  }
};

}  // namespace szego
