#pragma once

// Counter-based random draws for tree construction.
//
// Every random quantity of a tree is a pure function of
// (seed, tree index, node index, lane), obtained by chaining the SplitMix64
// finaliser. Trees can therefore be sampled in any order, on any thread, or
// walked implicitly without materialising them, and still agree bit for bit.

#include <cstdint>

namespace kerf {

constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

class CounterRng {
 public:
  enum Lane : std::uint64_t { coordinate = 1, position = 2 };

  constexpr CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept
      : key_(splitmix64(splitmix64(seed) ^ stream)) {}

  constexpr std::uint64_t bits(std::uint64_t counter, Lane lane) const noexcept {
    return splitmix64(splitmix64(key_ ^ counter) ^ lane);
  }

  /// Uniform on {0, ..., n-1} (multiply-shift reduction).
  std::uint64_t index(std::uint64_t counter, Lane lane, std::uint64_t n) const noexcept {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(bits(counter, lane)) * n) >> 64);
  }

  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double unit(std::uint64_t counter, Lane lane) const noexcept {
    return (static_cast<double>(bits(counter, lane) >> 11) + 0.5) * 0x1.0p-53;
  }

 private:
  std::uint64_t key_;
};

}  // namespace kerf
