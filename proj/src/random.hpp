#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace spikestream::detail {

// 53-bit uniform in [0, 1); independent of the standard library's distribution code
// so generated data is identical across toolchains.
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9E3779B97F4A7C15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Fisher-Yates with uniform01, for the same reason.
template <typename T>
void shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace spikestream::detail
