#pragma once

#include <cstdint>
#include <vector>

namespace mee {

// splitmix64 step (Steele, Lea, Flood 2014). Used to derive independent,
// reproducible sub-streams from one master seed so that e.g. weight init,
// batch shuffling and per-step channel noise never share state.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Deterministically combine a master seed with a salt. Chain calls to tag
// streams with several coordinates, e.g. derive_seed(derive_seed(s, epoch), step).
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t salt) {
  std::uint64_t state = master;
  std::uint64_t a = splitmix64(state);
  state = a ^ (salt + 0x9e3779b97f4a7c15ULL);
  return splitmix64(state);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b) {
  return derive_seed(derive_seed(master, a), b);
}

// Uniform draw in [0, bound) via 128-bit multiply; bias is negligible for
// the index ranges used here and the result is pinned to this algorithm,
// not to a standard-library distribution.
inline std::uint64_t bounded_uint64(std::uint64_t& state, std::uint64_t bound) {
  const std::uint64_t x = splitmix64(state);
  return static_cast<std::uint64_t>(
      (static_cast<unsigned __int128>(x) * static_cast<unsigned __int128>(bound)) >> 64);
}

// Fisher-Yates permutation of 0..n-1 driven by splitmix64.
inline std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  std::uint64_t state = seed;
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(bounded_uint64(state, i));
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}

}  // namespace mee
