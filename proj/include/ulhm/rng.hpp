#pragma once

#include "ulhm/types.hpp"

#include <cstdint>
#include <random>
#include <string_view>

namespace ulhm {

/// splitmix64 step; used to derive independent sub-seeds from a master seed
/// so that e.g. mask draws and weight init never share a stream.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Deterministic seed derivation: master seed + stream tag + counter.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                                 std::uint64_t counter = 0) {
  std::uint64_t s = master;
  for (char c : tag) {
    s ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
    splitmix64(s);
  }
  s ^= counter * 0x2545f4914f6cdd1dULL;
  splitmix64(s);
  return s;
}

inline std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64(seed); }

inline Matrix gaussian_matrix(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<Scalar> normal(0.0, 1.0);
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
  return m;
}

inline Vector gaussian_vector(Index n, std::mt19937_64& rng) {
  std::normal_distribution<Scalar> normal(0.0, 1.0);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = normal(rng);
  return v;
}

}  // namespace ulhm
