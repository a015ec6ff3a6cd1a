#pragma once

#include <cstdint>
#include <initializer_list>

namespace tascom {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives an independent sub-seed from a master seed and a path of indices,
// e.g. derive_seed(master, {stream, run}).
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = splitmix64(master);
  for (auto p : path) s = splitmix64(s ^ splitmix64(p + 0x632be59bd9b4e019ULL));
  return s;
}

// Named streams so that stages never share random sequences.
namespace seed_stream {
inline constexpr std::uint64_t kGlobalLeiden = 1;
inline constexpr std::uint64_t kRefine = 2;
inline constexpr std::uint64_t kGcnInit = 3;
inline constexpr std::uint64_t kSubstituteLabels = 4;
}  // namespace seed_stream

}  // namespace tascom
