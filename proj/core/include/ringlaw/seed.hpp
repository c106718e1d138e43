#pragma once

#include <cstdint>
#include <string_view>

namespace ringlaw {

using Seed = std::uint64_t;

/// 64-bit FNV-1a. Stable across platforms, unlike std::hash.
constexpr std::uint64_t fnv1a64(std::string_view text,
                                std::uint64_t hash = 0xcbf29ce484222325ULL) {
  for (unsigned char ch : text) {
    hash ^= ch;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for the unitary of factor `factor` in the window ending at
/// `end_time`, analyzed under `scope` ("grid" or a partition name).
constexpr Seed derive_seed(Seed base, std::int64_t end_time, int factor,
                           std::string_view scope) {
  std::uint64_t h = splitmix64(base);
  h = splitmix64(h ^ static_cast<std::uint64_t>(end_time));
  h = splitmix64(h ^ static_cast<std::uint64_t>(factor));
  return splitmix64(h ^ fnv1a64(scope));
}

}  // namespace ringlaw
