#pragma once

#include <cstdint>
#include <string_view>

namespace consultrl {

inline constexpr std::uint64_t kFnvOffsetBasis = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

/// 64-bit FNV-1a. Stable across platforms; used wherever a hash ends up in a
/// file or decides a reply, so it must never change.
constexpr std::uint64_t fnv1a64(std::string_view bytes,
                                std::uint64_t state = kFnvOffsetBasis) noexcept {
  for (unsigned char c : bytes) {
    state ^= c;
    state *= kFnvPrime;
  }
  return state;
}

constexpr std::uint64_t fnv1a64_u64(std::uint64_t value,
                                    std::uint64_t state = kFnvOffsetBasis) noexcept {
  for (int i = 0; i < 8; ++i) {
    state ^= (value >> (8 * i)) & 0xffU;
    state *= kFnvPrime;
  }
  return state;
}

// splitmix64 finalizer; spreads low-entropy seeds before they are mixed.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace consultrl
