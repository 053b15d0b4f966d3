// Copyright 2026 The CRA Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef CRA_HASH_H_
#define CRA_HASH_H_

#include <cstdint>
#include <span>
#include <string_view>

namespace cra {

// 64-bit FNV-1a with the standard offset basis and prime.
class Fnv1a {
 public:
  static constexpr std::uint64_t kOffsetBasis = 0xCBF29CE484222325ULL;
  static constexpr std::uint64_t kPrime = 0x00000100000001B3ULL;

  constexpr void update_byte(std::uint8_t b) {
    state_ ^= b;
    state_ *= kPrime;
  }
  constexpr void update(std::span<const std::uint8_t> bytes) {
    for (auto b : bytes) update_byte(b);
  }
  constexpr void update(std::string_view s) {
    for (char c : s) update_byte(static_cast<std::uint8_t>(c));
  }
  // Little-endian byte order regardless of host.
  constexpr void update_u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) update_byte(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  constexpr std::uint64_t value() const { return state_; }

 private:
  std::uint64_t state_ = kOffsetBasis;
};

constexpr std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) {
  Fnv1a h;
  h.update(bytes);
  return h.value();
}

}  // namespace cra

#endif  // CRA_HASH_H_
