// Copyright 2026 The synthcap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string_view>

namespace synthcap {

// 64-bit FNV-1a: offset basis 0xcbf29ce484222325, prime 0x100000001b3.
inline constexpr uint64_t kFnvOffsetBasis = 0xcbf29ce484222325ULL;
inline constexpr uint64_t kFnvPrime = 0x100000001b3ULL;

class Fnv1a64 {
 public:
  Fnv1a64& update(std::string_view bytes);
  // Appends the value as 8 little-endian bytes.
  Fnv1a64& update_u64(uint64_t value);
  Fnv1a64& update_u32(uint32_t value);
  uint64_t digest() const { return state_; }

 private:
  uint64_t state_ = kFnvOffsetBasis;
};

uint64_t hash64(std::string_view bytes);

}  // namespace synthcap
