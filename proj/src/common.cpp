// Copyright 2026 The synthcap Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numbers>

#include "synthcap/error.hpp"
#include "synthcap/hash.hpp"
#include "synthcap/rng.hpp"

namespace synthcap {

const char* error_class_name(ErrorClass cls) {
  switch (cls) {
    case ErrorClass::kUsage:
      return "usage";
    case ErrorClass::kIo:
      return "io";
    case ErrorClass::kProtocol:
      return "protocol";
    case ErrorClass::kTraining:
      return "training";
  }
  return "unknown";
}

uint64_t SplitMix64::next() {
  uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Rng::Rng(uint64_t seed) {
  SplitMix64 sm(seed);
  for (auto& word : s_) word = sm.next();
}

uint64_t Rng::derive(uint64_t seed, std::initializer_list<uint64_t> tags) {
  SplitMix64 sm(seed);
  uint64_t acc = sm.next();
  for (uint64_t tag : tags) {
    SplitMix64 mix(acc ^ (tag * 0xd6e8feb86659fd93ULL));
    acc = mix.next();
  }
  return acc;
}

static inline uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

uint64_t Rng::next_u64() {
  const uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

uint64_t Rng::uniform_below(uint64_t bound) {
  if (bound == 0) throw UsageError("uniform_below: bound must be positive");
  unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * bound;
  auto low = static_cast<uint64_t>(m);
  if (low < bound) {
    const uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      m = static_cast<unsigned __int128>(next_u64()) * bound;
      low = static_cast<uint64_t>(m);
    }
  }
  return static_cast<uint64_t>(m >> 64);
}

int64_t Rng::uniform_int(int64_t lo, int64_t hi) {
  if (hi < lo) throw UsageError("uniform_int: empty range");
  const auto span = static_cast<uint64_t>(hi - lo) + 1;
  return lo + static_cast<int64_t>(uniform_below(span));
}

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Fnv1a64& Fnv1a64::update(std::string_view bytes) {
  for (unsigned char c : bytes) {
    state_ ^= c;
    state_ *= kFnvPrime;
  }
  return *this;
}

Fnv1a64& Fnv1a64::update_u64(uint64_t value) {
  for (int i = 0; i < 8; ++i) {
    state_ ^= (value >> (8 * i)) & 0xffU;
    state_ *= kFnvPrime;
  }
  return *this;
}

Fnv1a64& Fnv1a64::update_u32(uint32_t value) {
  for (int i = 0; i < 4; ++i) {
    state_ ^= (value >> (8 * i)) & 0xffU;
    state_ *= kFnvPrime;
  }
  return *this;
}

uint64_t hash64(std::string_view bytes) { return Fnv1a64().update(bytes).digest(); }

}  // namespace synthcap
