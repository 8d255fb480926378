// Copyright 2026 The synthcap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>

namespace synthcap {

// SplitMix64 (Steele, Lea, Flood 2014). Used for seeding and stream derivation.
class SplitMix64 {
 public:
  explicit SplitMix64(uint64_t state) : state_(state) {}
  uint64_t next();

 private:
  uint64_t state_;
};

// xoshiro256** 1.0 (Blackman & Vigna). The only generator used in this repo;
// all distributions below are implemented here so streams are identical on
// every platform and standard library.
class Rng {
 public:
  explicit Rng(uint64_t seed);

  // Seed for an independent stream identified by (seed, tags...).
  static uint64_t derive(uint64_t seed, std::initializer_list<uint64_t> tags);

  uint64_t next_u64();
  // Uniform integer in [0, bound). bound must be > 0. Lemire's method with rejection.
  uint64_t uniform_below(uint64_t bound);
  // Uniform integer in [lo, hi] inclusive.
  int64_t uniform_int(int64_t lo, int64_t hi);
  // Uniform double in [0, 1) with 53 random bits.
  double uniform();
  // Standard normal via Box-Muller; no cached second value.
  double normal();

 private:
  std::array<uint64_t, 4> s_;
};

}  // namespace synthcap
