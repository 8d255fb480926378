// Copyright 2026 The synthcap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace synthcap {

// Mono PCM waveform with samples in [-1, 1].
struct AudioClip {
  int sample_rate = 16000;
  std::vector<float> samples;

  double duration_s() const { return static_cast<double>(samples.size()) / sample_rate; }
  bool operator==(const AudioClip&) const = default;
};

// Throws UsageError when the rate is not positive or a sample lies outside [-1, 1].
void validate_clip(const AudioClip& clip);

namespace wav {

inline constexpr std::size_t kCanonicalHeaderBytes = 44;

// Canonical 44-byte RIFF/WAVE header, PCM 16-bit little-endian, mono.
std::string encode(const AudioClip& clip);

// Accepts any chunk order and skips unknown chunks. Rejects non-PCM, non-mono
// and non-16-bit data, and truncated chunks, naming the chunk at fault.
AudioClip decode(std::string_view bytes);

void write(const std::filesystem::path& path, const AudioClip& clip);
AudioClip read(const std::filesystem::path& path);

}  // namespace wav
}  // namespace synthcap
