// Copyright 2026 The synthcap Authors
// SPDX-License-Identifier: Apache-2.0

#include "synthcap/audio.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>

#include "synthcap/error.hpp"
#include "synthcap/io.hpp"

namespace synthcap {

void validate_clip(const AudioClip& clip) {
  if (clip.sample_rate <= 0) throw UsageError("audio clip sample rate must be positive");
  for (float s : clip.samples) {
    if (!(std::fabs(s) <= 1.0f)) throw UsageError("audio sample outside [-1, 1]");
  }
}

namespace wav {

namespace {

constexpr float kFullScale = 32767.0f;

void put_u16(std::string& out, uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}

uint16_t get_u16(std::string_view in, std::size_t offset) {
  return static_cast<uint16_t>(static_cast<uint8_t>(in[offset]) |
                               (static_cast<uint8_t>(in[offset + 1]) << 8));
}

}  // namespace

std::string encode(const AudioClip& clip) {
  validate_clip(clip);
  const auto data_bytes = static_cast<uint32_t>(clip.samples.size() * 2);
  std::string out;
  out.reserve(kCanonicalHeaderBytes + data_bytes);
  out += "RIFF";
  io::put_u32(out, 36 + data_bytes);
  out += "WAVE";
  out += "fmt ";
  io::put_u32(out, 16);
  put_u16(out, 1);  // PCM
  put_u16(out, 1);  // mono
  io::put_u32(out, static_cast<uint32_t>(clip.sample_rate));
  io::put_u32(out, static_cast<uint32_t>(clip.sample_rate) * 2);
  put_u16(out, 2);   // block align
  put_u16(out, 16);  // bits per sample
  out += "data";
  io::put_u32(out, data_bytes);
  for (float s : clip.samples) {
    const auto q = static_cast<int16_t>(std::lround(s * kFullScale));
    put_u16(out, static_cast<uint16_t>(q));
  }
  return out;
}

AudioClip decode(std::string_view bytes) {
  if (bytes.size() < 12) throw FormatError("wav: truncated RIFF header");
  if (bytes.substr(0, 4) != "RIFF" || bytes.substr(8, 4) != "WAVE") {
    throw FormatError("wav: missing RIFF/WAVE signature");
  }
  bool have_fmt = false;
  AudioClip clip;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::string_view id = bytes.substr(pos, 4);
    const uint32_t size = io::get_u32(bytes, pos + 4);
    const std::size_t body = pos + 8;
    if (id == "fmt ") {
      if (size < 16 || body + size > bytes.size()) throw FormatError("wav: truncated \"fmt \" chunk");
      const uint16_t format = get_u16(bytes, body);
      const uint16_t channels = get_u16(bytes, body + 2);
      const uint32_t rate = io::get_u32(bytes, body + 4);
      const uint16_t bits = get_u16(bytes, body + 14);
      if (format != 1) throw FormatError("wav: \"fmt \" chunk declares non-PCM format " + std::to_string(format));
      if (channels != 1) throw FormatError("wav: \"fmt \" chunk declares " + std::to_string(channels) + " channels, expected mono");
      if (bits != 16) throw FormatError("wav: \"fmt \" chunk declares " + std::to_string(bits) + "-bit samples, expected 16");
      if (rate == 0) throw FormatError("wav: \"fmt \" chunk declares zero sample rate");
      clip.sample_rate = static_cast<int>(rate);
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw FormatError("wav: \"data\" chunk precedes \"fmt \" chunk");
      if (body + size > bytes.size()) {
        throw FormatError("wav: \"data\" chunk truncated: declares " + std::to_string(size) + " bytes, " +
                          std::to_string(bytes.size() - body) + " present");
      }
      if (size % 2 != 0) throw FormatError("wav: \"data\" chunk has odd byte count");
      clip.samples.resize(size / 2);
      for (std::size_t i = 0; i < clip.samples.size(); ++i) {
        const auto q = static_cast<int16_t>(get_u16(bytes, body + 2 * i));
        clip.samples[i] = std::max(-1.0f, static_cast<float>(q) / kFullScale);
      }
      return clip;
    }
    pos = body + size + (size & 1U);
  }
  if (!have_fmt) throw FormatError("wav: missing \"fmt \" chunk");
  throw FormatError("wav: missing \"data\" chunk");
}

void write(const std::filesystem::path& path, const AudioClip& clip) { io::write_file(path, encode(clip)); }

AudioClip read(const std::filesystem::path& path) { return decode(io::read_file(path)); }

}  // namespace wav
}  // namespace synthcap
