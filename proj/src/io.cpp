// Copyright 2026 The synthcap Authors
// SPDX-License-Identifier: Apache-2.0

#include "synthcap/io.hpp"

#include <openssl/evp.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "synthcap/error.hpp"

namespace synthcap::io {

static_assert(std::endian::native == std::endian::little,
              "binary containers assume a little-endian host");

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw IoError("read failed: " + path.string());
  return buffer.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("rename to " + path.string() + " failed: " + ec.message());
}

std::string base64_encode(std::span<const uint8_t> bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::string base64_encode(std::string_view bytes) {
  return base64_encode(
      std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(bytes.data()), bytes.size()));
}

std::string base64_decode(std::string_view text) {
  if (text.size() % 4 != 0) throw FormatError("base64 length is not a multiple of 4");
  std::string out(3 * text.size() / 4, '\0');
  const int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(text.data()),
                                static_cast<int>(text.size()));
  if (n < 0) throw FormatError("invalid base64 payload");
  std::size_t padding = 0;
  if (!text.empty() && text.back() == '=') ++padding;
  if (text.size() > 1 && text[text.size() - 2] == '=') ++padding;
  out.resize(static_cast<std::size_t>(n) - padding);
  return out;
}

void put_u32(std::string& out, uint32_t value) {
  char buf[4];
  std::memcpy(buf, &value, 4);
  out.append(buf, 4);
}

void put_u64(std::string& out, uint64_t value) {
  char buf[8];
  std::memcpy(buf, &value, 8);
  out.append(buf, 8);
}

void put_f32(std::string& out, float value) {
  char buf[4];
  std::memcpy(buf, &value, 4);
  out.append(buf, 4);
}

uint32_t get_u32(std::string_view in, std::size_t offset) {
  if (offset + 4 > in.size()) throw FormatError("unexpected end of data");
  uint32_t v;
  std::memcpy(&v, in.data() + offset, 4);
  return v;
}

uint64_t get_u64(std::string_view in, std::size_t offset) {
  if (offset + 8 > in.size()) throw FormatError("unexpected end of data");
  uint64_t v;
  std::memcpy(&v, in.data() + offset, 8);
  return v;
}

float get_f32(std::string_view in, std::size_t offset) {
  if (offset + 4 > in.size()) throw FormatError("unexpected end of data");
  float v;
  std::memcpy(&v, in.data() + offset, 4);
  return v;
}

}  // namespace synthcap::io
