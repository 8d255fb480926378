// Copyright 2026 The synthcap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace synthcap::io {

std::string read_file(const std::filesystem::path& path);

// Writes through a temporary sibling and renames, so readers never observe a
// partial file.
void write_file(const std::filesystem::path& path, std::string_view bytes);

std::string base64_encode(std::span<const uint8_t> bytes);
std::string base64_encode(std::string_view bytes);
std::string base64_decode(std::string_view text);

// Little-endian scalar packing used by the binary containers.
void put_u32(std::string& out, uint32_t value);
void put_u64(std::string& out, uint64_t value);
void put_f32(std::string& out, float value);
uint32_t get_u32(std::string_view in, std::size_t offset);
uint64_t get_u64(std::string_view in, std::size_t offset);
float get_f32(std::string_view in, std::size_t offset);

}  // namespace synthcap::io
