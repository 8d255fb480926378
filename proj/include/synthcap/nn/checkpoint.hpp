// Copyright 2026 The synthcap Authors
// SPDX-License-Identifier: Apache-2.0

// Checkpoint layout: "SYNTHCAPCKPT" + u32 version, u64 header length, JSON
// header, then little-endian f32 tensors at the offsets the header lists.

#pragma once

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <string>

#include "synthcap/nn/model.hpp"
#include "synthcap/nn/optim.hpp"

namespace synthcap::nn {

inline constexpr uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelConfig config;
  uint64_t vocab_hash = 0;
  ParameterSet<float> params;
  AdamState<float> optimizer;
  // Free-form trainer bookkeeping (epoch, best score, ...); echoed verbatim.
  nlohmann::json train_state = nlohmann::json::object();
};

std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::string_view bytes, const std::string& source = "<memory>");

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace synthcap::nn
