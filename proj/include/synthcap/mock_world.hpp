// Copyright 2026 The synthcap Authors
// SPDX-License-Identifier: Apache-2.0

// Desk-scale stand-in for the captioned-audio world. A small grammar of
// sound-producing clauses yields ground-truth clips with paraphrased
// references and COCO-like synthesis prompts. Both kinds of audio come from
// the mock synthesizer under one world seed, so they share the token-to-sound
// mapping.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "synthcap/audio.hpp"

namespace synthcap::world {

struct WorldConfig {
  uint64_t seed = 0;  // world seed: fixes the token-to-sound mapping
  double duration_s = 2.0;
  int sample_rate = 16000;
  double adjective_prob = 0.3;  // prompts only
  int max_clauses = 2;
};

struct GtClip {
  std::string id;
  std::vector<std::string> references;  // first one drives the audio
};

// `stream` separates independent draws (train / val / eval).
std::vector<GtClip> gt_clips(const WorldConfig& cfg, std::size_t n, uint64_t stream, const std::string& id_prefix);

// COCO-style image-caption prompts: a clause, optionally a second one, and
// visual adjectives that carry no acoustic meaning in the real world.
std::vector<std::string> prompt_captions(const WorldConfig& cfg, std::size_t n, uint64_t stream);

AudioClip render(const WorldConfig& cfg, const std::string& caption);

// COCO captions document {"annotations": [{"id", "image_id", "caption"}]}.
std::string coco_document(const std::vector<std::string>& captions);

}  // namespace synthcap::world
