// Copyright 2026 The synthcap Authors
// SPDX-License-Identifier: Apache-2.0

// Caption-audio manifests, their union and subsets, the decoder vocabulary
// and padded training batches.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "synthcap/dsp.hpp"

namespace synthcap::dataset {

enum class Origin { kGt, kSyn };
enum class Split { kTrain, kVal, kEval };

const char* to_string(Origin origin);
const char* to_string(Split split);
Split split_from_string(std::string_view name);

struct TextAudioPair {
  std::string id;
  std::vector<std::string> captions;  // at least one reference
  std::string audio_path;
  Origin origin = Origin::kGt;
  double duration_s = 0.0;

  bool operator==(const TextAudioPair&) const = default;
};

struct DatasetManifest {
  std::vector<TextAudioPair> pairs;
  Split split = Split::kTrain;

  std::size_t size() const { return pairs.size(); }
  bool empty() const { return pairs.empty(); }
  bool operator==(const DatasetManifest&) const = default;
};

// Throws FormatError on duplicate ids, empty ids or empty captions.
void validate_manifest(const DatasetManifest& m);

// a followed by b. Throws UsageError on split mismatch or colliding ids
// (every colliding id is named).
DatasetManifest merge_manifests(const DatasetManifest& a, const DatasetManifest& b);

// max(1, round-half-up(n * pct / 100)).
std::size_t subset_size(std::size_t n, double pct);

// Samples subset_size pairs without replacement and returns them in their
// original manifest order, so a 100% subset reproduces the manifest.
DatasetManifest subset_percentage(const DatasetManifest& m, double pct, uint64_t seed);

std::string manifest_to_jsonl(const DatasetManifest& m);
DatasetManifest manifest_from_jsonl(std::string_view text, Split split);
void write_manifest(const std::filesystem::path& path, const DatasetManifest& m);
DatasetManifest read_manifest(const std::filesystem::path& path, Split split = Split::kTrain);

// Relative audio paths resolve against the manifest's directory.
std::filesystem::path resolve_audio_path(const std::filesystem::path& manifest_path, const TextAudioPair& pair);

// File name under a feature directory for a pair id; unsafe bytes are %XX-escaped.
std::string feature_file_name(std::string_view id);

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kSos = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;
  static constexpr int kNumSpecials = 4;

  Vocabulary();
  // Specials first, then `tokens` in the given order.
  static Vocabulary from_tokens(const std::vector<std::string>& tokens);

  int index(std::string_view token) const;  // kUnk when absent
  const std::string& token(int index) const;
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  // FNV-1a over the newline-joined token list, specials included.
  uint64_t hash() const;

  // One token per line; line i holds index i, the first four lines being the
  // specials <pad> <sos> <eos> <unk>.
  std::string to_text() const;
  static Vocabulary from_text(std::string_view text);

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

// Captions must already be normalized. Tokens with frequency >= min_freq,
// ordered by (frequency desc, token asc).
Vocabulary build_vocabulary(const std::vector<std::string>& captions, int min_freq);

std::vector<int> encode_caption(const Vocabulary& v, std::string_view normalized);
// Drops specials, stops at the first eos, joins with single spaces.
std::string decode_caption(const Vocabulary& v, std::span<const int> indices);

struct Batch {
  std::vector<std::size_t> indices;  // positions in the manifest
  std::vector<int> caption_choice;   // reference used for each item
  std::vector<dsp::FeatureMatrix> features;         // each T_max x M, floor-padded
  std::vector<std::vector<uint8_t>> frame_mask;     // B x T_max
  std::vector<std::vector<int>> tokens;             // B x L_max, pad-padded, sos..eos
  std::vector<std::vector<uint8_t>> token_mask;     // B x L_max

  std::size_t size() const { return indices.size(); }
};

// Index of the reference caption used for pair `pair_index` in `epoch`.
int choose_reference(std::size_t n_captions, uint64_t seed, int epoch, std::size_t pair_index);

// Partitions the manifest into batches. With `shuffle`, pair order is a
// permutation drawn from PRNG(seed, epoch); each pair contributes one
// reference caption drawn from PRNG(seed, epoch, pair). Without `shuffle`,
// manifest order and the first reference are used.
std::vector<Batch> make_batches(const DatasetManifest& m, std::span<const dsp::LogMelSpectrogram> features,
                                const Vocabulary& v, int batch_size, uint64_t seed, int epoch,
                                bool shuffle = true);

}  // namespace synthcap::dataset
