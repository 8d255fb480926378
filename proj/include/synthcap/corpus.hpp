// Copyright 2026 The synthcap Authors
// SPDX-License-Identifier: Apache-2.0

// Caption corpus ingestion: COCO-layout caption documents, deterministic
// sampling of synthesis prompts, and the text normalization shared by every
// stage that tokenizes captions.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace synthcap::corpus {

enum class CaptionSource { kGt, kSyn, kPrompt };

const char* to_string(CaptionSource source);
CaptionSource caption_source_from_string(std::string_view name);

struct CaptionRecord {
  std::string id;
  std::string text;
  CaptionSource source = CaptionSource::kPrompt;

  bool operator==(const CaptionRecord&) const = default;
};

// NFC, lowercase, everything except letters, digits, apostrophes and
// whitespace becomes a space, whitespace runs collapse, ends trimmed.
// May return an empty string.
std::string normalize_text(std::string_view text);

// normalize_text that rejects captions with nothing left.
// Throws UsageError("caption normalizes to empty").
std::string normalize_caption(std::string_view text);

// Splits on ASCII whitespace; the input is expected to be normalized.
std::vector<std::string> tokenize(std::string_view normalized);

// Parses a COCO captions JSON document. The annotation id becomes the record
// id; image_id is ignored. Records keep document order.
std::vector<CaptionRecord> parse_coco_captions(std::string_view document);

// Samples n distinct records without replacement (partial Fisher-Yates on
// the repo's xoshiro256** stream seeded with `seed`).
std::vector<CaptionRecord> select_captions(const std::vector<CaptionRecord>& records, std::size_t n,
                                           uint64_t seed);

// Drops records whose normalized text repeats an earlier record's.
std::vector<CaptionRecord> dedupe_captions(const std::vector<CaptionRecord>& records);

std::string captions_to_jsonl(const std::vector<CaptionRecord>& records);
std::vector<CaptionRecord> captions_from_jsonl(std::string_view text);

void write_captions_jsonl(const std::filesystem::path& path, const std::vector<CaptionRecord>& records);
std::vector<CaptionRecord> read_captions_jsonl(const std::filesystem::path& path);

}  // namespace synthcap::corpus
