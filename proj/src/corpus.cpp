// Copyright 2026 The synthcap Authors
// SPDX-License-Identifier: Apache-2.0

#include "synthcap/corpus.hpp"

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include <algorithm>
#include <cctype>
#include <json.hpp>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_set>

#include "synthcap/error.hpp"
#include "synthcap/io.hpp"
#include "synthcap/rng.hpp"

namespace synthcap::corpus {

using nlohmann::json;

const char* to_string(CaptionSource source) {
  switch (source) {
    case CaptionSource::kGt:
      return "gt";
    case CaptionSource::kSyn:
      return "syn";
    case CaptionSource::kPrompt:
      return "prompt";
  }
  return "prompt";
}

CaptionSource caption_source_from_string(std::string_view name) {
  if (name == "gt") return CaptionSource::kGt;
  if (name == "syn") return CaptionSource::kSyn;
  if (name == "prompt") return CaptionSource::kPrompt;
  throw FormatError("unknown caption source \"" + std::string(name) + "\"");
}

namespace {

icu::UnicodeString nfc(const icu::UnicodeString& in) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* normalizer = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) throw Error(ErrorClass::kIo, "ICU NFC normalizer unavailable");
  icu::UnicodeString out = normalizer->normalize(in, status);
  if (U_FAILURE(status)) throw FormatError("NFC normalization failed");
  return out;
}

}  // namespace

std::string normalize_text(std::string_view text) {
  icu::UnicodeString s = nfc(icu::UnicodeString::fromUTF8(
      icu::StringPiece(text.data(), static_cast<int32_t>(text.size()))));
  s.toLower(icu::Locale::getRoot());
  s = nfc(s);

  icu::UnicodeString kept;
  bool pending_space = false;
  for (int32_t i = 0; i < s.length();) {
    const UChar32 c = s.char32At(i);
    i += U16_LENGTH(c);
    const bool keep = u_isalpha(c) || u_isdigit(c) || c == U'\'';
    if (!keep) {
      pending_space = true;
      continue;
    }
    if (pending_space && kept.length() > 0) kept.append(static_cast<UChar>(u' '));
    pending_space = false;
    kept.append(c);
  }
  std::string out;
  kept.toUTF8String(out);
  return out;
}

std::string normalize_caption(std::string_view text) {
  std::string out = normalize_text(text);
  if (out.empty()) throw UsageError("caption normalizes to empty");
  return out;
}

std::vector<std::string> tokenize(std::string_view normalized) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < normalized.size()) {
    while (i < normalized.size() && std::isspace(static_cast<unsigned char>(normalized[i]))) ++i;
    std::size_t j = i;
    while (j < normalized.size() && !std::isspace(static_cast<unsigned char>(normalized[j]))) ++j;
    if (j > i) tokens.emplace_back(normalized.substr(i, j - i));
    i = j;
  }
  return tokens;
}

static bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

std::vector<CaptionRecord> parse_coco_captions(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document.begin(), document.end());
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed captions document: ") + e.what(), e.byte);
  }
  if (!doc.is_object() || !doc.contains("annotations") || !doc["annotations"].is_array()) {
    throw FormatError("captions document has no \"annotations\" array");
  }

  std::vector<CaptionRecord> records;
  records.reserve(doc["annotations"].size());
  std::vector<std::string> missing;
  std::unordered_set<int64_t> seen;
  std::size_t position = 0;
  for (const auto& entry : doc["annotations"]) {
    if (!entry.is_object() || !entry.contains("id") || !entry["id"].is_number_integer()) {
      throw FormatError("annotation #" + std::to_string(position) + " lacks an integer \"id\"");
    }
    const auto id = entry["id"].get<int64_t>();
    if (!seen.insert(id).second) {
      throw FormatError("duplicate annotation id " + std::to_string(id));
    }
    if (!entry.contains("caption") || !entry["caption"].is_string()) {
      missing.push_back(std::to_string(id));
    } else {
      auto text = entry["caption"].get<std::string>();
      if (blank(text)) throw FormatError("annotation " + std::to_string(id) + " has an empty caption");
      records.push_back({std::to_string(id), std::move(text), CaptionSource::kPrompt});
    }
    ++position;
  }
  if (!missing.empty()) {
    std::string ids;
    for (const auto& id : missing) ids += (ids.empty() ? "" : ", ") + id;
    throw FormatError("annotations missing \"caption\": " + ids);
  }
  return records;
}

std::vector<CaptionRecord> select_captions(const std::vector<CaptionRecord>& records, std::size_t n,
                                           uint64_t seed) {
  if (n == 0) throw UsageError("select_captions: n must be at least 1");
  if (n > records.size()) {
    throw UsageError("select_captions: requested " + std::to_string(n) + " captions but only " +
                     std::to_string(records.size()) + " available");
  }
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  std::vector<CaptionRecord> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + rng.uniform_below(order.size() - i);
    std::swap(order[i], order[j]);
    out.push_back(records[order[i]]);
  }
  return out;
}

std::vector<CaptionRecord> dedupe_captions(const std::vector<CaptionRecord>& records) {
  std::set<std::string> seen;
  std::vector<CaptionRecord> out;
  for (const auto& r : records) {
    if (seen.insert(normalize_text(r.text)).second) out.push_back(r);
  }
  return out;
}

std::string captions_to_jsonl(const std::vector<CaptionRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    json row = {{"id", r.id}, {"text", r.text}, {"source", to_string(r.source)}};
    out += row.dump();
    out += '\n';
  }
  return out;
}

std::vector<CaptionRecord> captions_from_jsonl(std::string_view text) {
  std::vector<CaptionRecord> records;
  std::unordered_set<std::string> ids;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    json row;
    try {
      row = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError("captions line " + std::to_string(line_no) + ": " + e.what(), e.byte);
    }
    if (!row.is_object() || !row.contains("id") || !row["id"].is_string() || !row.contains("text") ||
        !row["text"].is_string()) {
      throw FormatError("captions line " + std::to_string(line_no) + ": expected {id, text, source}");
    }
    CaptionRecord r;
    r.id = row["id"].get<std::string>();
    r.text = row["text"].get<std::string>();
    r.source = caption_source_from_string(row.value("source", "prompt"));
    if (r.id.empty()) throw FormatError("captions line " + std::to_string(line_no) + ": empty id");
    if (blank(r.text)) throw FormatError("captions line " + std::to_string(line_no) + ": empty text");
    if (!ids.insert(r.id).second) throw FormatError("duplicate caption id " + r.id);
    records.push_back(std::move(r));
  }
  return records;
}

void write_captions_jsonl(const std::filesystem::path& path, const std::vector<CaptionRecord>& records) {
  io::write_file(path, captions_to_jsonl(records));
}

std::vector<CaptionRecord> read_captions_jsonl(const std::filesystem::path& path) {
  return captions_from_jsonl(io::read_file(path));
}

}  // namespace synthcap::corpus
