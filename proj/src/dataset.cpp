// Copyright 2026 The synthcap Authors
// SPDX-License-Identifier: Apache-2.0

#include "synthcap/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <json.hpp>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_set>

#include "synthcap/corpus.hpp"
#include "synthcap/error.hpp"
#include "synthcap/hash.hpp"
#include "synthcap/io.hpp"
#include "synthcap/rng.hpp"

namespace synthcap::dataset {

using nlohmann::json;

namespace {
constexpr uint64_t kShuffleStream = 0x5348554646ULL;
constexpr uint64_t kCaptionStream = 0x43415054ULL;
}  // namespace

const char* to_string(Origin origin) { return origin == Origin::kGt ? "gt" : "syn"; }

const char* to_string(Split split) {
  switch (split) {
    case Split::kTrain:
      return "train";
    case Split::kVal:
      return "val";
    case Split::kEval:
      return "eval";
  }
  return "train";
}

Split split_from_string(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "val") return Split::kVal;
  if (name == "eval") return Split::kEval;
  throw UsageError("unknown split \"" + std::string(name) + "\"");
}

void validate_manifest(const DatasetManifest& m) {
  std::unordered_set<std::string> ids;
  for (const auto& p : m.pairs) {
    if (p.id.empty()) throw FormatError("manifest pair with empty id");
    if (!ids.insert(p.id).second) throw FormatError("duplicate manifest id \"" + p.id + "\"");
    if (p.captions.empty()) throw FormatError("manifest pair \"" + p.id + "\" has no captions");
    for (const auto& c : p.captions) {
      if (corpus::normalize_text(c).empty()) throw FormatError("manifest pair \"" + p.id + "\" has an empty caption");
    }
  }
}

DatasetManifest merge_manifests(const DatasetManifest& a, const DatasetManifest& b) {
  if (a.split != b.split) {
    throw UsageError(std::string("cannot merge a ") + to_string(a.split) + " manifest with a " + to_string(b.split) +
                     " manifest");
  }
  std::unordered_set<std::string> ids;
  for (const auto& p : a.pairs) ids.insert(p.id);
  std::vector<std::string> collisions;
  for (const auto& p : b.pairs) {
    if (ids.count(p.id)) collisions.push_back(p.id);
  }
  if (!collisions.empty()) {
    std::string list;
    for (const auto& id : collisions) list += (list.empty() ? "\"" : ", \"") + id + "\"";
    throw UsageError("manifest id collision: " + list);
  }
  DatasetManifest out;
  out.split = a.split;
  out.pairs.reserve(a.size() + b.size());
  out.pairs.insert(out.pairs.end(), a.pairs.begin(), a.pairs.end());
  out.pairs.insert(out.pairs.end(), b.pairs.begin(), b.pairs.end());
  return out;
}

std::size_t subset_size(std::size_t n, double pct) {
  if (!(pct > 0.0 && pct <= 100.0)) throw UsageError("subset percentage must lie in (0, 100]");
  const long double exact = static_cast<long double>(n) * pct / 100.0L;
  const auto k = static_cast<std::size_t>(std::floor(exact + 0.5L));
  return std::max<std::size_t>(1, k);
}

DatasetManifest subset_percentage(const DatasetManifest& m, double pct, uint64_t seed) {
  if (m.empty()) throw UsageError("cannot take a subset of an empty manifest");
  const std::size_t k = subset_size(m.size(), pct);
  std::vector<std::size_t> order(m.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  for (std::size_t i = 0; i < k; ++i) std::swap(order[i], order[i + rng.uniform_below(order.size() - i)]);
  order.resize(k);
  std::sort(order.begin(), order.end());
  DatasetManifest out;
  out.split = m.split;
  for (std::size_t i : order) out.pairs.push_back(m.pairs[i]);
  return out;
}

std::string manifest_to_jsonl(const DatasetManifest& m) {
  std::string out;
  for (const auto& p : m.pairs) {
    json row = {{"id", p.id},
                {"captions", p.captions},
                {"audio_path", p.audio_path},
                {"origin", to_string(p.origin)},
                {"duration_s", p.duration_s}};
    out += row.dump();
    out += '\n';
  }
  return out;
}

DatasetManifest manifest_from_jsonl(std::string_view text, Split split) {
  DatasetManifest m;
  m.split = split;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json row;
    try {
      row = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError("manifest line " + std::to_string(line_no) + ": " + e.what(), e.byte);
    }
    const std::string where = "manifest line " + std::to_string(line_no) + ": ";
    if (!row.is_object()) throw FormatError(where + "expected an object");
    if (!row.contains("id") || !row["id"].is_string()) throw FormatError(where + "\"id\" must be a string");
    if (!row.contains("captions") || !row["captions"].is_array() || row["captions"].empty()) {
      throw FormatError(where + "\"captions\" must be a non-empty array");
    }
    if (!row.contains("audio_path") || !row["audio_path"].is_string()) {
      throw FormatError(where + "\"audio_path\" must be a string");
    }
    if (!row.contains("origin") || !row["origin"].is_string()) throw FormatError(where + "\"origin\" must be a string");
    if (!row.contains("duration_s") || !row["duration_s"].is_number()) {
      throw FormatError(where + "\"duration_s\" must be a number");
    }
    TextAudioPair p;
    p.id = row["id"].get<std::string>();
    for (const auto& c : row["captions"]) {
      if (!c.is_string()) throw FormatError(where + "captions must be strings");
      p.captions.push_back(c.get<std::string>());
    }
    p.audio_path = row["audio_path"].get<std::string>();
    const auto origin = row["origin"].get<std::string>();
    if (origin == "gt") {
      p.origin = Origin::kGt;
    } else if (origin == "syn") {
      p.origin = Origin::kSyn;
    } else {
      throw FormatError(where + "origin must be \"gt\" or \"syn\"");
    }
    p.duration_s = row["duration_s"].get<double>();
    m.pairs.push_back(std::move(p));
  }
  validate_manifest(m);
  return m;
}

void write_manifest(const std::filesystem::path& path, const DatasetManifest& m) {
  io::write_file(path, manifest_to_jsonl(m));
}

DatasetManifest read_manifest(const std::filesystem::path& path, Split split) {
  return manifest_from_jsonl(io::read_file(path), split);
}

std::filesystem::path resolve_audio_path(const std::filesystem::path& manifest_path, const TextAudioPair& pair) {
  std::filesystem::path audio(pair.audio_path);
  if (audio.is_absolute()) return audio;
  return manifest_path.parent_path() / audio;
}

std::string feature_file_name(std::string_view id) {
  static const char* kHex = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : id) {
    if (std::isalnum(c) || c == '-' || c == '_' || (c == '.' && !out.empty())) {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back('%');
      out.push_back(kHex[c >> 4]);
      out.push_back(kHex[c & 15]);
    }
  }
  return out + ".lmf";
}

// ---- vocabulary --------------------------------------------------------------

Vocabulary::Vocabulary() : tokens_{"<pad>", "<sos>", "<eos>", "<unk>"} {
  for (std::size_t i = 0; i < tokens_.size(); ++i) index_.emplace(tokens_[i], static_cast<int>(i));
}

Vocabulary Vocabulary::from_tokens(const std::vector<std::string>& tokens) {
  Vocabulary v;
  v.tokens_.insert(v.tokens_.end(), tokens.begin(), tokens.end());
  v.index_.clear();
  for (std::size_t i = 0; i < v.tokens_.size(); ++i) {
    if (!v.index_.emplace(v.tokens_[i], static_cast<int>(i)).second) {
      throw FormatError("vocabulary token \"" + v.tokens_[i] + "\" appears twice");
    }
  }
  return v;
}

int Vocabulary::index(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(int index) const {
  if (index < 0 || static_cast<std::size_t>(index) >= tokens_.size()) {
    throw UsageError("token index " + std::to_string(index) + " outside vocabulary");
  }
  return tokens_[static_cast<std::size_t>(index)];
}

uint64_t Vocabulary::hash() const {
  Fnv1a64 h;
  for (const auto& t : tokens_) h.update(t).update("\n");
  return h.digest();
}

std::string Vocabulary::to_text() const {
  std::string out;
  for (const auto& t : tokens_) out += t + "\n";
  return out;
}

Vocabulary Vocabulary::from_text(std::string_view text) {
  std::vector<std::string> lines;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  const std::vector<std::string> specials = {"<pad>", "<sos>", "<eos>", "<unk>"};
  if (lines.size() < specials.size() || !std::equal(specials.begin(), specials.end(), lines.begin())) {
    throw FormatError("vocabulary file must start with <pad> <sos> <eos> <unk>");
  }
  return from_tokens(std::vector<std::string>(lines.begin() + kNumSpecials, lines.end()));
}

Vocabulary build_vocabulary(const std::vector<std::string>& captions, int min_freq) {
  if (captions.empty()) throw UsageError("cannot build a vocabulary from an empty corpus");
  std::map<std::string, std::size_t> counts;
  for (const auto& c : captions) {
    for (auto& t : corpus::tokenize(c)) ++counts[t];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked;
  for (auto& [tok, n] : counts) {
    if (n >= static_cast<std::size_t>(std::max(min_freq, 1))) ranked.emplace_back(tok, n);
  }
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  std::vector<std::string> tokens;
  for (auto& [tok, n] : ranked) tokens.push_back(tok);
  return Vocabulary::from_tokens(tokens);
}

std::vector<int> encode_caption(const Vocabulary& v, std::string_view normalized) {
  std::vector<int> out{Vocabulary::kSos};
  for (const auto& t : corpus::tokenize(normalized)) out.push_back(v.index(t));
  out.push_back(Vocabulary::kEos);
  return out;
}

std::string decode_caption(const Vocabulary& v, std::span<const int> indices) {
  std::string out;
  for (int i : indices) {
    if (i == Vocabulary::kEos) break;
    if (i < Vocabulary::kNumSpecials) continue;
    if (!out.empty()) out.push_back(' ');
    out += v.token(i);
  }
  return out;
}

// ---- batching ----------------------------------------------------------------

int choose_reference(std::size_t n_captions, uint64_t seed, int epoch, std::size_t pair_index) {
  if (n_captions <= 1) return 0;
  Rng rng(Rng::derive(seed, {kCaptionStream, static_cast<uint64_t>(epoch), pair_index}));
  return static_cast<int>(rng.uniform_below(n_captions));
}

std::vector<Batch> make_batches(const DatasetManifest& m, std::span<const dsp::LogMelSpectrogram> features,
                                const Vocabulary& v, int batch_size, uint64_t seed, int epoch, bool shuffle) {
  if (batch_size <= 0) throw UsageError("batch size must be positive");
  if (features.size() != m.size()) throw UsageError("every manifest pair needs features");

  std::vector<std::size_t> order(m.size());
  std::iota(order.begin(), order.end(), 0);
  if (shuffle) {
    Rng rng(Rng::derive(seed, {kShuffleStream, static_cast<uint64_t>(epoch)}));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.uniform_below(i)]);
  }

  std::vector<Batch> batches;
  for (std::size_t begin = 0; begin < order.size(); begin += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(batch_size));
    Batch b;
    std::vector<std::vector<int>> seqs;
    Eigen::Index max_t = 0, n_mels = 0;
    for (std::size_t k = begin; k < end; ++k) {
      const std::size_t idx = order[k];
      const auto& pair = m.pairs[idx];
      if (pair.captions.empty()) throw UsageError("pair \"" + pair.id + "\" has no captions");
      const int choice = shuffle ? choose_reference(pair.captions.size(), seed, epoch, idx) : 0;
      b.indices.push_back(idx);
      b.caption_choice.push_back(choice);
      seqs.push_back(encode_caption(v, corpus::normalize_text(pair.captions[static_cast<std::size_t>(choice)])));
      max_t = std::max(max_t, features[idx].frames());
      n_mels = std::max(n_mels, features[idx].bins());
    }
    std::size_t max_l = 0;
    for (const auto& s : seqs) max_l = std::max(max_l, s.size());
    for (std::size_t j = 0; j < b.indices.size(); ++j) {
      const auto& f = features[b.indices[j]].values;
      if (f.cols() != n_mels) throw UsageError("feature bin counts differ within a batch");
      dsp::FeatureMatrix padded = dsp::FeatureMatrix::Constant(max_t, n_mels, dsp::kLogFloor);
      padded.topRows(f.rows()) = f;
      b.features.push_back(std::move(padded));
      std::vector<uint8_t> fmask(static_cast<std::size_t>(max_t), 0);
      std::fill_n(fmask.begin(), f.rows(), 1);
      b.frame_mask.push_back(std::move(fmask));
      std::vector<int> toks(max_l, Vocabulary::kPad);
      std::vector<uint8_t> tmask(max_l, 0);
      std::copy(seqs[j].begin(), seqs[j].end(), toks.begin());
      std::fill_n(tmask.begin(), seqs[j].size(), 1);
      b.tokens.push_back(std::move(toks));
      b.token_mask.push_back(std::move(tmask));
    }
    batches.push_back(std::move(b));
  }
  return batches;
}

}  // namespace synthcap::dataset
