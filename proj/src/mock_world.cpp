// Copyright 2026 The synthcap Authors
// SPDX-License-Identifier: Apache-2.0

#include "synthcap/mock_world.hpp"

#include <json.hpp>

#include "synthcap/rng.hpp"
#include "synthcap/tta.hpp"

namespace synthcap::world {

namespace {

struct Source {
  const char* subject;
  std::vector<const char*> verbs;  // first is canonical
};

const std::vector<Source>& sources() {
  static const std::vector<Source> s = {
      {"dog", {"barks", "is barking"}},    {"cat", {"meows", "is meowing"}},
      {"man", {"speaks", "talks"}},        {"woman", {"laughs", "is laughing"}},
      {"car", {"passes by", "drives past"}}, {"bird", {"chirps", "sings"}},
      {"baby", {"cries", "is crying"}},    {"bell", {"rings", "is ringing"}},
      {"engine", {"idles", "hums"}},       {"crowd", {"cheers", "applauds"}},
  };
  return s;
}

const std::vector<const char*>& connectors() {
  static const std::vector<const char*> c = {"while", "and", "followed by"};
  return c;
}

const std::vector<const char*>& adjectives() {
  static const std::vector<const char*> a = {"small", "brown", "white", "young", "old", "red", "large"};
  return a;
}

struct Clause {
  std::size_t source;
};

std::vector<Clause> draw_clauses(Rng& rng, int max_clauses) {
  const int n = 1 + static_cast<int>(rng.uniform_below(static_cast<uint64_t>(max_clauses)));
  std::vector<Clause> out;
  while (static_cast<int>(out.size()) < n) {
    const std::size_t s = rng.uniform_below(sources().size());
    bool dup = false;
    for (const auto& c : out) dup = dup || c.source == s;
    if (!dup) out.push_back({s});
  }
  return out;
}

std::string clause_text(const Clause& c, std::size_t verb, const char* article, const char* adjective) {
  const Source& s = sources()[c.source];
  std::string out = article;
  if (adjective) out += std::string(" ") + adjective;
  return out + " " + s.subject + " " + s.verbs[verb % s.verbs.size()];
}

}  // namespace

std::vector<GtClip> gt_clips(const WorldConfig& cfg, std::size_t n, uint64_t stream, const std::string& id_prefix) {
  Rng rng(Rng::derive(cfg.seed, {0x4754, stream}));
  std::vector<GtClip> out;
  for (std::size_t i = 0; i < n; ++i) {
    const auto clauses = draw_clauses(rng, cfg.max_clauses);
    const std::size_t conn = rng.uniform_below(connectors().size());
    GtClip clip;
    clip.id = id_prefix + std::to_string(i);
    // Reference k uses verb variant k and, for k > 0, "the" and a different connector.
    for (std::size_t k = 0; k < 2; ++k) {
      std::string text;
      for (std::size_t j = 0; j < clauses.size(); ++j) {
        if (j) text += std::string(" ") + connectors()[(conn + k) % connectors().size()] + " ";
        text += clause_text(clauses[j], k, k == 0 ? "a" : "the", nullptr);
      }
      clip.references.push_back(text);
    }
    out.push_back(std::move(clip));
  }
  return out;
}

std::vector<std::string> prompt_captions(const WorldConfig& cfg, std::size_t n, uint64_t stream) {
  Rng rng(Rng::derive(cfg.seed, {0x434f434f, stream}));
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) {
    const auto clauses = draw_clauses(rng, cfg.max_clauses);
    const std::size_t conn = rng.uniform_below(connectors().size());
    std::string text;
    for (std::size_t j = 0; j < clauses.size(); ++j) {
      const char* adj = rng.uniform() < cfg.adjective_prob ? adjectives()[rng.uniform_below(adjectives().size())] : nullptr;
      const std::size_t verb = rng.uniform_below(2);
      if (j) text += std::string(" ") + connectors()[conn] + " ";
      text += clause_text(clauses[j], verb, "a", adj);
    }
    text[0] = static_cast<char>(text[0] - 'a' + 'A');
    out.push_back(text + ".");
  }
  return out;
}

AudioClip render(const WorldConfig& cfg, const std::string& caption) {
  tta::GenerationRequest req;
  req.caption = caption;
  req.duration_s = cfg.duration_s;
  req.seed = cfg.seed;
  return tta::mock_synthesize(req, cfg.sample_rate);
}

std::string coco_document(const std::vector<std::string>& captions) {
  nlohmann::json ann = nlohmann::json::array();
  for (std::size_t i = 0; i < captions.size(); ++i) {
    ann.push_back({{"id", i + 1}, {"image_id", 100000 + i / 5}, {"caption", captions[i]}});
  }
  return nlohmann::json{{"annotations", ann}}.dump(1) + "\n";
}

}  // namespace synthcap::world
