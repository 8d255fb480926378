// Copyright 2026 The synthcap Authors
// SPDX-License-Identifier: Apache-2.0

#include "synthcap/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <tuple>
#include <unordered_map>
#include <unordered_set>

#include "synthcap/error.hpp"
#include "synthcap/metrics/porter.hpp"

namespace synthcap::metrics {

namespace {

using NGram = std::vector<std::string>;
using NGramCounts = std::map<NGram, int>;

NGramCounts ngrams(const Tokens& t, std::size_t n) {
  NGramCounts out;
  for (std::size_t i = 0; i + n <= t.size(); ++i) out[NGram(t.begin() + static_cast<std::ptrdiff_t>(i),
                                                            t.begin() + static_cast<std::ptrdiff_t>(i + n))]++;
  return out;
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

void validate_corpus(const EvalCorpus& corpus) {
  std::unordered_set<std::string> seen;
  for (const auto& item : corpus.items) {
    if (!seen.insert(item.id).second) throw UsageError("duplicate evaluation id \"" + item.id + "\"");
    if (item.references.empty()) throw UsageError("item \"" + item.id + "\" has no references");
    for (const auto& r : item.references) {
      if (r.empty()) throw UsageError("item \"" + item.id + "\" has an empty reference");
    }
  }
}

// ---- BLEU

std::array<double, 4> bleu_all(const EvalCorpus& corpus) {
  validate_corpus(corpus);
  std::array<double, 4> matched{}, total{};
  double c = 0.0, r = 0.0;
  for (const auto& item : corpus.items) {
    const std::size_t len = item.candidate.size();
    c += static_cast<double>(len);
    std::size_t best = item.references.front().size();
    for (const auto& ref : item.references) {
      const auto d = [&](std::size_t x) { return x > len ? x - len : len - x; };
      if (d(ref.size()) < d(best) || (d(ref.size()) == d(best) && ref.size() < best)) best = ref.size();
    }
    r += static_cast<double>(best);
    for (std::size_t n = 1; n <= 4; ++n) {
      const NGramCounts cand = ngrams(item.candidate, n);
      NGramCounts max_ref;
      for (const auto& ref : item.references) {
        for (const auto& [g, k] : ngrams(ref, n)) max_ref[g] = std::max(max_ref[g], k);
      }
      for (const auto& [g, k] : cand) {
        auto it = max_ref.find(g);
        matched[n - 1] += it == max_ref.end() ? 0 : std::min(k, it->second);
      }
      total[n - 1] += len >= n ? static_cast<double>(len - n + 1) : 0.0;
    }
  }
  if (c == 0.0) throw UsageError("BLEU undefined: every candidate is empty");
  const double bp = c > r ? 1.0 : std::exp(1.0 - r / c);
  std::array<double, 4> out{};
  double log_sum = 0.0;
  bool zero = false;
  for (int n = 0; n < 4; ++n) {
    const double p = total[n] > 0 ? matched[n] / total[n] : 0.0;
    if (p == 0.0) zero = true;
    if (!zero) log_sum += std::log(p);
    out[n] = zero ? 0.0 : bp * std::exp(log_sum / (n + 1));
  }
  return out;
}

double bleu(const EvalCorpus& corpus, int n) {
  if (n < 1 || n > 4) throw UsageError("BLEU order must be 1..4, got " + std::to_string(n));
  return bleu_all(corpus)[static_cast<std::size_t>(n - 1)];
}

// ---- ROUGE-L

double rouge_l_item(const Tokens& cand, const std::vector<Tokens>& refs) {
  if (cand.empty()) return 0.0;
  constexpr double kBeta2 = 1.2 * 1.2;
  double best = 0.0;
  for (const auto& ref : refs) {
    std::vector<std::vector<int>> dp(cand.size() + 1, std::vector<int>(ref.size() + 1, 0));
    for (std::size_t i = 1; i <= cand.size(); ++i) {
      for (std::size_t j = 1; j <= ref.size(); ++j) {
        dp[i][j] = cand[i - 1] == ref[j - 1] ? dp[i - 1][j - 1] + 1 : std::max(dp[i - 1][j], dp[i][j - 1]);
      }
    }
    const double l = dp[cand.size()][ref.size()];
    if (l == 0) continue;
    const double p = l / static_cast<double>(cand.size());
    const double r = l / static_cast<double>(ref.size());
    best = std::max(best, (1 + kBeta2) * p * r / (r + kBeta2 * p));
  }
  return best;
}

double rouge_l(const EvalCorpus& corpus) {
  validate_corpus(corpus);
  std::vector<double> s;
  for (const auto& item : corpus.items) s.push_back(rouge_l_item(item.candidate, item.references));
  return mean(s);
}

// ---- METEOR-lite

namespace {

// Alignment quality compared lexicographically: more exact matches, then
// more stem matches, then more continuations (fewer chunks).
struct Align {
  int exact = 0, stem = 0, cont = 0;
  bool operator<(const Align& o) const { return std::tie(exact, stem, cont) < std::tie(o.exact, o.stem, o.cont); }
};

class MeteorAligner {
 public:
  MeteorAligner(const Tokens& cand, const Tokens& ref) : cand_(cand), ref_(ref) {
    std::vector<std::string> cs, rs;
    for (const auto& t : cand) cs.push_back(porter_stem(t));
    for (const auto& t : ref) rs.push_back(porter_stem(t));
    options_.resize(cand.size());
    for (std::size_t i = 0; i < cand.size(); ++i) {
      for (std::size_t j = 0; j < ref.size(); ++j) {
        if (cand[i] == ref[j]) {
          options_[i].push_back({static_cast<int>(j), true});
        } else if (cs[i] == rs[j]) {
          options_[i].push_back({static_cast<int>(j), false});
        }
      }
    }
  }

  Align best() { return solve(0, 0, -1); }

 private:
  struct Option {
    int ref_pos;
    bool exact;
  };

  // prev: reference position matched by candidate i-1, or -1.
  Align solve(std::size_t i, uint64_t used, int prev) {
    if (i == cand_.size()) return {};
    const auto key = std::make_tuple(i, used, prev);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    Align best = solve(i + 1, used, -1);
    for (const Option& o : options_[i]) {
      const uint64_t bit = uint64_t{1} << o.ref_pos;
      if (used & bit) continue;
      Align a = solve(i + 1, used | bit, o.ref_pos);
      (o.exact ? a.exact : a.stem) += 1;
      if (prev >= 0 && o.ref_pos == prev + 1) a.cont += 1;
      if (best < a) best = a;
    }
    memo_.emplace(key, best);
    return best;
  }

  struct KeyHash {
    std::size_t operator()(const std::tuple<std::size_t, uint64_t, int>& k) const {
      uint64_t h = std::get<1>(k) * 0x9E3779B97F4A7C15ULL;
      h ^= (std::get<0>(k) << 8) ^ static_cast<uint64_t>(std::get<2>(k) + 1);
      return static_cast<std::size_t>(h * 0xBF58476D1CE4E5B9ULL);
    }
  };

  const Tokens& cand_;
  const Tokens& ref_;
  std::vector<std::vector<Option>> options_;
  std::unordered_map<std::tuple<std::size_t, uint64_t, int>, Align, KeyHash> memo_;
};

double meteor_single(const Tokens& cand, const Tokens& ref) {
  if (cand.empty() || ref.empty()) return 0.0;
  if (ref.size() > 64) throw UsageError("METEOR-lite supports references of at most 64 tokens");
  const Align a = MeteorAligner(cand, ref).best();
  const int matches = a.exact + a.stem;
  if (matches == 0) return 0.0;
  const double p = static_cast<double>(matches) / static_cast<double>(cand.size());
  const double r = static_cast<double>(matches) / static_cast<double>(ref.size());
  const double f = 10.0 * p * r / (r + 9.0 * p);
  const double frag = static_cast<double>(matches - a.cont) / matches;
  return f * (1.0 - 0.5 * frag * frag * frag);
}

}  // namespace

double meteor_item(const Tokens& cand, const std::vector<Tokens>& refs) {
  double best = 0.0;
  for (const auto& ref : refs) best = std::max(best, meteor_single(cand, ref));
  return best;
}

double meteor_lite(const EvalCorpus& corpus) {
  validate_corpus(corpus);
  std::vector<double> s;
  for (const auto& item : corpus.items) s.push_back(meteor_item(item.candidate, item.references));
  return mean(s);
}

// ---- CIDEr-D

namespace {

constexpr int kCiderN = 4;
constexpr double kCiderSigma = 6.0;

struct TfIdf {
  std::array<std::map<NGram, double>, kCiderN> vec;
  std::array<double, kCiderN> norm{};
  double length = 0;
};

}  // namespace

std::vector<double> cider_d_items(const EvalCorpus& corpus) {
  validate_corpus(corpus);
  const std::size_t n_items = corpus.items.size();
  if (n_items == 1) throw UsageError("CIDEr undefined for corpus size 1");
  if (n_items == 0) return {};

  std::map<NGram, int> df;
  for (const auto& item : corpus.items) {
    std::set<NGram> present;
    for (const auto& ref : item.references) {
      for (std::size_t n = 1; n <= kCiderN; ++n) {
        for (const auto& [g, _] : ngrams(ref, n)) present.insert(g);
      }
    }
    for (const auto& g : present) df[g]++;
  }
  const double log_n = std::log(static_cast<double>(n_items));

  auto vectorize = [&](const Tokens& t) {
    TfIdf v;
    for (std::size_t n = 1; n <= kCiderN; ++n) {
      for (const auto& [g, tf] : ngrams(t, n)) {
        auto it = df.find(g);
        const double d = std::log(std::max(1.0, it == df.end() ? 0.0 : static_cast<double>(it->second)));
        const double w = tf * (log_n - d);
        v.vec[n - 1][g] = w;
        v.norm[n - 1] += w * w;
      }
    }
    for (double& x : v.norm) x = std::sqrt(x);
    v.length = static_cast<double>(t.size());
    return v;
  };

  std::vector<double> scores;
  scores.reserve(n_items);
  for (const auto& item : corpus.items) {
    const TfIdf c = vectorize(item.candidate);
    std::array<double, kCiderN> acc{};
    for (const auto& ref : item.references) {
      const TfIdf r = vectorize(ref);
      const double delta = c.length - r.length;
      const double penalty = std::exp(-(delta * delta) / (2.0 * kCiderSigma * kCiderSigma));
      for (int n = 0; n < kCiderN; ++n) {
        double val = 0.0;
        for (const auto& [g, w] : c.vec[n]) {
          auto it = r.vec[n].find(g);
          if (it != r.vec[n].end()) val += std::min(w, it->second) * it->second;
        }
        if (c.norm[n] != 0.0 && r.norm[n] != 0.0) val /= c.norm[n] * r.norm[n];
        acc[n] += val * penalty;
      }
    }
    double s = 0.0;
    for (double a : acc) s += a / static_cast<double>(item.references.size());
    scores.push_back(10.0 * s / kCiderN);
  }
  return scores;
}

double cider_d(const EvalCorpus& corpus) { return mean(cider_d_items(corpus)); }

// ---- SPICE-lite

bool is_stopword(const std::string& token) {
  static const std::unordered_set<std::string> kStop = {
      "a",     "an",    "the",   "and",   "or",    "but",   "of",    "in",   "on",    "at",   "to",
      "by",    "with",  "from",  "for",   "as",    "into",  "onto",  "over", "under", "up",   "down",
      "out",   "off",   "while", "then",  "than",  "is",    "are",   "was",  "were",   "be",   "been",
      "being", "am",    "it",    "its",   "it's",  "this",  "that",  "these", "those", "there", "their",
      "they",  "them",  "he",    "she",   "his",   "her",   "him",   "we",   "you",   "i",    "some",
      "someone", "something", "very", "also", "too",  "so",    "do",    "does", "did",   "has",  "have",
      "had",   "can",   "will",  "would", "not",   "no",    "all",   "any",  "each",  "other", "another",
      "s"};
  return kStop.count(token) != 0;
}

namespace {

std::set<std::string> spice_tuples(const Tokens& t) {
  std::set<std::string> out;
  std::string prev;
  bool prev_content = false;
  for (const auto& tok : t) {
    const bool content = !is_stopword(tok);
    if (content) {
      const std::string s = porter_stem(tok);
      out.insert(s);
      // The separator cannot occur inside a normalized token.
      if (prev_content) out.insert(prev + "\x1f" + s);
      prev = s;
    }
    prev_content = content;
  }
  return out;
}

}  // namespace

double spice_item(const Tokens& cand, const std::vector<Tokens>& refs) {
  const auto c = spice_tuples(cand);
  std::set<std::string> r;
  for (const auto& ref : refs) {
    const auto t = spice_tuples(ref);
    r.insert(t.begin(), t.end());
  }
  if (c.empty() || r.empty()) return 0.0;
  std::size_t overlap = 0;
  for (const auto& x : c) overlap += r.count(x);
  if (overlap == 0) return 0.0;
  const double p = static_cast<double>(overlap) / static_cast<double>(c.size());
  const double rc = static_cast<double>(overlap) / static_cast<double>(r.size());
  return 2.0 * p * rc / (p + rc);
}

std::vector<double> spice_items(const EvalCorpus& corpus) {
  validate_corpus(corpus);
  std::vector<double> s;
  for (const auto& item : corpus.items) s.push_back(spice_item(item.candidate, item.references));
  return s;
}

double spice_lite(const EvalCorpus& corpus) { return mean(spice_items(corpus)); }

// ---- SPIDEr and fluency

double spider(double cider_report, double spice_report) { return (cider_report + spice_report) / 2.0; }

bool RuleFluencyDetector::has_errors(const Tokens& t) const {
  if (t.size() < 3) return true;
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (t[i] == t[i - 1]) return true;
  }
  static const std::unordered_set<std::string> kDangling = {"a", "an", "the", "of", "and", "with", "by", "to"};
  if (kDangling.count(t.back())) return true;
  std::unordered_map<std::string, int> counts;
  for (const auto& tok : t) {
    if (++counts[tok] > 4) return true;
  }
  return false;
}

bool fluency_errors(const Tokens& caption) { return RuleFluencyDetector().has_errors(caption); }

double spider_fl(const std::vector<double>& per_item_spider, const std::vector<bool>& flagged, double penalty) {
  if (per_item_spider.size() != flagged.size()) throw UsageError("spider_fl: score and flag counts differ");
  if (penalty < 0.0 || penalty > 1.0) throw UsageError("fluency penalty must lie in [0, 1]");
  std::vector<double> s;
  for (std::size_t i = 0; i < per_item_spider.size(); ++i) {
    s.push_back(flagged[i] ? per_item_spider[i] - per_item_spider[i] * penalty : per_item_spider[i]);
  }
  return mean(s);
}

double round_display(double x) { return std::floor(x * 10.0 + 0.5 + 1e-9) / 10.0; }

std::string format_display(double x) {
  char buf[32];
  const double r = round_display(x);
  std::snprintf(buf, sizeof buf, "%.1f", r == 0.0 ? 0.0 : r);
  return buf;
}

}  // namespace synthcap::metrics
