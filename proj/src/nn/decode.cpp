// Copyright 2026 The synthcap Authors
// SPDX-License-Identifier: Apache-2.0

#include "synthcap/nn/decode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace synthcap::nn {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::vector<double> masked_scores(NextTokenScorer& scorer, const std::vector<int>& prefix, DecodeTokens t) {
  std::vector<double> lp = scorer.next_log_probs(prefix);
  if (static_cast<int>(lp.size()) != scorer.vocab_size()) {
    throw UsageError("scorer returned " + std::to_string(lp.size()) + " scores for vocabulary of " +
                     std::to_string(scorer.vocab_size()));
  }
  if (t.pad >= 0 && t.pad < static_cast<int>(lp.size())) lp[t.pad] = kNegInf;
  if (t.sos >= 0 && t.sos < static_cast<int>(lp.size())) lp[t.sos] = kNegInf;
  return lp;
}

struct Hypothesis {
  std::vector<int> tokens;  // with leading <sos>
  double logp = 0.0;
};

double normalized(const Hypothesis& h) { return h.logp / static_cast<double>(h.tokens.size() - 1); }

}  // namespace

std::vector<int> greedy_decode(NextTokenScorer& scorer, int max_len, DecodeTokens t) {
  std::vector<int> prefix{t.sos};
  for (int step = 0; step < max_len; ++step) {
    const std::vector<double> lp = masked_scores(scorer, prefix, t);
    // max_element returns the first maximum, i.e. the lowest index on ties.
    const int best = static_cast<int>(std::max_element(lp.begin(), lp.end()) - lp.begin());
    prefix.push_back(best);
    if (best == t.eos) break;
  }
  return {prefix.begin() + 1, prefix.end()};
}

std::vector<int> beam_decode(NextTokenScorer& scorer, int beam_k, int max_len, DecodeTokens t) {
  if (beam_k < 1) throw UsageError("beam width must be at least 1");
  if (max_len < 1) return {};
  std::vector<Hypothesis> alive{{{t.sos}, 0.0}};
  std::vector<Hypothesis> finished;

  struct Candidate {
    double score;
    std::size_t beam;
    int token;
  };
  for (int step = 0; step < max_len && !alive.empty(); ++step) {
    std::vector<Candidate> cands;
    for (std::size_t b = 0; b < alive.size(); ++b) {
      const std::vector<double> lp = masked_scores(scorer, alive[b].tokens, t);
      for (int v = 0; v < static_cast<int>(lp.size()); ++v) {
        if (lp[v] == kNegInf) continue;
        cands.push_back({alive[b].logp + lp[v], b, v});
      }
    }
    const std::size_t keep = std::min<std::size_t>(static_cast<std::size_t>(beam_k), cands.size());
    std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(keep), cands.end(),
                      [](const Candidate& a, const Candidate& b) {
                        if (a.score != b.score) return a.score > b.score;
                        if (a.beam != b.beam) return a.beam < b.beam;
                        return a.token < b.token;
                      });
    std::vector<Hypothesis> next;
    for (std::size_t i = 0; i < keep; ++i) {
      Hypothesis h = alive[cands[i].beam];
      h.tokens.push_back(cands[i].token);
      h.logp = cands[i].score;
      (cands[i].token == t.eos ? finished : next).push_back(std::move(h));
    }
    alive = std::move(next);
  }

  const std::vector<Hypothesis>& pool = finished.empty() ? alive : finished;
  if (pool.empty()) return {};
  const Hypothesis* best = &pool.front();
  for (const auto& h : pool) {
    if (normalized(h) > normalized(*best)) best = &h;
  }
  return {best->tokens.begin() + 1, best->tokens.end()};
}

ModelScorer::ModelScorer(const CaptionModel<float>& model, const Mat<float>& frames) : model_(model) {
  Tape<float> tape(false);
  const auto p = model_.bind(tape);
  memory_ = model_.encode(tape, p, frames).value();
}

ModelScorer::~ModelScorer() = default;

int ModelScorer::vocab_size() const { return model_.config().vocab_size; }

std::vector<double> ModelScorer::next_log_probs(const std::vector<int>& prefix) {
  Tape<float> tape(false);
  const auto p = model_.bind(tape);
  const Var<float> memory = tape.constant_ref(memory_);
  const Var<float> logits = model_.decode(tape, p, memory, std::span<const int>(prefix));
  const auto last = logits.value().row(logits.rows() - 1).template cast<double>();
  const double mx = last.maxCoeff();
  const double lse = mx + std::log((last.array() - mx).exp().sum());
  std::vector<double> out(static_cast<std::size_t>(last.size()));
  for (Eigen::Index v = 0; v < last.size(); ++v) out[static_cast<std::size_t>(v)] = last(v) - lse;
  return out;
}

}  // namespace synthcap::nn
