// Copyright 2026 The synthcap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <vector>

#include "synthcap/nn/model.hpp"

namespace synthcap::nn {

// Autoregressive source of next-token log-probabilities. Prefixes start
// with <sos>.
class NextTokenScorer {
 public:
  virtual ~NextTokenScorer() = default;
  virtual int vocab_size() const = 0;
  virtual std::vector<double> next_log_probs(const std::vector<int>& prefix) = 0;
};

struct DecodeTokens {
  int pad = 0;
  int sos = 1;
  int eos = 2;
};

// Both decoders never emit <pad> or <sos>. The result excludes the leading
// <sos> and ends with <eos> unless max_len was reached first.
std::vector<int> greedy_decode(NextTokenScorer& scorer, int max_len, DecodeTokens tokens = {});

// Hypotheses ranked by cumulative log-prob while expanding; the returned
// sequence maximizes log-prob / generated length among finished hypotheses,
// falling back to unfinished ones when none finished.
std::vector<int> beam_decode(NextTokenScorer& scorer, int beam_k, int max_len, DecodeTokens tokens = {});

// Scores prefixes with a caption model; the encoder runs once per item.
class ModelScorer : public NextTokenScorer {
 public:
  // frames: valid rows only.
  ModelScorer(const CaptionModel<float>& model, const Mat<float>& frames);
  ~ModelScorer() override;

  int vocab_size() const override;
  std::vector<double> next_log_probs(const std::vector<int>& prefix) override;

 private:
  const CaptionModel<float>& model_;
  Mat<float> memory_;
};

}  // namespace synthcap::nn
