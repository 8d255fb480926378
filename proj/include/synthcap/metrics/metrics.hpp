// Copyright 2026 The synthcap Authors
// SPDX-License-Identifier: Apache-2.0

// Caption metrics. Internal scores lie in [0, 1] except CIDEr-D in [0, 10];
// the report scale multiplies by 100 and 10 respectively.

#pragma once

#include <array>
#include <string>
#include <vector>

namespace synthcap::metrics {

using Tokens = std::vector<std::string>;

struct EvalItem {
  std::string id;
  Tokens candidate;
  std::vector<Tokens> references;
};

struct EvalCorpus {
  std::vector<EvalItem> items;
};

// Throws UsageError on duplicate ids, items without references or empty
// references.
void validate_corpus(const EvalCorpus& corpus);

// Cumulative BLEU_n, n in 1..4. Throws UsageError when every candidate is empty.
double bleu(const EvalCorpus& corpus, int n);
std::array<double, 4> bleu_all(const EvalCorpus& corpus);

double rouge_l_item(const Tokens& candidate, const std::vector<Tokens>& references);
double rouge_l(const EvalCorpus& corpus);

double meteor_item(const Tokens& candidate, const std::vector<Tokens>& references);
double meteor_lite(const EvalCorpus& corpus);

// Per-item CIDEr-D in [0, 10]. Throws UsageError for a single-item corpus.
std::vector<double> cider_d_items(const EvalCorpus& corpus);
double cider_d(const EvalCorpus& corpus);

bool is_stopword(const std::string& token);
double spice_item(const Tokens& candidate, const std::vector<Tokens>& references);
std::vector<double> spice_items(const EvalCorpus& corpus);
double spice_lite(const EvalCorpus& corpus);

// Both arguments and the result on the report scale.
double spider(double cider_report, double spice_report);

class FluencyDetector {
 public:
  virtual ~FluencyDetector() = default;
  virtual bool has_errors(const Tokens& caption) const = 0;
};

// Flags consecutive repeats, captions shorter than 3 tokens, dangling
// function words and any token used more than 4 times.
class RuleFluencyDetector : public FluencyDetector {
 public:
  bool has_errors(const Tokens& caption) const override;
};

bool fluency_errors(const Tokens& caption);

inline constexpr double kDefaultFluencyPenalty = 0.9;

// Flagged items keep (1 - penalty) of their score; corpus = mean.
double spider_fl(const std::vector<double>& per_item_spider, const std::vector<bool>& flagged,
                 double penalty = kDefaultFluencyPenalty);

// Round-half-up to one decimal.
double round_display(double x);
std::string format_display(double x);

}  // namespace synthcap::metrics
