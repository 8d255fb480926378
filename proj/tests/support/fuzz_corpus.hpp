// Copyright 2026 The synthcap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "support/metric_oracle.hpp"
#include "synthcap/metrics/metrics.hpp"
#include "synthcap/rng.hpp"

namespace fuzz {

struct Corpus {
  synthcap::metrics::EvalCorpus lib;
  std::vector<oracle::Item> ref;
};

// 2..max_items items, 1..max_len tokens per caption, 1..3 references.
inline Corpus random_corpus(synthcap::Rng& rng, int max_items = 5, int max_len = 8) {
  const auto& vocab = oracle::fuzz_vocabulary();
  auto sentence = [&] {
    oracle::Sent s;
    const int len = 1 + static_cast<int>(rng.uniform_below(static_cast<uint64_t>(max_len)));
    for (int i = 0; i < len; ++i) s.push_back(vocab[rng.uniform_below(vocab.size())]);
    return s;
  };
  Corpus c;
  const int n = 2 + static_cast<int>(rng.uniform_below(static_cast<uint64_t>(max_items - 1)));
  for (int i = 0; i < n; ++i) {
    oracle::Item it;
    it.cand = sentence();
    const int refs = 1 + static_cast<int>(rng.uniform_below(3));
    for (int k = 0; k < refs; ++k) it.refs.push_back(sentence());
    c.ref.push_back(it);
    c.lib.items.push_back({"item" + std::to_string(i), it.cand, it.refs});
  }
  return c;
}

}  // namespace fuzz
