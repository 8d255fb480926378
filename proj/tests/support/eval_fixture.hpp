// Copyright 2026 The synthcap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "synthcap/dataset.hpp"
#include "synthcap/metrics/report.hpp"

namespace fixture {

inline synthcap::dataset::DatasetManifest four_items() {
  using synthcap::dataset::Origin;
  synthcap::dataset::DatasetManifest m;
  m.split = synthcap::dataset::Split::kEval;
  m.pairs = {{"clip1", {"A dog barks loudly.", "a dog is barking"}, "clip1.wav", Origin::kGt, 2.0},
             {"clip2", {"a car passes by", "a vehicle drives past"}, "clip2.wav", Origin::kGt, 2.0},
             {"clip3", {"a man speaks while birds chirp", "a person talks"}, "clip3.wav", Origin::kGt, 2.0},
             {"clip4", {"water flows in a stream", "a stream of water runs"}, "clip4.wav", Origin::kGt, 2.0}};
  return m;
}

inline synthcap::dataset::DatasetManifest five_items() {
  auto m = four_items();
  m.pairs.push_back({"clip5", {"a cat meows twice"}, "clip5.wav", synthcap::dataset::Origin::kGt, 2.0});
  return m;
}

inline std::vector<synthcap::metrics::Prediction> five_predictions() {
  return {{"clip1", "a dog barks"},
          {"clip2", "a car passes passes"},
          {"clip3", "a man speaks"},
          {"clip4", "water"},
          {"clip5", "a cat meows"}};
}

}  // namespace fixture
