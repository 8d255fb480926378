// Copyright 2026 The synthcap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "synthcap/nn/decode.hpp"
#include "synthcap/nn/model.hpp"
#include "synthcap/rng.hpp"

namespace helpers {

using synthcap::nn::Mat;

inline synthcap::nn::ModelConfig tiny_config() {
  synthcap::nn::ModelConfig c;
  c.n_mels = 6;
  c.d_model = 16;
  c.n_heads = 1;
  c.n_graph_layers = 1;
  c.ff_mult = 4;
  c.frontend_pool = 2;
  c.vocab_size = 20;
  c.max_len = 8;
  c.dropout = 0.0;
  return c;
}

template <typename Real>
Mat<Real> random_frames(synthcap::Rng& rng, int rows, int cols) {
  Mat<Real> m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<Real>(rng.normal());
  return m;
}

struct TinyBatch {
  std::vector<Mat<double>> features;
  std::vector<std::vector<uint8_t>> frame_mask;
  std::vector<std::vector<int>> inputs, targets;
  std::vector<std::vector<uint8_t>> token_mask;
};

inline TinyBatch tiny_batch(synthcap::Rng& rng, const synthcap::nn::ModelConfig& c, int batch, int frames, int len) {
  TinyBatch b;
  for (int i = 0; i < batch; ++i) {
    b.features.push_back(random_frames<double>(rng, frames, c.n_mels));
    std::vector<uint8_t> fm(static_cast<std::size_t>(frames), 1);
    if (i == 1) fm.back() = 0;
    b.frame_mask.push_back(fm);
    std::vector<int> in, out;
    for (int k = 0; k < len; ++k) {
      in.push_back(k == 0 ? 1 : 4 + static_cast<int>(rng.uniform_below(static_cast<uint64_t>(c.vocab_size - 4))));
      out.push_back(4 + static_cast<int>(rng.uniform_below(static_cast<uint64_t>(c.vocab_size - 4))));
    }
    std::vector<uint8_t> tm(static_cast<std::size_t>(len), 1);
    if (i == 1) tm.back() = 0;
    b.inputs.push_back(in);
    b.targets.push_back(out);
    b.token_mask.push_back(tm);
  }
  return b;
}

inline double batch_loss(const synthcap::nn::CaptionModel<double>& model, const TinyBatch& b, bool record, double eps,
                  std::vector<Mat<double>>* grads = nullptr) {
  synthcap::nn::Tape<double> tape(record);
  const auto p = model.bind(tape);
  const auto logits = model.forward(tape, p, b.features, b.frame_mask, b.inputs, b.token_mask);
  const auto loss = synthcap::nn::label_smoothed_ce(logits, b.targets, b.token_mask, eps);
  if (grads) {
    tape.backward(loss);
    grads->clear();
    for (std::size_t i = 0; i < model.parameters().size(); ++i) {
      grads->push_back(tape.grad(p.at(model.parameters().name(i))));
    }
  }
  return loss.value()(0, 0);
}

struct GradientCheck {
  double worst = 0.0;
  std::string worst_tensor;
  std::size_t checked = 0;
};

// Central differences over every scalar of every parameter, in double
// precision. rel = |a - n| / max(|a|, |n|, 1e-6).
inline GradientCheck gradient_check(const synthcap::nn::ModelConfig& c, uint64_t seed, double h) {
  auto params = synthcap::nn::init_parameters<double>(c, seed);
  synthcap::Rng rng(5);
  // Perturb norms away from their identity init so their gradients are generic.
  for (std::size_t i = 0; i < params.size(); ++i) {
    params.value(i) += 0.05 * random_frames<double>(rng, static_cast<int>(params.value(i).rows()),
                                                     static_cast<int>(params.value(i).cols()));
  }
  synthcap::nn::CaptionModel<double> model(c, params);
  const TinyBatch b = tiny_batch(rng, c, 2, 8, 4);
  std::vector<Mat<double>> grads;
  batch_loss(model, b, true, 0.1, &grads);

  GradientCheck r;
  for (std::size_t i = 0; i < params.size(); ++i) {
    Mat<double>& w = params.value(i);
    for (Eigen::Index k = 0; k < w.size(); ++k) {
      const double orig = w.data()[k];
      w.data()[k] = orig + h;
      const double up = batch_loss(model, b, false, 0.1);
      w.data()[k] = orig - h;
      const double down = batch_loss(model, b, false, 0.1);
      w.data()[k] = orig;
      const double numeric = (up - down) / (2 * h);
      const double analytic = grads[i].data()[k];
      const double rel = std::abs(numeric - analytic) / std::max({std::abs(numeric), std::abs(analytic), 1e-6});
      if (rel > r.worst) {
        r.worst = rel;
        r.worst_tensor = params.name(i);
      }
      ++r.checked;
    }
  }
  return r;
}

// Emits a fixed sequence, then <eos> forever.
class ForcedScorer : public synthcap::nn::NextTokenScorer {
 public:
  ForcedScorer(int vocab, std::vector<int> seq) : vocab_(vocab), seq_(std::move(seq)) {}
  int vocab_size() const override { return vocab_; }
  std::vector<double> next_log_probs(const std::vector<int>& prefix) override {
    const std::size_t step = prefix.size() - 1;
    const int want = step < seq_.size() ? seq_[step] : 2;
    std::vector<double> lp(static_cast<std::size_t>(vocab_), -30.0);
    lp[static_cast<std::size_t>(want)] = -1e-6;
    return lp;
  }

 private:
  int vocab_;
  std::vector<int> seq_;
};

}  // namespace helpers
