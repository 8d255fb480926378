// Copyright 2026 The synthcap Authors
// SPDX-License-Identifier: Apache-2.0

// Audio captioning network: a linear log-mel frontend with temporal mean
// pooling, graph-attention layers over the pooled time steps, and a two-layer
// pre-norm transformer decoder that cross-attends to the encoder nodes.
//
// Instantiated for float (training) and double (gradient checks).

#pragma once

#include <cstdint>
#include <json.hpp>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "synthcap/nn/ops.hpp"
#include "synthcap/nn/parameters.hpp"
#include "synthcap/rng.hpp"

namespace synthcap::nn {

struct ModelConfig {
  int n_mels = 64;
  int d_model = 128;
  int n_heads = 4;
  int n_graph_layers = 1;
  int n_decoder_layers = 2;
  int ff_mult = 4;
  int frontend_pool = 4;
  int vocab_size = 0;
  int max_len = 30;
  double leaky_slope = 0.2;
  double dropout = 0.1;

  // Throws UsageError: d_model % n_heads != 0, n_decoder_layers != 2, ...
  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);

// Xavier-uniform matrices (bound sqrt(6 / (fan_in + fan_out))), zero biases,
// unit layer-norm gains, N(0, 0.02) embeddings; one xoshiro stream, fixed
// registration order.
template <typename Real>
ParameterSet<Real> init_parameters(const ModelConfig& cfg, uint64_t seed);

// Parameter names, in registration order, with their shapes.
std::vector<std::pair<std::string, std::pair<int, int>>> parameter_layout(const ModelConfig& cfg);

// Sinusoidal position table, rows = positions.
template <typename Real>
Mat<Real> sinusoidal_positions(int length, int d_model);

template <typename Real>
class CaptionModel {
 public:
  using Bound = std::unordered_map<std::string, Var<Real>>;

  // Training-time randomness; a null pointer disables dropout.
  struct Dropout {
    double rate = 0.0;
    Rng* rng = nullptr;
  };

  CaptionModel(ModelConfig cfg, const ParameterSet<Real>& params);

  const ModelConfig& config() const { return cfg_; }
  const ParameterSet<Real>& parameters() const { return params_; }

  // Puts every parameter on the tape by reference; as gradient leaves when
  // the tape records.
  Bound bind(Tape<Real>& tape) const;

  // One graph-attention layer: e_ij = LeakyReLU(a_src . W h_i + a_dst . W h_j),
  // alpha = row softmax(e), h'_i = ELU(sum_j alpha_ij W h_j) + h_i.
  // Optionally reports alpha.
  Var<Real> graph_attention(const Bound& p, int layer, Var<Real> h, Mat<Real>* alpha = nullptr) const;

  // frames: valid rows only (T x n_mels). Returns the encoder memory (T' x d).
  Var<Real> encode(Tape<Real>& tape, const Bound& p, const Mat<Real>& frames) const;

  // Teacher-forced decoder logits for a token prefix (L x V).
  Var<Real> decode(Tape<Real>& tape, const Bound& p, Var<Real> memory, std::span<const int> tokens,
                   const Dropout* drop = nullptr) const;

  // Batched teacher forcing. Frame masks may select any rows; token masks
  // must be prefixes. Returns one L x V logits variable per item, with zero
  // rows at masked positions.
  std::vector<Var<Real>> forward(Tape<Real>& tape, const Bound& p, const std::vector<Mat<Real>>& features,
                                 const std::vector<std::vector<uint8_t>>& frame_mask,
                                 const std::vector<std::vector<int>>& tokens,
                                 const std::vector<std::vector<uint8_t>>& token_mask,
                                 const Dropout* drop = nullptr) const;

 private:
  Var<Real> linear(const Bound& p, const std::string& prefix, Var<Real> x) const;
  Var<Real> attention(Tape<Real>& tape, const Bound& p, const std::string& prefix, Var<Real> query_in,
                      Var<Real> kv_in, bool causal) const;

  ModelConfig cfg_;
  const ParameterSet<Real>& params_;
};

// Mean over valid target positions of the label-smoothed cross entropy.
// Throws UsageError when no position is valid.
template <typename Real>
Var<Real> label_smoothed_ce(const std::vector<Var<Real>>& logits, const std::vector<std::vector<int>>& targets,
                            const std::vector<std::vector<uint8_t>>& target_mask, Real eps);

}  // namespace synthcap::nn
