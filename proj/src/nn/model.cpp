// Copyright 2026 The synthcap Authors
// SPDX-License-Identifier: Apache-2.0

#include "synthcap/nn/model.hpp"

#include <cmath>
#include <optional>

namespace synthcap::nn {

using nlohmann::json;

void ModelConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw UsageError("model config: " + what);
  };
  require(n_mels >= 1, "n_mels must be positive");
  require(d_model >= 1 && n_heads >= 1, "d_model and n_heads must be positive");
  require(d_model % n_heads == 0, "d_model must be divisible by n_heads");
  require(n_graph_layers >= 0, "n_graph_layers must be non-negative");
  require(n_decoder_layers == 2, "n_decoder_layers is fixed at 2");
  require(ff_mult >= 1, "ff_mult must be positive");
  require(frontend_pool >= 1, "frontend_pool must be positive");
  require(vocab_size > 4, "vocab_size must exceed the 4 special tokens");
  require(max_len >= 1, "max_len must be positive");
  require(dropout >= 0.0 && dropout < 1.0, "dropout must lie in [0, 1)");
}

void to_json(json& j, const ModelConfig& c) {
  j = json{{"n_mels", c.n_mels},
           {"d_model", c.d_model},
           {"n_heads", c.n_heads},
           {"n_graph_layers", c.n_graph_layers},
           {"n_decoder_layers", c.n_decoder_layers},
           {"ff_mult", c.ff_mult},
           {"frontend_pool", c.frontend_pool},
           {"vocab_size", c.vocab_size},
           {"max_len", c.max_len},
           {"leaky_slope", c.leaky_slope},
           {"dropout", c.dropout}};
}

void from_json(const json& j, ModelConfig& c) {
  ModelConfig d;
  c.n_mels = j.value("n_mels", d.n_mels);
  c.d_model = j.value("d_model", d.d_model);
  c.n_heads = j.value("n_heads", d.n_heads);
  c.n_graph_layers = j.value("n_graph_layers", d.n_graph_layers);
  c.n_decoder_layers = j.value("n_decoder_layers", d.n_decoder_layers);
  c.ff_mult = j.value("ff_mult", d.ff_mult);
  c.frontend_pool = j.value("frontend_pool", d.frontend_pool);
  c.vocab_size = j.value("vocab_size", d.vocab_size);
  c.max_len = j.value("max_len", d.max_len);
  c.leaky_slope = j.value("leaky_slope", d.leaky_slope);
  c.dropout = j.value("dropout", d.dropout);
}

namespace {

enum class Init { kXavier, kZero, kOne, kEmbedding };

struct Slot {
  std::string name;
  int rows, cols;
  Init init;
  // Xavier fan override for split vectors (graph attention a_src / a_dst).
  int fan_in = 0, fan_out = 0;
};

std::vector<Slot> layout(const ModelConfig& c) {
  const int d = c.d_model, ff = c.d_model * c.ff_mult, v = c.vocab_size;
  std::vector<Slot> s;
  s.push_back({"frontend.weight", c.n_mels, d, Init::kXavier});
  s.push_back({"frontend.bias", 1, d, Init::kZero});
  for (int l = 0; l < c.n_graph_layers; ++l) {
    const std::string g = "graph." + std::to_string(l) + ".";
    s.push_back({g + "weight", d, d, Init::kXavier});
    s.push_back({g + "attn_src", 1, d, Init::kXavier, 2 * d, 1});
    s.push_back({g + "attn_dst", 1, d, Init::kXavier, 2 * d, 1});
  }
  s.push_back({"encoder_norm.gain", 1, d, Init::kOne});
  s.push_back({"encoder_norm.bias", 1, d, Init::kZero});
  s.push_back({"embedding", v, d, Init::kEmbedding});
  for (int l = 0; l < c.n_decoder_layers; ++l) {
    const std::string b = "decoder." + std::to_string(l) + ".";
    auto norm = [&](const std::string& n) {
      s.push_back({b + n + ".gain", 1, d, Init::kOne});
      s.push_back({b + n + ".bias", 1, d, Init::kZero});
    };
    auto lin = [&](const std::string& n, int in, int out) {
      s.push_back({b + n + ".weight", in, out, Init::kXavier});
      s.push_back({b + n + ".bias", 1, out, Init::kZero});
    };
    norm("norm1");
    for (const char* m : {"q", "k", "v", "o"}) lin(std::string("self_attn.") + m, d, d);
    norm("norm2");
    for (const char* m : {"q", "k", "v", "o"}) lin(std::string("cross_attn.") + m, d, d);
    norm("norm3");
    lin("ff.fc1", d, ff);
    lin("ff.fc2", ff, d);
  }
  s.push_back({"final_norm.gain", 1, d, Init::kOne});
  s.push_back({"final_norm.bias", 1, d, Init::kZero});
  s.push_back({"output.weight", d, v, Init::kXavier});
  s.push_back({"output.bias", 1, v, Init::kZero});
  return s;
}

}  // namespace

std::vector<std::pair<std::string, std::pair<int, int>>> parameter_layout(const ModelConfig& cfg) {
  std::vector<std::pair<std::string, std::pair<int, int>>> out;
  for (const auto& s : layout(cfg)) out.push_back({s.name, {s.rows, s.cols}});
  return out;
}

template <typename Real>
ParameterSet<Real> init_parameters(const ModelConfig& cfg, uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  ParameterSet<Real> params;
  for (const auto& s : layout(cfg)) {
    Mat<Real> m(s.rows, s.cols);
    switch (s.init) {
      case Init::kZero:
        m.setZero();
        break;
      case Init::kOne:
        m.setOnes();
        break;
      case Init::kEmbedding:
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<Real>(0.02 * rng.normal());
        break;
      case Init::kXavier: {
        const int fan_in = s.fan_in ? s.fan_in : s.rows;
        const int fan_out = s.fan_in ? s.fan_out : s.cols;
        const double bound = std::sqrt(6.0 / (fan_in + fan_out));
        for (Eigen::Index i = 0; i < m.size(); ++i) {
          m.data()[i] = static_cast<Real>(bound * (2.0 * rng.uniform() - 1.0));
        }
        break;
      }
    }
    params.add(s.name, std::move(m));
  }
  return params;
}

template <typename Real>
Mat<Real> sinusoidal_positions(int length, int d_model) {
  Mat<Real> pe(length, d_model);
  for (int pos = 0; pos < length; ++pos) {
    for (int i = 0; i < d_model; ++i) {
      const double freq = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / d_model);
      pe(pos, i) = static_cast<Real>(i % 2 == 0 ? std::sin(pos * freq) : std::cos(pos * freq));
    }
  }
  return pe;
}

template <typename Real>
CaptionModel<Real>::CaptionModel(ModelConfig cfg, const ParameterSet<Real>& params)
    : cfg_(std::move(cfg)), params_(params) {
  cfg_.validate();
  for (const auto& s : layout(cfg_)) {
    const auto& m = params_.at(s.name);
    if (m.rows() != s.rows || m.cols() != s.cols) {
      throw UsageError("parameter \"" + s.name + "\" has shape " + std::to_string(m.rows()) + "x" +
                       std::to_string(m.cols()) + ", config expects " + std::to_string(s.rows) + "x" +
                       std::to_string(s.cols));
    }
  }
}

template <typename Real>
typename CaptionModel<Real>::Bound CaptionModel<Real>::bind(Tape<Real>& tape) const {
  Bound b;
  for (std::size_t i = 0; i < params_.size(); ++i) b.emplace(params_.name(i), tape.parameter_ref(params_.value(i)));
  return b;
}

template <typename Real>
Var<Real> CaptionModel<Real>::linear(const Bound& p, const std::string& prefix, Var<Real> x) const {
  return ops::add_row(ops::matmul(x, p.at(prefix + ".weight")), p.at(prefix + ".bias"));
}

template <typename Real>
Var<Real> CaptionModel<Real>::graph_attention(const Bound& p, int layer, Var<Real> h, Mat<Real>* alpha) const {
  if (h.rows() < 1) throw UsageError("graph attention needs at least one node");
  const std::string g = "graph." + std::to_string(layer) + ".";
  const Var<Real> z = ops::matmul(h, p.at(g + "weight"));
  const Var<Real> src = ops::matmul_nt(z, p.at(g + "attn_src"));  // T' x 1
  const Var<Real> dst = ops::matmul_nt(p.at(g + "attn_dst"), z);  // 1 x T'
  const Var<Real> e = ops::leaky_relu(ops::add_outer(src, dst), static_cast<Real>(cfg_.leaky_slope));
  const Var<Real> a = ops::softmax_rows(e);
  if (alpha) *alpha = a.value();
  return ops::add(ops::elu(ops::matmul(a, z)), h);
}

template <typename Real>
Var<Real> CaptionModel<Real>::encode(Tape<Real>& tape, const Bound& p, const Mat<Real>& frames) const {
  if (frames.rows() < 1) throw UsageError("encoder input has no valid frames");
  if (frames.cols() != cfg_.n_mels) {
    throw UsageError("encoder input has " + std::to_string(frames.cols()) + " mel bins, model expects " +
                     std::to_string(cfg_.n_mels));
  }
  Var<Real> h = linear(p, "frontend", tape.constant(frames));
  h = ops::mean_pool_rows(h, cfg_.frontend_pool);
  for (int l = 0; l < cfg_.n_graph_layers; ++l) h = graph_attention(p, l, h);
  return ops::layer_norm(h, p.at("encoder_norm.gain"), p.at("encoder_norm.bias"));
}

template <typename Real>
Var<Real> CaptionModel<Real>::attention(Tape<Real>& tape, const Bound& p, const std::string& prefix,
                                        Var<Real> query_in, Var<Real> kv_in, bool causal) const {
  const int heads = cfg_.n_heads;
  const int dk = cfg_.d_model / heads;
  const Var<Real> q = linear(p, prefix + ".q", query_in);
  const Var<Real> k = linear(p, prefix + ".k", kv_in);
  const Var<Real> v = linear(p, prefix + ".v", kv_in);
  const Real scale = Real(1) / std::sqrt(static_cast<Real>(dk));
  std::optional<Var<Real>> mask;
  if (causal) {
    const Eigen::Index n = q.rows(), m = k.rows();
    Mat<Real> blocked = Mat<Real>::Zero(n, m);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i + 1; j < m; ++j) blocked(i, j) = Real(-1e9);
    }
    mask = tape.constant(std::move(blocked));
  }
  std::vector<Var<Real>> outs;
  for (int h = 0; h < heads; ++h) {
    const Var<Real> qh = ops::slice_cols(q, h * dk, dk);
    const Var<Real> kh = ops::slice_cols(k, h * dk, dk);
    const Var<Real> vh = ops::slice_cols(v, h * dk, dk);
    Var<Real> scores = ops::scale(ops::matmul_nt(qh, kh), scale);
    if (mask) scores = ops::add(scores, *mask);
    outs.push_back(ops::matmul(ops::softmax_rows(scores), vh));
  }
  const Var<Real> joined = heads == 1 ? outs[0] : ops::concat_cols(outs);
  return linear(p, prefix + ".o", joined);
}

template <typename Real>
Var<Real> CaptionModel<Real>::decode(Tape<Real>& tape, const Bound& p, Var<Real> memory, std::span<const int> tokens,
                                     const Dropout* drop) const {
  if (tokens.empty()) throw UsageError("decoder input is empty");
  const auto len = static_cast<int>(tokens.size());
  auto maybe_drop = [&](Var<Real> x) {
    return (drop && drop->rng && drop->rate > 0.0) ? ops::dropout(x, drop->rate, *drop->rng) : x;
  };
  Var<Real> x = ops::scale(ops::gather_rows(p.at("embedding"), tokens), std::sqrt(static_cast<Real>(cfg_.d_model)));
  x = ops::add(x, tape.constant(sinusoidal_positions<Real>(len, cfg_.d_model)));
  x = maybe_drop(x);
  for (int l = 0; l < cfg_.n_decoder_layers; ++l) {
    const std::string b = "decoder." + std::to_string(l) + ".";
    auto norm = [&](const std::string& n, Var<Real> in) {
      return ops::layer_norm(in, p.at(b + n + ".gain"), p.at(b + n + ".bias"));
    };
    Var<Real> y = norm("norm1", x);
    x = ops::add(x, maybe_drop(attention(tape, p, b + "self_attn", y, y, true)));
    y = norm("norm2", x);
    x = ops::add(x, maybe_drop(attention(tape, p, b + "cross_attn", y, memory, false)));
    y = norm("norm3", x);
    y = linear(p, b + "ff.fc2", ops::relu(linear(p, b + "ff.fc1", y)));
    x = ops::add(x, maybe_drop(y));
  }
  x = ops::layer_norm(x, p.at("final_norm.gain"), p.at("final_norm.bias"));
  return linear(p, "output", x);
}

template <typename Real>
std::vector<Var<Real>> CaptionModel<Real>::forward(Tape<Real>& tape, const Bound& p,
                                                   const std::vector<Mat<Real>>& features,
                                                   const std::vector<std::vector<uint8_t>>& frame_mask,
                                                   const std::vector<std::vector<int>>& tokens,
                                                   const std::vector<std::vector<uint8_t>>& token_mask,
                                                   const Dropout* drop) const {
  const std::size_t batch = features.size();
  if (frame_mask.size() != batch || tokens.size() != batch || token_mask.size() != batch) {
    throw UsageError("forward: features, masks and tokens disagree on batch size");
  }
  std::vector<Var<Real>> logits;
  logits.reserve(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    const Mat<Real>& f = features[b];
    if (static_cast<Eigen::Index>(frame_mask[b].size()) != f.rows()) {
      throw UsageError("forward: frame mask length differs from frame count");
    }
    if (tokens[b].size() != token_mask[b].size()) throw UsageError("forward: token mask length differs from tokens");
    std::vector<Eigen::Index> rows;
    for (Eigen::Index t = 0; t < f.rows(); ++t) {
      if (frame_mask[b][static_cast<std::size_t>(t)]) rows.push_back(t);
    }
    Mat<Real> valid(static_cast<Eigen::Index>(rows.size()), f.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) valid.row(static_cast<Eigen::Index>(i)) = f.row(rows[i]);

    std::size_t n_tokens = 0;
    while (n_tokens < token_mask[b].size() && token_mask[b][n_tokens]) ++n_tokens;
    for (std::size_t i = n_tokens; i < token_mask[b].size(); ++i) {
      if (token_mask[b][i]) throw UsageError("forward: token mask must be a prefix");
    }
    if (n_tokens == 0) throw UsageError("forward: item has no valid tokens");

    const Var<Real> memory = encode(tape, p, valid);
    const Var<Real> out = decode(tape, p, memory, std::span<const int>(tokens[b].data(), n_tokens), drop);
    logits.push_back(n_tokens == tokens[b].size() ? out
                                                  : ops::pad_rows(out, static_cast<Eigen::Index>(tokens[b].size())));
  }
  return logits;
}

template <typename Real>
Var<Real> label_smoothed_ce(const std::vector<Var<Real>>& logits, const std::vector<std::vector<int>>& targets,
                            const std::vector<std::vector<uint8_t>>& target_mask, Real eps) {
  if (logits.empty() || logits.size() != targets.size() || logits.size() != target_mask.size()) {
    throw UsageError("label_smoothed_ce: logits, targets and masks disagree on batch size");
  }
  std::size_t count = 0;
  std::vector<Var<Real>> sums;
  for (std::size_t b = 0; b < logits.size(); ++b) {
    for (uint8_t m : target_mask[b]) count += m ? 1 : 0;
    sums.push_back(ops::label_smoothed_ce_sum(logits[b], std::span<const int>(targets[b]),
                                              std::span<const uint8_t>(target_mask[b]), eps));
  }
  if (count == 0) throw UsageError("label_smoothed_ce: no valid target positions");
  return ops::scale(ops::sum_scalars(sums), Real(1) / static_cast<Real>(count));
}

template ParameterSet<float> init_parameters<float>(const ModelConfig&, uint64_t);
template ParameterSet<double> init_parameters<double>(const ModelConfig&, uint64_t);
template Mat<float> sinusoidal_positions<float>(int, int);
template Mat<double> sinusoidal_positions<double>(int, int);
template class CaptionModel<float>;
template class CaptionModel<double>;
template Var<float> label_smoothed_ce<float>(const std::vector<Var<float>>&, const std::vector<std::vector<int>>&,
                                             const std::vector<std::vector<uint8_t>>&, float);
template Var<double> label_smoothed_ce<double>(const std::vector<Var<double>>&, const std::vector<std::vector<int>>&,
                                               const std::vector<std::vector<uint8_t>>&, double);

}  // namespace synthcap::nn
