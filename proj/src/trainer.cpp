// Copyright 2026 The synthcap Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include "synthcap/trainer.hpp"

#include <cstdio>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include "synthcap/corpus.hpp"
#include "synthcap/error.hpp"
#include "synthcap/io.hpp"
#include "synthcap/nn/decode.hpp"
#include "synthcap/rng.hpp"

namespace synthcap::trainer {

using nlohmann::json;
using nn::Mat;

namespace {

constexpr uint64_t kInitStream = 0x494e4954;     // "INIT"
constexpr uint64_t kAugmentStream = 0x41554721;  // "AUG!"
constexpr uint64_t kDropoutStream = 0x44524f50;  // "DROP"

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> number_or_null(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

json log_to_json(const EpochLog& e) {
  return {{"epoch", e.epoch},
          {"train_loss", e.train_loss},
          {"val_loss", optional_number(e.val_loss)},
          {"val_spider", optional_number(e.val_spider)}};
}

EpochLog log_from_json(const json& j) {
  EpochLog e;
  e.epoch = j.at("epoch").get<int>();
  e.train_loss = j.at("train_loss").get<double>();
  e.val_loss = number_or_null(j.at("val_loss"));
  e.val_spider = number_or_null(j.at("val_spider"));
  return e;
}

void check_feature_set(const FeatureSet& s, const char* what) {
  if (s.manifest.empty()) throw UsageError(std::string(what) + " manifest is empty");
  if (s.features.size() != s.manifest.size()) {
    throw UsageError(std::string(what) + " set has " + std::to_string(s.features.size()) + " feature matrices for " +
                     std::to_string(s.manifest.size()) + " pairs");
  }
}

// Teacher forcing: inputs drop the last token, targets drop <sos>. An input
// position is valid when its target is.
struct ShiftedTokens {
  std::vector<std::vector<int>> inputs, targets;
  std::vector<std::vector<uint8_t>> mask;
};

ShiftedTokens shift(const dataset::Batch& b) {
  ShiftedTokens s;
  for (std::size_t i = 0; i < b.size(); ++i) {
    const auto& t = b.tokens[i];
    const auto& m = b.token_mask[i];
    s.inputs.emplace_back(t.begin(), t.end() - 1);
    s.targets.emplace_back(t.begin() + 1, t.end());
    s.mask.emplace_back(m.begin() + 1, m.end());
  }
  return s;
}

std::size_t count_valid(const std::vector<std::vector<uint8_t>>& mask) {
  std::size_t n = 0;
  for (const auto& row : mask) {
    for (uint8_t v : row) n += v ? 1 : 0;
  }
  return n;
}

std::vector<Mat<float>> batch_features(const dataset::Batch& b) {
  std::vector<Mat<float>> out;
  out.reserve(b.size());
  for (const auto& f : b.features) out.emplace_back(f);
  return out;
}

struct State {
  nn::ParameterSet<float> params;
  nn::AdamState<float> opt;
  int epoch = 0;
  int best_epoch = 0;
  std::optional<double> best_spider;
  int epochs_since_best = 0;
  bool stopped = false;
  std::vector<EpochLog> log;
};

json state_json(const State& s, const TrainConfig& cfg) {
  json log = json::array();
  for (const auto& e : s.log) log.push_back(log_to_json(e));
  return {{"epoch", s.epoch},
          {"best_epoch", s.best_epoch},
          {"best_spider", optional_number(s.best_spider)},
          {"epochs_since_best", s.epochs_since_best},
          {"early_stopped", s.stopped},
          {"train_config", cfg},
          {"log", log}};
}

nn::Checkpoint make_checkpoint(const State& s, const TrainConfig& cfg, const nn::ModelConfig& model, uint64_t vocab_hash) {
  nn::Checkpoint c;
  c.config = model;
  c.vocab_hash = vocab_hash;
  c.params = s.params;
  c.optimizer = s.opt;
  c.train_state = state_json(s, cfg);
  return c;
}

State state_from_checkpoint(const nn::Checkpoint& c) {
  State s;
  s.params = c.params;
  s.opt = c.optimizer.m.empty() ? nn::AdamState<float>::zeros_like(c.params) : c.optimizer;
  const json& t = c.train_state;
  try {
    s.epoch = t.at("epoch").get<int>();
    s.best_epoch = t.at("best_epoch").get<int>();
    s.best_spider = number_or_null(t.at("best_spider"));
    s.epochs_since_best = t.at("epochs_since_best").get<int>();
    s.stopped = t.at("early_stopped").get<bool>();
    for (const auto& e : t.at("log")) s.log.push_back(log_from_json(e));
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint has no usable training state: ") + e.what());
  }
  return s;
}

std::string log_text(const std::vector<EpochLog>& log) {
  std::string out;
  for (const auto& e : log) out += epoch_log_line(e);
  return out;
}

}  // namespace

bool TrainConfig::operator==(const TrainConfig& o) const {
  return json(*this) == json(o);
}

void to_json(json& j, const TrainConfig& c) {
  j = json{{"epochs", c.epochs},
           {"patience", c.patience},
           {"batch_size", c.batch_size},
           {"lr", c.optimizer.lr},
           {"beta1", c.optimizer.beta1},
           {"beta2", c.optimizer.beta2},
           {"adam_eps", c.optimizer.eps},
           {"weight_decay", c.optimizer.weight_decay},
           {"label_smoothing", c.label_smoothing},
           {"spec_augment", c.spec_augment},
           {"time_masks", c.augment.n_time_masks},
           {"max_time_width", c.augment.max_time_width},
           {"freq_masks", c.augment.n_freq_masks},
           {"max_freq_width", c.augment.max_freq_width},
           {"seed", c.seed},
           {"embeddings_path", c.embeddings_path}};
}

void from_json(const json& j, TrainConfig& c) {
  const TrainConfig d;
  c.epochs = j.value("epochs", d.epochs);
  c.patience = j.value("patience", d.patience);
  c.batch_size = j.value("batch_size", d.batch_size);
  c.optimizer.lr = j.value("lr", d.optimizer.lr);
  c.optimizer.beta1 = j.value("beta1", d.optimizer.beta1);
  c.optimizer.beta2 = j.value("beta2", d.optimizer.beta2);
  c.optimizer.eps = j.value("adam_eps", d.optimizer.eps);
  c.optimizer.weight_decay = j.value("weight_decay", d.optimizer.weight_decay);
  c.label_smoothing = j.value("label_smoothing", d.label_smoothing);
  c.spec_augment = j.value("spec_augment", d.spec_augment);
  c.augment.n_time_masks = j.value("time_masks", d.augment.n_time_masks);
  c.augment.max_time_width = j.value("max_time_width", d.augment.max_time_width);
  c.augment.n_freq_masks = j.value("freq_masks", d.augment.n_freq_masks);
  c.augment.max_freq_width = j.value("max_freq_width", d.augment.max_freq_width);
  c.seed = j.value("seed", d.seed);
  c.embeddings_path = j.value("embeddings_path", d.embeddings_path);
}

std::string epoch_log_line(const EpochLog& e) { return log_to_json(e).dump() + "\n"; }

std::vector<EpochLog> read_epoch_log(std::string_view text) {
  std::vector<EpochLog> out;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      out.push_back(log_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw FormatError(std::string("malformed metrics log line: ") + e.what());
    }
  }
  return out;
}

std::vector<std::pair<int, std::vector<float>>> load_word2vec(std::string_view text, const dataset::Vocabulary& vocab,
                                                              int dim) {
  std::istringstream in{std::string(text)};
  std::size_t count = 0;
  int file_dim = 0;
  if (!(in >> count >> file_dim)) throw FormatError("word2vec file: missing \"count dim\" header");
  if (file_dim != dim) {
    throw UsageError("word2vec dimension " + std::to_string(file_dim) + " does not match d_model " + std::to_string(dim));
  }
  std::vector<std::pair<int, std::vector<float>>> out;
  std::unordered_set<int> seen;
  for (std::size_t row = 0; row < count; ++row) {
    std::string token;
    if (!(in >> token)) throw FormatError("word2vec file: expected " + std::to_string(count) + " rows, got " + std::to_string(row));
    std::vector<float> v(static_cast<std::size_t>(dim));
    for (auto& x : v) {
      if (!(in >> x)) throw FormatError("word2vec file: row for \"" + token + "\" is short");
    }
    const int idx = vocab.index(token);
    if (idx >= dataset::Vocabulary::kNumSpecials && seen.insert(idx).second) out.emplace_back(idx, std::move(v));
  }
  return out;
}

double evaluate_loss(const nn::CaptionModel<float>& model, const dataset::Vocabulary& vocab, const FeatureSet& data,
                     int batch_size, double label_smoothing) {
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& b : dataset::make_batches(data.manifest, data.features, vocab, batch_size, 0, 0, false)) {
    const ShiftedTokens s = shift(b);
    nn::Tape<float> tape(false);
    const auto p = model.bind(tape);
    const auto logits = model.forward(tape, p, batch_features(b), b.frame_mask, s.inputs, s.mask);
    const std::size_t n = count_valid(s.mask);
    total += static_cast<double>(nn::label_smoothed_ce(logits, s.targets, s.mask, static_cast<float>(label_smoothing)).value()(0, 0)) *
             static_cast<double>(n);
    count += n;
  }
  return total / static_cast<double>(count);
}

TrainResult train(const TrainConfig& cfg, nn::ModelConfig model_cfg, const dataset::Vocabulary& vocab,
                  const FeatureSet& train_set, const FeatureSet* val_set, const TrainOptions& options) {
  check_feature_set(train_set, "training");
  if (val_set) {
    check_feature_set(*val_set, "validation");
    if (val_set->manifest.size() < 2) throw UsageError("validation needs at least 2 pairs (CIDEr-D is undefined for 1)");
  }
  if (cfg.epochs < 1) throw UsageError("epochs must be positive");
  if (cfg.batch_size < 1) throw UsageError("batch size must be positive");
  if (options.resume && !options.checkpoint_dir) throw UsageError("resume needs a checkpoint directory");
  model_cfg.vocab_size = static_cast<int>(vocab.size());
  model_cfg.validate();
  const uint64_t vocab_hash = vocab.hash();

  State st;
  std::optional<nn::Checkpoint> best;
  const auto last_path = options.checkpoint_dir ? *options.checkpoint_dir / "last.ckpt" : std::filesystem::path();
  const auto best_path = options.checkpoint_dir ? *options.checkpoint_dir / "best.ckpt" : std::filesystem::path();
  if (options.resume && std::filesystem::exists(last_path)) {
    const nn::Checkpoint ck = nn::load_checkpoint(last_path);
    if (!(ck.config == model_cfg)) throw UsageError("cannot resume: model config differs from " + last_path.string());
    if (ck.vocab_hash != vocab_hash) throw UsageError("cannot resume: vocabulary differs from " + last_path.string());
    if (!(ck.train_state.at("train_config").get<TrainConfig>() == cfg)) {
      throw UsageError("cannot resume: training config differs from " + last_path.string());
    }
    st = state_from_checkpoint(ck);
    if (std::filesystem::exists(best_path)) best = nn::load_checkpoint(best_path);
  } else {
    st.params = nn::init_parameters<float>(model_cfg, Rng::derive(cfg.seed, {kInitStream}));
    st.opt = nn::AdamState<float>::zeros_like(st.params);
  }

  std::vector<std::pair<int, std::vector<float>>> frozen;
  if (!cfg.embeddings_path.empty()) {
    frozen = load_word2vec(io::read_file(cfg.embeddings_path), vocab, model_cfg.d_model);
    if (st.epoch == 0) {
      auto& emb = st.params.at("embedding");
      for (const auto& [row, v] : frozen) {
        for (int k = 0; k < model_cfg.d_model; ++k) emb(row, k) = v[static_cast<std::size_t>(k)];
      }
    }
  }

  const std::size_t emb_pos = st.params.position("embedding");
  int ran = 0;
  for (int epoch = st.epoch + 1; epoch <= cfg.epochs && !st.stopped; ++epoch) {
    if (options.stop_after && ran >= *options.stop_after) break;
    const auto batches = dataset::make_batches(train_set.manifest, train_set.features, vocab, cfg.batch_size, cfg.seed,
                                               epoch, true);
    double loss_sum = 0.0;
    std::size_t loss_count = 0;
    for (std::size_t bi = 0; bi < batches.size(); ++bi) {
      const auto& b = batches[bi];
      std::vector<Mat<float>> feats = batch_features(b);
      if (cfg.spec_augment) {
        for (std::size_t j = 0; j < b.size(); ++j) {
          const auto valid = train_set.features[b.indices[j]].frames();
          dsp::LogMelSpectrogram spec;
          spec.values = feats[j].topRows(valid);
          const uint64_t seed = Rng::derive(cfg.seed, {kAugmentStream, static_cast<uint64_t>(epoch), b.indices[j]});
          feats[j].topRows(valid) = dsp::spec_augment(spec, cfg.augment, seed).values;
        }
      }
      const ShiftedTokens s = shift(b);
      Rng drop_rng(Rng::derive(cfg.seed, {kDropoutStream, static_cast<uint64_t>(epoch), bi}));
      const typename nn::CaptionModel<float>::Dropout drop{model_cfg.dropout, &drop_rng};
      try {
        nn::CaptionModel<float> model(model_cfg, st.params);
        nn::Tape<float> tape(true);
        const auto p = model.bind(tape);
        const auto logits = model.forward(tape, p, feats, b.frame_mask, s.inputs, s.mask, &drop);
        const auto loss = nn::label_smoothed_ce(logits, s.targets, s.mask, static_cast<float>(cfg.label_smoothing));
        tape.backward(loss);
        std::vector<Mat<float>> grads;
        grads.reserve(st.params.size());
        for (std::size_t i = 0; i < st.params.size(); ++i) grads.push_back(tape.grad(p.at(st.params.name(i))));
        const std::size_t n = count_valid(s.mask);
        loss_sum += static_cast<double>(loss.value()(0, 0)) * static_cast<double>(n);
        loss_count += n;
        nn::adamw_step(st.params, grads, st.opt, cfg.optimizer);
        if (!frozen.empty()) {
          auto& emb = st.params.value(emb_pos);
          for (const auto& [row, v] : frozen) {
            for (int k = 0; k < model_cfg.d_model; ++k) emb(row, k) = v[static_cast<std::size_t>(k)];
          }
        }
      } catch (const NumericError& e) {
        throw TrainingError("training diverged at epoch " + std::to_string(epoch) + ", batch " + std::to_string(bi + 1) +
                            ": " + e.what() + "; last good checkpoint kept");
      }
    }

    EpochLog row;
    row.epoch = epoch;
    row.train_loss = loss_sum / static_cast<double>(loss_count);
    if (val_set) {
      nn::CaptionModel<float> model(model_cfg, st.params);
      row.val_loss = evaluate_loss(model, vocab, *val_set, cfg.batch_size, cfg.label_smoothing);
      nn::Checkpoint probe;
      probe.config = model_cfg;
      probe.vocab_hash = vocab_hash;
      probe.params = st.params;
      const auto preds = predict_manifest(probe, vocab, *val_set);
      // An early model can decode nothing but eos; the metrics reject an
      // all-empty corpus, so such an epoch scores zero.
      const bool all_empty =
          std::all_of(preds.begin(), preds.end(), [](const metrics::Prediction& p) { return p.caption.empty(); });
      row.val_spider = all_empty ? 0.0 : metrics::evaluate(preds, val_set->manifest).at("SPIDEr");
    }
    st.epoch = epoch;
    st.log.push_back(row);
    const bool improved = !val_set || !st.best_spider || *row.val_spider > *st.best_spider;
    if (improved) {
      st.best_epoch = epoch;
      st.best_spider = row.val_spider;
      st.epochs_since_best = 0;
    } else {
      ++st.epochs_since_best;
    }
    if (val_set && cfg.patience > 0 && st.epochs_since_best >= cfg.patience) st.stopped = true;

    const nn::Checkpoint last = make_checkpoint(st, cfg, model_cfg, vocab_hash);
    if (improved) best = last;
    if (options.checkpoint_dir) {
      nn::save_checkpoint(last, last_path);
      if (improved) nn::save_checkpoint(last, best_path);
    }
    if (options.metrics_log) io::write_file(*options.metrics_log, log_text(st.log));
    ++ran;
  }

  TrainResult r;
  r.last = make_checkpoint(st, cfg, model_cfg, vocab_hash);
  r.best = best ? *best : r.last;
  r.log = st.log;
  r.best_epoch = st.best_epoch;
  r.best_spider = st.best_spider;
  return r;
}

std::vector<metrics::Prediction> predict_manifest(const nn::Checkpoint& ckpt, const dataset::Vocabulary& vocab,
                                                  const FeatureSet& data, const DecodeOptions& decode) {
  if (ckpt.vocab_hash != vocab.hash()) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "checkpoint vocab hash %016llx does not match vocabulary hash %016llx",
                  static_cast<unsigned long long>(ckpt.vocab_hash), static_cast<unsigned long long>(vocab.hash()));
    throw UsageError(buf);
  }
  if (ckpt.config.vocab_size != static_cast<int>(vocab.size())) throw UsageError("checkpoint vocabulary size differs");
  if (data.features.size() != data.manifest.size()) throw UsageError("every manifest pair needs features");
  if (decode.beam < 0) throw UsageError("beam width must not be negative");
  const int max_len = decode.max_len.value_or(ckpt.config.max_len);
  nn::CaptionModel<float> model(ckpt.config, ckpt.params);
  std::vector<metrics::Prediction> out;
  out.reserve(data.manifest.size());
  for (std::size_t i = 0; i < data.manifest.size(); ++i) {
    const Mat<float> frames = data.features[i].values;
    nn::ModelScorer scorer(model, frames);
    const std::vector<int> toks =
        decode.beam == 0 ? nn::greedy_decode(scorer, max_len) : nn::beam_decode(scorer, decode.beam, max_len);
    out.push_back({data.manifest.pairs[i].id, dataset::decode_caption(vocab, toks)});
  }
  return out;
}

}  // namespace synthcap::trainer
