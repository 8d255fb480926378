// Copyright 2026 The synthcap Authors
// SPDX-License-Identifier: Apache-2.0

// Teacher-forced training with AdamW, per-epoch validation (loss and greedy
// SPIDEr), best/last checkpoints, and manifest-level caption prediction.

#pragma once

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "synthcap/dataset.hpp"
#include "synthcap/dsp.hpp"
#include "synthcap/metrics/report.hpp"
#include "synthcap/nn/checkpoint.hpp"
#include "synthcap/nn/model.hpp"
#include "synthcap/nn/optim.hpp"

namespace synthcap::trainer {

struct TrainConfig {
  int epochs = 50;
  int patience = 10;  // 0 disables early stopping
  int batch_size = 16;
  nn::AdamWConfig optimizer;
  double label_smoothing = 0.1;
  bool spec_augment = true;
  dsp::SpecAugmentConfig augment;
  uint64_t seed = 0;
  // Optional word2vec text file; matching embedding rows are loaded and frozen.
  std::string embeddings_path;

  bool operator==(const TrainConfig&) const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

// A manifest with one feature matrix per pair, in manifest order.
struct FeatureSet {
  dataset::DatasetManifest manifest;
  std::vector<dsp::LogMelSpectrogram> features;
};

struct EpochLog {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  std::optional<double> val_loss;
  std::optional<double> val_spider;  // report scale

  bool operator==(const EpochLog&) const = default;
};

std::string epoch_log_line(const EpochLog& e);
std::vector<EpochLog> read_epoch_log(std::string_view jsonl);

struct TrainOptions {
  // When set, last.ckpt / best.ckpt are written here after every epoch.
  std::optional<std::filesystem::path> checkpoint_dir;
  std::optional<std::filesystem::path> metrics_log;
  // Continue from checkpoint_dir/last.ckpt when it exists.
  bool resume = false;
  // Stop after this many epochs of the current invocation (testing resume).
  std::optional<int> stop_after;
};

struct TrainResult {
  nn::Checkpoint last;
  nn::Checkpoint best;
  std::vector<EpochLog> log;
  int best_epoch = 0;
  std::optional<double> best_spider;
};

// model.vocab_size is taken from `vocab`. Without a validation set the last
// epoch doubles as the best one and early stopping is off.
TrainResult train(const TrainConfig& cfg, nn::ModelConfig model, const dataset::Vocabulary& vocab,
                  const FeatureSet& train_set, const FeatureSet* val_set, const TrainOptions& options = {});

// Loads word2vec text ("count dim" header, then "token v1 .. vdim" lines).
// Returns (vocabulary index, vector) for tokens present in `vocab`.
std::vector<std::pair<int, std::vector<float>>> load_word2vec(std::string_view text, const dataset::Vocabulary& vocab,
                                                              int dim);

struct DecodeOptions {
  int beam = 0;  // 0 = greedy, k >= 1 = beam search of width k
  std::optional<int> max_len;  // defaults to the model's max_len
};

// One caption per pair, in manifest order. Throws UsageError when the
// checkpoint was trained against another vocabulary.
std::vector<metrics::Prediction> predict_manifest(const nn::Checkpoint& ckpt, const dataset::Vocabulary& vocab,
                                                  const FeatureSet& data, const DecodeOptions& decode = {});

// Mean label-smoothed loss over the first reference of every pair.
double evaluate_loss(const nn::CaptionModel<float>& model, const dataset::Vocabulary& vocab, const FeatureSet& data,
                     int batch_size, double label_smoothing);

}  // namespace synthcap::trainer
