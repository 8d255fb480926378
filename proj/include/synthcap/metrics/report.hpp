// Copyright 2026 The synthcap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <filesystem>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "synthcap/dataset.hpp"
#include "synthcap/metrics/metrics.hpp"

namespace synthcap::metrics {

// Column order of the human report.
inline constexpr std::array<const char*, 10> kReportColumns = {
    "BLEU_1", "BLEU_2", "BLEU_3", "BLEU_4", "ROUGE_L", "METEOR", "CIDEr", "SPICE", "SPIDEr", "SPIDEr-FL"};

struct ItemReport {
  std::string id;
  double cider = 0, spice = 0, spider = 0, spider_fl = 0;  // report scale
  bool flagged = false;
};

struct ReportMeta {
  std::string name;
  std::optional<double> gt_percent;
  std::optional<bool> synthetic;
};

struct MetricReport {
  std::array<double, 10> corpus{};  // report scale, kReportColumns order
  std::vector<ItemReport> per_item;
  std::vector<nlohmann::json> examples;
  std::optional<ReportMeta> meta;

  double at(std::string_view column) const;
};

MetricReport score_corpus(const EvalCorpus& corpus, const FluencyDetector& detector = RuleFluencyDetector(),
                          double fluency_penalty = kDefaultFluencyPenalty);

struct Prediction {
  std::string id;
  std::string caption;
};

std::string predictions_to_jsonl(const std::vector<Prediction>& preds);
std::vector<Prediction> predictions_from_jsonl(std::string_view text);

// Candidates are normalized leniently (an empty prediction scores zero);
// references must survive normalization. Throws UsageError listing every
// manifest id without a prediction.
EvalCorpus build_corpus(const std::vector<Prediction>& preds, const dataset::DatasetManifest& refs);

MetricReport evaluate(const std::vector<Prediction>& preds, const dataset::DatasetManifest& refs,
                      double fluency_penalty = kDefaultFluencyPenalty);

nlohmann::json report_to_json(const MetricReport& r);
MetricReport report_from_json(const nlohmann::json& j);

// Table with one row per report; Model column = meta name.
std::string render_table2(const std::vector<MetricReport>& reports);
// Rows grouped by gt percentage, with a synthetic-data check column.
std::string render_table4(const std::vector<MetricReport>& reports);

}  // namespace synthcap::metrics
