// Copyright 2026 The synthcap Authors
// SPDX-License-Identifier: Apache-2.0

#include "synthcap/metrics/report.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>
#include <unordered_map>

#include "synthcap/corpus.hpp"
#include "synthcap/error.hpp"

namespace synthcap::metrics {

using nlohmann::json;

namespace {

constexpr std::size_t kExampleCount = 5;

std::string join(const Tokens& t) {
  std::string s;
  for (const auto& x : t) {
    if (!s.empty()) s += ' ';
    s += x;
  }
  return s;
}

}  // namespace

double MetricReport::at(std::string_view column) const {
  for (std::size_t i = 0; i < kReportColumns.size(); ++i) {
    if (column == kReportColumns[i]) return corpus[i];
  }
  throw UsageError("unknown report column \"" + std::string(column) + "\"");
}

MetricReport score_corpus(const EvalCorpus& corpus, const FluencyDetector& detector, double fluency_penalty) {
  validate_corpus(corpus);
  if (corpus.items.empty()) throw UsageError("cannot score an empty corpus");
  MetricReport r;
  const auto b = bleu_all(corpus);
  for (int n = 0; n < 4; ++n) r.corpus[static_cast<std::size_t>(n)] = 100.0 * b[static_cast<std::size_t>(n)];
  r.corpus[4] = 100.0 * rouge_l(corpus);
  r.corpus[5] = 100.0 * meteor_lite(corpus);

  const auto cider = cider_d_items(corpus);
  const auto spice = spice_items(corpus);
  std::vector<double> per_spider;
  std::vector<bool> flags;
  double cider_sum = 0, spice_sum = 0;
  for (std::size_t i = 0; i < corpus.items.size(); ++i) {
    ItemReport it;
    it.id = corpus.items[i].id;
    it.cider = 10.0 * cider[i];
    it.spice = 100.0 * spice[i];
    it.spider = spider(it.cider, it.spice);
    it.flagged = detector.has_errors(corpus.items[i].candidate);
    it.spider_fl = it.flagged ? it.spider - it.spider * fluency_penalty : it.spider;
    cider_sum += it.cider;
    spice_sum += it.spice;
    per_spider.push_back(it.spider);
    flags.push_back(it.flagged);
    r.per_item.push_back(std::move(it));
  }
  const double n = static_cast<double>(corpus.items.size());
  r.corpus[6] = cider_sum / n;
  r.corpus[7] = spice_sum / n;
  r.corpus[8] = spider(r.corpus[6], r.corpus[7]);
  r.corpus[9] = spider_fl(per_spider, flags, fluency_penalty);

  for (std::size_t i = 0; i < std::min(kExampleCount, corpus.items.size()); ++i) {
    const auto& item = corpus.items[i];
    json refs = json::array();
    for (const auto& ref : item.references) refs.push_back(join(ref));
    r.examples.push_back({{"id", item.id}, {"candidate", join(item.candidate)}, {"references", refs}});
  }
  return r;
}

std::string predictions_to_jsonl(const std::vector<Prediction>& preds) {
  std::string out;
  for (const auto& p : preds) out += json{{"id", p.id}, {"caption", p.caption}}.dump() + "\n";
  return out;
}

std::vector<Prediction> predictions_from_jsonl(std::string_view text) {
  std::vector<Prediction> out;
  std::size_t pos = 0, line_no = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(pos, end - pos);
    ++line_no;
    if (line.find_first_not_of(" \t\r") != std::string_view::npos) {
      json row;
      try {
        row = json::parse(line);
      } catch (const json::parse_error& e) {
        throw ParseError("predictions line " + std::to_string(line_no) + ": " + e.what(), pos + e.byte);
      }
      if (!row.is_object() || !row.contains("id") || !row["id"].is_string() || !row.contains("caption") ||
          !row["caption"].is_string()) {
        throw FormatError("predictions line " + std::to_string(line_no) + ": expected {\"id\": str, \"caption\": str}");
      }
      out.push_back({row["id"].get<std::string>(), row["caption"].get<std::string>()});
    }
    pos = end + 1;
  }
  return out;
}

EvalCorpus build_corpus(const std::vector<Prediction>& preds, const dataset::DatasetManifest& refs) {
  std::unordered_map<std::string, const Prediction*> by_id;
  for (const auto& p : preds) {
    if (!by_id.emplace(p.id, &p).second) throw UsageError("duplicate prediction id \"" + p.id + "\"");
  }
  std::vector<std::string> missing;
  EvalCorpus corpus;
  for (const auto& pair : refs.pairs) {
    auto it = by_id.find(pair.id);
    if (it == by_id.end()) {
      missing.push_back(pair.id);
      continue;
    }
    EvalItem item;
    item.id = pair.id;
    item.candidate = corpus::tokenize(corpus::normalize_text(it->second->caption));
    for (const auto& c : pair.captions) item.references.push_back(corpus::tokenize(corpus::normalize_caption(c)));
    corpus.items.push_back(std::move(item));
  }
  if (!missing.empty()) {
    std::string list;
    for (std::size_t i = 0; i < missing.size(); ++i) list += (i ? ", " : "") + missing[i];
    throw UsageError("missing predictions for " + std::to_string(missing.size()) + " id(s): " + list);
  }
  return corpus;
}

MetricReport evaluate(const std::vector<Prediction>& preds, const dataset::DatasetManifest& refs,
                      double fluency_penalty) {
  return score_corpus(build_corpus(preds, refs), RuleFluencyDetector(), fluency_penalty);
}

json report_to_json(const MetricReport& r) {
  json corpus = json::object();
  for (std::size_t i = 0; i < kReportColumns.size(); ++i) corpus[kReportColumns[i]] = r.corpus[i];
  json items = json::array();
  for (const auto& it : r.per_item) {
    items.push_back({{"id", it.id},
                     {"cider", it.cider},
                     {"spice", it.spice},
                     {"spider", it.spider},
                     {"spider_fl", it.spider_fl},
                     {"flagged", it.flagged}});
  }
  json j = {{"corpus", corpus}, {"per_item", items}, {"scale", "0-100"}, {"examples", r.examples}};
  if (r.meta) {
    json m = {{"name", r.meta->name}};
    if (r.meta->gt_percent) m["gt_percent"] = *r.meta->gt_percent;
    if (r.meta->synthetic) m["synthetic"] = *r.meta->synthetic;
    j["meta"] = m;
  }
  return j;
}

MetricReport report_from_json(const json& j) {
  MetricReport r;
  try {
    if (j.at("scale").get<std::string>() != "0-100") throw FormatError("report scale must be \"0-100\"");
    for (std::size_t i = 0; i < kReportColumns.size(); ++i) r.corpus[i] = j.at("corpus").at(kReportColumns[i]).get<double>();
    for (const auto& it : j.value("per_item", json::array())) {
      r.per_item.push_back({it.at("id").get<std::string>(), it.at("cider").get<double>(), it.at("spice").get<double>(),
                            it.at("spider").get<double>(), it.at("spider_fl").get<double>(),
                            it.at("flagged").get<bool>()});
    }
    for (const auto& e : j.value("examples", json::array())) r.examples.push_back(e);
    if (j.contains("meta")) {
      const auto& m = j["meta"];
      ReportMeta meta;
      meta.name = m.value("name", "");
      if (m.contains("gt_percent")) meta.gt_percent = m["gt_percent"].get<double>();
      if (m.contains("synthetic")) meta.synthetic = m["synthetic"].get<bool>();
      r.meta = meta;
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed metric report: ") + e.what());
  }
  return r;
}

namespace {

std::string header_row(const std::vector<std::string>& lead) {
  std::ostringstream os;
  os << "|";
  for (const auto& l : lead) os << " " << l << " |";
  for (const char* c : kReportColumns) os << " " << c << " |";
  os << "\n|";
  for (std::size_t i = 0; i < lead.size(); ++i) os << " --- |";
  for (std::size_t i = 0; i < kReportColumns.size(); ++i) os << " ---: |";
  os << "\n";
  return os.str();
}

std::string cells(const MetricReport& r) {
  std::string s;
  for (double v : r.corpus) s += " " + format_display(v) + " |";
  return s;
}

std::string percent_label(double p) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f%%", p);
  return buf;
}

}  // namespace

std::string render_table2(const std::vector<MetricReport>& reports) {
  std::string out = header_row({"Model"});
  for (const auto& r : reports) {
    out += "| " + (r.meta && !r.meta->name.empty() ? r.meta->name : std::string("model")) + " |" + cells(r) + "\n";
  }
  return out;
}

std::string render_table4(const std::vector<MetricReport>& reports) {
  std::map<double, std::vector<const MetricReport*>> groups;
  for (const auto& r : reports) {
    if (!r.meta || !r.meta->gt_percent || !r.meta->synthetic) {
      throw UsageError("ablation table needs gt_percent and synthetic in every report's meta");
    }
    groups[*r.meta->gt_percent].push_back(&r);
  }
  std::string out = header_row({"GT data", "Synthetic Data"});
  const std::string blanks = [] {
    std::string s;
    for (std::size_t i = 0; i < kReportColumns.size(); ++i) s += "  |";
    return s;
  }();
  for (auto& [pct, rows] : groups) {
    std::stable_sort(rows.begin(), rows.end(),
                     [](const MetricReport* a, const MetricReport* b) { return !*a->meta->synthetic && *b->meta->synthetic; });
    out += "| **" + percent_label(pct) + "** |  |" + blanks + "\n";
    for (const MetricReport* r : rows) out += "|  | " + std::string(*r->meta->synthetic ? "✓" : "✗") + " |" + cells(*r) + "\n";
  }
  return out;
}

}  // namespace synthcap::metrics
