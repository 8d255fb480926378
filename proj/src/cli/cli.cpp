// Copyright 2026 The synthcap Authors
// SPDX-License-Identifier: Apache-2.0

#include "synthcap/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <json.hpp>
#include <map>
#include <mutex>
#include <ostream>
#include <thread>

#include "synthcap/corpus.hpp"
#include "synthcap/dataset.hpp"
#include "synthcap/dsp.hpp"
#include "synthcap/error.hpp"
#include "synthcap/io.hpp"
#include "synthcap/metrics/report.hpp"
#include "synthcap/mock_world.hpp"
#include "synthcap/rng.hpp"
#include "synthcap/trainer.hpp"
#include "synthcap/tta.hpp"

namespace synthcap::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---- shared plumbing ------------------------------------------------------

// Runs fn(i) for i in [0, n) on up to `workers` threads. The exception of the
// lowest failing index is rethrown, so the reported error does not depend on
// scheduling.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn fn) {
  const std::size_t threads = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, workers)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::size_t failed_at = n;
  std::exception_ptr failure;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (i < failed_at) {
            failed_at = i;
            failure = std::current_exception();
          }
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

// Applies config-file values to options the command line left unset, then
// records the effective value of every option.
class Settings {
 public:
  void load(const std::string& path) {
    if (path.empty()) return;
    try {
      doc_ = json::parse(io::read_file(path));
    } catch (const json::parse_error& e) {
      throw ParseError("config " + path + ": " + e.what(), e.byte);
    }
    if (!doc_.is_object()) throw FormatError("config " + path + ": top level must be an object");
  }

  void apply(CLI::App& sub) {
    const json* section = doc_.contains(sub.get_name()) ? &doc_[sub.get_name()] : nullptr;
    for (CLI::Option* opt : sub.get_options()) {
      const std::string key = opt->get_single_name();
      if (key == "help" || key == "config" || opt->count() > 0) continue;
      const json* v = nullptr;
      if (section && section->contains(key)) {
        v = &(*section)[key];
      } else if (doc_.contains(key) && !doc_[key].is_object()) {
        v = &doc_[key];
      }
      if (!v) continue;
      if (v->is_array()) {
        for (const auto& x : *v) opt->add_result(scalar(x));
      } else {
        opt->add_result(scalar(*v));
      }
      opt->run_callback();
    }
  }

  static json effective(const CLI::App& sub) {
    json j = {{"command", sub.get_name()}};
    for (const CLI::Option* opt : sub.get_options()) {
      const std::string key = opt->get_single_name();
      if (key == "help" || key == "config") continue;
      if (opt->count() > 0 || !opt->results().empty()) {
        const auto& r = opt->results();
        if (r.size() == 1 && opt->get_expected_max() <= 1) {
          j[key] = r.front();
        } else {
          j[key] = r;
        }
      } else {
        j[key] = opt->get_default_str();
      }
    }
    return j;
  }

 private:
  static std::string scalar(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
  }

  json doc_ = json::object();
};

void echo_config(const fs::path& dir, const json& effective) {
  io::write_file(dir / "config.json", effective.dump(2) + "\n");
}

std::string relative_to(const fs::path& target, const fs::path& base_dir) {
  const fs::path t = fs::weakly_canonical(fs::absolute(target));
  const fs::path b = fs::weakly_canonical(fs::absolute(base_dir));
  return t.lexically_relative(b).generic_string();
}

// Rewrites audio paths of pairs read from `from` so they resolve from `to_dir`.
void rebase_audio(dataset::DatasetManifest& m, const fs::path& from, const fs::path& to_dir) {
  for (auto& p : m.pairs) p.audio_path = relative_to(dataset::resolve_audio_path(from, p), to_dir);
}

trainer::FeatureSet load_feature_set(const fs::path& manifest_path, const fs::path& features_dir, dataset::Split split) {
  trainer::FeatureSet s;
  s.manifest = dataset::read_manifest(manifest_path, split);
  std::vector<std::string> missing;
  for (const auto& p : s.manifest.pairs) {
    const fs::path f = features_dir / dataset::feature_file_name(p.id);
    if (!fs::exists(f)) {
      missing.push_back(p.id);
      continue;
    }
    s.features.push_back(dsp::load_features(f));
  }
  if (!missing.empty()) {
    std::string list;
    for (std::size_t i = 0; i < std::min<std::size_t>(missing.size(), 5); ++i) list += (i ? ", " : "") + missing[i];
    throw IoError(std::to_string(missing.size()) + " pair(s) of " + manifest_path.string() + " have no features in " +
                  features_dir.string() + " (first: " + list + "); run extract-features");
  }
  return s;
}

std::vector<double> parse_percents(const std::vector<std::string>& items) {
  std::vector<double> out;
  for (const auto& item : items) {
    std::size_t pos = 0;
    while (pos <= item.size()) {
      std::size_t end = item.find(',', pos);
      if (end == std::string::npos) end = item.size();
      const std::string tok = item.substr(pos, end - pos);
      if (!tok.empty()) {
        try {
          std::size_t used = 0;
          const double v = std::stod(tok, &used);
          if (used != tok.size() || !(v > 0.0 && v <= 100.0)) throw std::invalid_argument(tok);
          out.push_back(v);
        } catch (const std::exception&) {
          throw UsageError("invalid percentage \"" + tok + "\" (expected a number in (0, 100])");
        }
      }
      pos = end + 1;
    }
  }
  if (out.empty()) throw UsageError("no percentages given");
  return out;
}

std::string percent_tag(double p) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", p);
  return buf;
}

// ---- model / training flags -----------------------------------------------

struct ModelFlags {
  nn::ModelConfig model;
  trainer::TrainConfig train;
  bool no_spec_augment = false;

  void add(CLI::App& sub) {
    sub.add_option("--d-model", model.d_model, "Model width")->capture_default_str();
    sub.add_option("--heads", model.n_heads, "Attention heads")->capture_default_str();
    sub.add_option("--graph-layers", model.n_graph_layers, "Graph attention layers")->capture_default_str();
    sub.add_option("--pool", model.frontend_pool, "Temporal mean-pool factor")->capture_default_str();
    sub.add_option("--max-len", model.max_len, "Maximum decoded length")->capture_default_str();
    sub.add_option("--dropout", model.dropout, "Dropout rate")->capture_default_str();
    sub.add_option("--epochs", train.epochs, "Training epochs")->capture_default_str();
    sub.add_option("--patience", train.patience, "Early-stopping patience (0 = off)")->capture_default_str();
    sub.add_option("--batch-size", train.batch_size, "Batch size")->capture_default_str();
    sub.add_option("--lr", train.optimizer.lr, "AdamW learning rate")->capture_default_str();
    sub.add_option("--weight-decay", train.optimizer.weight_decay, "AdamW decoupled weight decay")->capture_default_str();
    sub.add_option("--label-smoothing", train.label_smoothing, "Label smoothing eps")->capture_default_str();
    sub.add_flag("--no-spec-augment", no_spec_augment, "Disable SpecAugment");
    sub.add_option("--embeddings", train.embeddings_path, "word2vec text file; matching rows are frozen");
  }

  void finish(int n_mels) {
    train.spec_augment = !no_spec_augment;
    model.n_mels = n_mels;
  }
};

dataset::Vocabulary vocabulary_for(const dataset::DatasetManifest& m) {
  std::vector<std::string> caps;
  for (const auto& p : m.pairs) {
    for (const auto& c : p.captions) caps.push_back(corpus::normalize_caption(c));
  }
  return dataset::build_vocabulary(caps, 1);
}

struct TrainedRun {
  trainer::TrainResult result;
  dataset::Vocabulary vocab;
};

TrainedRun train_into(const fs::path& out_dir, ModelFlags flags, uint64_t seed, const trainer::FeatureSet& train_set,
                      const trainer::FeatureSet& val_set, bool resume) {
  if (train_set.features.empty()) throw UsageError("training manifest is empty");
  flags.finish(static_cast<int>(train_set.features.front().bins()));
  flags.train.seed = seed;
  TrainedRun run{{}, vocabulary_for(train_set.manifest)};
  io::write_file(out_dir / "vocab.txt", run.vocab.to_text());
  trainer::TrainOptions opts;
  opts.checkpoint_dir = out_dir / "checkpoints";
  opts.metrics_log = out_dir / "metrics.jsonl";
  opts.resume = resume;
  run.result = trainer::train(flags.train, flags.model, run.vocab, train_set, &val_set, opts);
  return run;
}

// ---- subcommands ----------------------------------------------------------

struct Ctx {
  std::ostream& out;
  std::ostream& err;
  bool force = false;
};

void cmd_ingest(Ctx& ctx, const json& eff, const std::string& coco, const std::string& out_path, std::size_t n,
                uint64_t seed, bool dedupe) {
  auto records = corpus::parse_coco_captions(io::read_file(coco));
  if (dedupe) records = corpus::dedupe_captions(records);
  if (n > 0) records = corpus::select_captions(records, n, seed);
  corpus::write_captions_jsonl(out_path, records);
  echo_config(fs::path(out_path).parent_path(), eff);
  ctx.out << "wrote " << records.size() << " captions to " << out_path << "\n";
}

struct SynthArgs {
  std::string captions;
  std::string out_dir;
  std::string backend = "mock";
  std::string endpoint;
  std::size_t n = 0;
  double duration = 10.0;
  uint64_t seed = 0;
  int concurrency = 4;
  double timeout = 120.0;
  int sample_rate = 16000;
  bool dedupe = false;
};

void cmd_synthesize(Ctx& ctx, const json& eff, const SynthArgs& a) {
  auto records = corpus::read_captions_jsonl(a.captions);
  if (a.dedupe) records = corpus::dedupe_captions(records);
  if (a.n > 0) records = corpus::select_captions(records, a.n, a.seed);
  const fs::path dir(a.out_dir);
  dataset::DatasetManifest m;
  std::vector<tta::GenerationRequest> requests;
  std::vector<fs::path> wav_paths;
  for (const auto& r : records) {
    dataset::TextAudioPair p;
    p.id = "syn-" + r.id;
    p.captions = {r.text};
    p.origin = dataset::Origin::kSyn;
    p.duration_s = a.duration;
    std::string stem = dataset::feature_file_name(p.id);
    stem.resize(stem.size() - 4);
    p.audio_path = "audio/" + stem + ".wav";
    wav_paths.push_back(dir / p.audio_path);
    m.pairs.push_back(std::move(p));
    // One seed for every request: with the mock backend it fixes the world's
    // token-to-sound mapping.
    requests.push_back({corpus::normalize_caption(r.text), a.duration, a.seed});
  }
  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < requests.size(); ++i) {
    if (ctx.force || !fs::exists(wav_paths[i])) todo.push_back(i);
  }
  if (a.backend == "mock") {
    parallel_for(todo.size(), a.concurrency, [&](std::size_t k) {
      const std::size_t i = todo[k];
      wav::write(wav_paths[i], tta::mock_synthesize(requests[i], a.sample_rate));
    });
  } else if (a.backend == "http") {
    if (a.endpoint.empty()) throw UsageError("--backend http needs --endpoint or SYNTHCAP_ENDPOINT");
    tta::ServiceOptions opts;
    opts.timeout_s = a.timeout;
    opts.expected_sample_rate = a.sample_rate;
    opts.max_in_flight = a.concurrency;
    std::vector<tta::GenerationRequest> batch;
    for (std::size_t i : todo) batch.push_back(requests[i]);
    const auto clips = tta::generate_batch_via_service(a.endpoint, batch, opts);
    for (std::size_t k = 0; k < todo.size(); ++k) wav::write(wav_paths[todo[k]], clips[k]);
  } else {
    throw UsageError("unknown backend \"" + a.backend + "\" (expected mock or http)");
  }
  dataset::write_manifest(dir / "syn.jsonl", m);
  echo_config(dir, eff);
  ctx.out << "synthesized " << todo.size() << " clip(s), " << (requests.size() - todo.size())
          << " already present; manifest " << (dir / "syn.jsonl").string() << "\n";
}

void cmd_build_manifest(Ctx& ctx, const json& eff, const std::string& gt_path, const std::string& syn_path,
                        const std::string& out_path, double pct, uint64_t seed) {
  const fs::path out(out_path);
  auto gt = dataset::read_manifest(gt_path);
  gt = dataset::subset_percentage(gt, pct, seed);
  rebase_audio(gt, gt_path, out.parent_path());
  dataset::DatasetManifest merged = gt;
  if (!syn_path.empty()) {
    auto syn = dataset::read_manifest(syn_path);
    rebase_audio(syn, syn_path, out.parent_path());
    merged = dataset::merge_manifests(gt, syn);
  }
  dataset::write_manifest(out, merged);
  echo_config(out.parent_path(), eff);
  ctx.out << "manifest " << out_path << ": " << gt.size() << " gt + " << (merged.size() - gt.size())
          << " synthetic pairs\n";
}

void cmd_extract(Ctx& ctx, const json& eff, const std::string& manifest_path, const std::string& out_dir, int workers) {
  const auto m = dataset::read_manifest(manifest_path);
  const fs::path dir(out_dir);
  std::atomic<std::size_t> written{0};
  parallel_for(m.size(), workers, [&](std::size_t i) {
    const auto& p = m.pairs[i];
    const fs::path f = dir / dataset::feature_file_name(p.id);
    if (!ctx.force && fs::exists(f)) return;
    dsp::save_features(f, dsp::log_mel(wav::read(dataset::resolve_audio_path(manifest_path, p))));
    ++written;
  });
  echo_config(dir, eff);
  ctx.out << "extracted " << written.load() << " feature file(s) into " << out_dir << " (" << (m.size() - written.load())
          << " cached)\n";
}

void cmd_train(Ctx& ctx, const json& eff, const std::string& train_path, const std::string& val_path,
               const std::string& features, const std::string& out_dir, const ModelFlags& flags, uint64_t seed,
               bool resume) {
  const auto train_set = load_feature_set(train_path, features, dataset::Split::kTrain);
  const auto val_set = load_feature_set(val_path, features, dataset::Split::kVal);
  const fs::path dir(out_dir);
  echo_config(dir, eff);
  const auto run = train_into(dir, flags, seed, train_set, val_set, resume);
  const auto& r = run.result;
  ctx.out << "trained " << r.log.size() << " epoch(s); best epoch " << r.best_epoch;
  if (r.best_spider) ctx.out << " (val SPIDEr " << metrics::format_display(*r.best_spider) << ")";
  ctx.out << "; checkpoints in " << (dir / "checkpoints").string() << "\n";
}

void cmd_predict(Ctx& ctx, const json& eff, const std::string& ckpt_path, const std::string& vocab_path,
                 const std::string& manifest_path, const std::string& features, const std::string& out_path, int beam) {
  const auto ckpt = nn::load_checkpoint(ckpt_path);
  const auto vocab = dataset::Vocabulary::from_text(io::read_file(vocab_path));
  const auto data = load_feature_set(manifest_path, features, dataset::Split::kEval);
  trainer::DecodeOptions opts;
  opts.beam = beam;
  const auto preds = trainer::predict_manifest(ckpt, vocab, data, opts);
  io::write_file(out_path, metrics::predictions_to_jsonl(preds));
  echo_config(fs::path(out_path).parent_path(), eff);
  ctx.out << "wrote " << preds.size() << " prediction(s) to " << out_path << "\n";
}

void write_report(const fs::path& json_path, const metrics::MetricReport& r) {
  io::write_file(json_path, metrics::report_to_json(r).dump(2) + "\n");
  fs::path md = json_path;
  md.replace_extension(".md");
  io::write_file(md, metrics::render_table2({r}));
}

void cmd_evaluate(Ctx& ctx, const json& eff, const std::string& preds_path, const std::string& manifest_path,
                  const std::string& out_path, const std::string& name, double penalty) {
  const auto preds = metrics::predictions_from_jsonl(io::read_file(preds_path));
  const auto m = dataset::read_manifest(manifest_path, dataset::Split::kEval);
  auto report = metrics::evaluate(preds, m, penalty);
  report.meta = metrics::ReportMeta{name, std::nullopt, std::nullopt};
  write_report(out_path, report);
  echo_config(fs::path(out_path).parent_path(), eff);
  ctx.out << metrics::render_table2({report});
}

struct AblateArgs {
  std::string gt, syn, val, eval, features, out_dir;
  std::vector<std::string> percents = {"12.5,25,37.5,50"};
  int parallel = 1;
  int beam = 0;
  uint64_t seed = 0;
  ModelFlags flags;
};

void cmd_ablate(Ctx& ctx, const json& eff, const AblateArgs& a) {
  const std::vector<double> pcts = parse_percents(a.percents);
  const fs::path dir(a.out_dir);
  echo_config(dir, eff);
  const auto gt = load_feature_set(a.gt, a.features, dataset::Split::kTrain);
  const auto syn = load_feature_set(a.syn, a.features, dataset::Split::kTrain);
  const auto val = load_feature_set(a.val, a.features, dataset::Split::kVal);
  const auto eval = load_feature_set(a.eval, a.features, dataset::Split::kEval);

  struct Cell {
    double pct;
    bool synthetic;
    std::size_t row;
  };
  std::vector<Cell> cells;
  for (std::size_t i = 0; i < pcts.size(); ++i) {
    cells.push_back({pcts[i], false, i});
    cells.push_back({pcts[i], true, i});
  }
  std::vector<metrics::MetricReport> reports(cells.size());
  std::mutex warn_mu;
  parallel_for(cells.size(), a.parallel, [&](std::size_t c) {
    const Cell& cell = cells[c];
    // With and without synthetic data share the gt subset and the training
    // seed, so the two rows of a percentage differ only in the added pairs.
    const uint64_t cell_seed = a.seed + cell.row;
    trainer::FeatureSet train_set;
    train_set.manifest = dataset::subset_percentage(gt.manifest, cell.pct, cell_seed);
    std::map<std::string, std::size_t> where;
    for (std::size_t i = 0; i < gt.manifest.size(); ++i) where[gt.manifest.pairs[i].id] = i;
    for (const auto& p : train_set.manifest.pairs) train_set.features.push_back(gt.features[where.at(p.id)]);
    if (cell.synthetic) {
      train_set.manifest = dataset::merge_manifests(train_set.manifest, syn.manifest);
      train_set.features.insert(train_set.features.end(), syn.features.begin(), syn.features.end());
    }
    const std::string name = percent_tag(cell.pct) + (cell.synthetic ? "_syn" : "_gt");
    const fs::path cell_dir = dir / "cells" / name;
    dataset::write_manifest(cell_dir / "train.jsonl", train_set.manifest);
    const auto run = train_into(cell_dir, a.flags, cell_seed, train_set, val, false);
    trainer::DecodeOptions opts;
    opts.beam = a.beam;
    const auto preds = trainer::predict_manifest(run.result.best, run.vocab, eval, opts);
    io::write_file(cell_dir / "predictions.jsonl", metrics::predictions_to_jsonl(preds));
    metrics::MetricReport report;
    if (std::all_of(preds.begin(), preds.end(), [](const auto& p) { return p.caption.empty(); })) {
      // Metrics are undefined on an all-empty corpus; the cell scores zero
      // instead of aborting the grid.
      for (const auto& p : preds) report.per_item.push_back({p.id, 0, 0, 0, 0, true});
      std::lock_guard<std::mutex> lock(warn_mu);
      ctx.err << "warning: cell " << name << " decoded only empty captions; scored as zero\n";
    } else {
      report = metrics::evaluate(preds, eval.manifest);
    }
    report.meta = metrics::ReportMeta{name, cell.pct, cell.synthetic};
    write_report(cell_dir / "report.json", report);
    reports[c] = std::move(report);
  });
  json all = json::array();
  for (const auto& r : reports) all.push_back(metrics::report_to_json(r));
  io::write_file(dir / "reports.json", all.dump(2) + "\n");
  const std::string table = metrics::render_table4(reports);
  io::write_file(dir / "ablation.md", table);
  ctx.out << table;
}

void cmd_report(Ctx& ctx, const std::vector<std::string>& inputs, const std::string& layout, const std::string& out_path) {
  std::vector<metrics::MetricReport> reports;
  for (const auto& path : inputs) {
    json j;
    try {
      j = json::parse(io::read_file(path));
    } catch (const json::parse_error& e) {
      throw ParseError(path + ": " + e.what(), e.byte);
    }
    if (j.is_array()) {
      for (const auto& r : j) reports.push_back(metrics::report_from_json(r));
    } else {
      reports.push_back(metrics::report_from_json(j));
    }
  }
  if (reports.empty()) throw UsageError("no reports given");
  std::string text;
  if (layout == "table2") {
    text = metrics::render_table2(reports);
  } else if (layout == "table4") {
    text = metrics::render_table4(reports);
  } else if (layout == "json") {
    json all = json::array();
    for (const auto& r : reports) all.push_back(metrics::report_to_json(r));
    text = all.dump(2) + "\n";
  } else {
    throw UsageError("unknown layout \"" + layout + "\" (expected table2, table4 or json)");
  }
  if (out_path.empty()) {
    ctx.out << text;
  } else {
    io::write_file(out_path, text);
  }
}

struct MockDataArgs {
  std::string out_dir;
  uint64_t seed = 0;
  std::size_t train = 600, val = 40, eval = 100, coco = 300;
  double duration = 2.0;
  int workers = 1;
};

void cmd_mock_data(Ctx& ctx, const json& eff, const MockDataArgs& a) {
  world::WorldConfig w;
  w.seed = a.seed;
  w.duration_s = a.duration;
  const fs::path dir(a.out_dir);
  io::write_file(dir / "coco_captions.json", world::coco_document(world::prompt_captions(w, a.coco, 4)));
  const std::vector<std::tuple<const char*, std::size_t, uint64_t>> splits = {
      {"train", a.train, 1}, {"val", a.val, 2}, {"eval", a.eval, 3}};
  for (const auto& [name, n, stream] : splits) {
    const auto clips = world::gt_clips(w, n, stream, std::string(name) + "-");
    dataset::DatasetManifest m;
    for (const auto& c : clips) {
      dataset::TextAudioPair p;
      p.id = c.id;
      p.captions = c.references;
      p.audio_path = "audio/" + c.id + ".wav";
      p.origin = dataset::Origin::kGt;
      p.duration_s = a.duration;
      m.pairs.push_back(std::move(p));
    }
    parallel_for(clips.size(), a.workers, [&](std::size_t i) {
      wav::write(dir / "gt" / m.pairs[i].audio_path, world::render(w, clips[i].references.front()));
    });
    dataset::write_manifest(dir / "gt" / (std::string(name) + ".jsonl"), m);
  }
  echo_config(dir, eff);
  ctx.out << "mock world written to " << a.out_dir << "\n";
}

int exit_code(ErrorClass c) { return static_cast<int>(c); }

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"synthcap: synthetic text-audio pairs for audio captioning", "synthcap"};
  app.require_subcommand(1);
  std::string config_path;
  bool force = false;
  app.add_option("--config", config_path, "JSON config; flags override its fields");
  app.add_flag("--force", force, "Recompute outputs that already exist");
  // Checked after the config file is merged, so config fields can satisfy them.
  std::vector<CLI::Option*> required;
  auto must = [&](CLI::Option* opt) { required.push_back(opt); };

  // ingest-captions
  std::string coco, captions_out;
  std::size_t ingest_n = 0;
  uint64_t ingest_seed = 0;
  bool ingest_dedupe = false;
  auto* ingest = app.add_subcommand("ingest-captions", "COCO captions JSON -> captions JSONL");
  must(ingest->add_option("--coco", coco, "COCO captions document"));
  must(ingest->add_option("--out", captions_out, "Output captions JSONL"));
  ingest->add_option("--n", ingest_n, "Sample this many captions (0 = all)")->capture_default_str();
  ingest->add_option("--seed", ingest_seed, "Sampling seed")->capture_default_str();
  ingest->add_flag("--dedupe", ingest_dedupe, "Drop captions whose normalized text repeats");

  SynthArgs synth;
  auto* synthesize = app.add_subcommand("synthesize", "Captions JSONL -> WAVs + synthetic manifest");
  must(synthesize->add_option("--captions", synth.captions, "Captions JSONL"));
  must(synthesize->add_option("--out-dir", synth.out_dir, "Output directory"));
  synthesize->add_option("--backend", synth.backend, "mock or http")->capture_default_str();
  synthesize->add_option("--endpoint", synth.endpoint, "Generation service URL")->envname("SYNTHCAP_ENDPOINT");
  synthesize->add_option("--n", synth.n, "Number of captions to synthesize (0 = all)")->capture_default_str();
  synthesize->add_option("--duration", synth.duration, "Clip duration in seconds")->capture_default_str();
  synthesize->add_option("--seed", synth.seed, "Selection and generation seed")->capture_default_str();
  synthesize->add_option("--concurrency", synth.concurrency, "Requests in flight")->capture_default_str();
  synthesize->add_option("--timeout", synth.timeout, "Per-request timeout in seconds")->capture_default_str();
  synthesize->add_option("--sample-rate", synth.sample_rate, "Expected sample rate")->capture_default_str();
  synthesize->add_flag("--dedupe", synth.dedupe, "Drop captions whose normalized text repeats");

  std::string serve_host = "127.0.0.1";
  int serve_port = 8080, serve_rate = 16000;
  auto* serve = app.add_subcommand("serve-mock", "Serve the mock generator over HTTP");
  serve->add_option("--host", serve_host, "Bind address")->capture_default_str();
  serve->add_option("--port", serve_port, "Port")->capture_default_str();
  serve->add_option("--sample-rate", serve_rate, "Output sample rate")->capture_default_str();

  std::string bm_gt, bm_syn, bm_out;
  double bm_pct = 100.0;
  uint64_t bm_seed = 0;
  auto* build = app.add_subcommand("build-manifest", "Union of a gt subset and synthetic pairs");
  must(build->add_option("--gt", bm_gt, "Ground-truth manifest"));
  build->add_option("--syn", bm_syn, "Synthetic manifest (optional)");
  must(build->add_option("--out", bm_out, "Output manifest"));
  build->add_option("--gt-percent", bm_pct, "Percentage of gt pairs kept")->capture_default_str();
  build->add_option("--seed", bm_seed, "Subset seed")->capture_default_str();

  std::string ex_manifest, ex_out;
  int ex_workers = 1;
  auto* extract = app.add_subcommand("extract-features", "WAVs -> cached log-mel features");
  must(extract->add_option("--manifest", ex_manifest, "Manifest"));
  must(extract->add_option("--out-dir", ex_out, "Feature directory"));
  extract->add_option("--workers", ex_workers, "Worker threads")->capture_default_str();

  std::string tr_train, tr_val, tr_features, tr_out;
  uint64_t tr_seed = 0;
  bool tr_resume = false;
  ModelFlags tr_flags;
  auto* train = app.add_subcommand("train", "Train the captioning model");
  must(train->add_option("--train", tr_train, "Training manifest"));
  must(train->add_option("--val", tr_val, "Validation manifest"));
  must(train->add_option("--features", tr_features, "Feature directory"));
  must(train->add_option("--out-dir", tr_out, "Run directory"));
  train->add_option("--seed", tr_seed, "Training seed")->capture_default_str();
  train->add_flag("--resume", tr_resume, "Continue from checkpoints/last.ckpt");
  tr_flags.add(*train);

  std::string pr_ckpt, pr_vocab, pr_manifest, pr_features, pr_out;
  int pr_beam = 0;
  auto* predict = app.add_subcommand("predict", "Caption every pair of a manifest");
  must(predict->add_option("--checkpoint", pr_ckpt, "Checkpoint"));
  must(predict->add_option("--vocab", pr_vocab, "Vocabulary file"));
  must(predict->add_option("--manifest", pr_manifest, "Manifest"));
  must(predict->add_option("--features", pr_features, "Feature directory"));
  must(predict->add_option("--out", pr_out, "Predictions JSONL"));
  predict->add_option("--beam", pr_beam, "Beam width (0 = greedy)")->capture_default_str();

  std::string ev_preds, ev_manifest, ev_out, ev_name = "model";
  double ev_penalty = metrics::kDefaultFluencyPenalty;
  auto* evaluate = app.add_subcommand("evaluate", "Score predictions against references");
  must(evaluate->add_option("--predictions", ev_preds, "Predictions JSONL"));
  must(evaluate->add_option("--manifest", ev_manifest, "Reference manifest"));
  must(evaluate->add_option("--out", ev_out, "Machine report (JSON); markdown goes next to it"));
  evaluate->add_option("--name", ev_name, "Model name in the report")->capture_default_str();
  evaluate->add_option("--fluency-penalty", ev_penalty, "SPIDEr-FL penalty coefficient")->capture_default_str();

  AblateArgs ab;
  auto* ablate = app.add_subcommand("ablate", "Gt percentage x synthetic data grid");
  must(ablate->add_option("--gt", ab.gt, "Ground-truth training manifest"));
  must(ablate->add_option("--syn", ab.syn, "Synthetic manifest"));
  must(ablate->add_option("--val", ab.val, "Validation manifest"));
  must(ablate->add_option("--eval", ab.eval, "Evaluation manifest"));
  must(ablate->add_option("--features", ab.features, "Feature directory"));
  must(ablate->add_option("--out-dir", ab.out_dir, "Output directory"));
  ablate->add_option("--percent", ab.percents, "Comma-separated gt percentages")->capture_default_str();
  ablate->add_option("--parallel", ab.parallel, "Cells trained concurrently")->capture_default_str();
  ablate->add_option("--beam", ab.beam, "Beam width for evaluation (0 = greedy)")->capture_default_str();
  ablate->add_option("--seed", ab.seed, "Base seed")->capture_default_str();
  ab.flags.add(*ablate);

  std::vector<std::string> rp_inputs;
  std::string rp_layout = "table2", rp_out;
  auto* report = app.add_subcommand("report", "Render machine reports");
  must(report->add_option("--reports", rp_inputs, "Report JSON files"));
  report->add_option("--layout", rp_layout, "table2, table4 or json")->capture_default_str();
  report->add_option("--out", rp_out, "Output file (default stdout)");

  MockDataArgs md;
  auto* mock = app.add_subcommand("mock-data", "Write a mock world: COCO prompts and gt clips");
  must(mock->add_option("--out-dir", md.out_dir, "Output directory"));
  mock->add_option("--seed", md.seed, "World seed")->capture_default_str();
  mock->add_option("--train", md.train, "Gt training clips")->capture_default_str();
  mock->add_option("--val", md.val, "Validation clips")->capture_default_str();
  mock->add_option("--eval", md.eval, "Evaluation clips")->capture_default_str();
  mock->add_option("--coco", md.coco, "COCO-style prompts")->capture_default_str();
  mock->add_option("--duration", md.duration, "Clip duration in seconds")->capture_default_str();
  mock->add_option("--workers", md.workers, "Worker threads")->capture_default_str();

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    for (CLI::App* sub : app.get_subcommands()) {
      if (dynamic_cast<const CLI::CallForHelp*>(&e)) out << sub->help();
    }
    err << "error[usage]: " << e.what() << "\n";
    return exit_code(ErrorClass::kUsage);
  }

  Ctx ctx{out, err, force};
  try {
    CLI::App* sub = app.get_subcommands().front();
    Settings settings;
    settings.load(config_path);
    settings.apply(*sub);
    const auto own = sub->get_options();
    for (const CLI::Option* opt : required) {
      if (std::find(own.begin(), own.end(), opt) == own.end()) continue;
      if (opt->count() == 0 && opt->results().empty()) {
        throw UsageError(opt->get_name() + " is required (flag or config field \"" + opt->get_single_name() + "\")");
      }
    }
    const json eff = Settings::effective(*sub);
    if (sub == ingest) {
      cmd_ingest(ctx, eff, coco, captions_out, ingest_n, ingest_seed, ingest_dedupe);
    } else if (sub == synthesize) {
      cmd_synthesize(ctx, eff, synth);
    } else if (sub == serve) {
      tta::MockGenerationServer server(serve_rate);
      out << "serving mock generator on " << serve_host << ":" << serve_port << std::endl;
      server.listen(serve_host, serve_port);
    } else if (sub == build) {
      cmd_build_manifest(ctx, eff, bm_gt, bm_syn, bm_out, bm_pct, bm_seed);
    } else if (sub == extract) {
      cmd_extract(ctx, eff, ex_manifest, ex_out, ex_workers);
    } else if (sub == train) {
      cmd_train(ctx, eff, tr_train, tr_val, tr_features, tr_out, tr_flags, tr_seed, tr_resume);
    } else if (sub == predict) {
      cmd_predict(ctx, eff, pr_ckpt, pr_vocab, pr_manifest, pr_features, pr_out, pr_beam);
    } else if (sub == evaluate) {
      cmd_evaluate(ctx, eff, ev_preds, ev_manifest, ev_out, ev_name, ev_penalty);
    } else if (sub == ablate) {
      cmd_ablate(ctx, eff, ab);
    } else if (sub == report) {
      cmd_report(ctx, rp_inputs, rp_layout, rp_out);
    } else if (sub == mock) {
      cmd_mock_data(ctx, eff, md);
    }
  } catch (const Error& e) {
    err << "error[" << error_class_name(e.error_class()) << "]: " << e.what() << "\n";
    return exit_code(e.error_class());
  } catch (const CLI::ParseError& e) {
    err << "error[usage]: " << e.what() << "\n";
    return exit_code(ErrorClass::kUsage);
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error[io]: " << e.what() << "\n";
    return exit_code(ErrorClass::kIo);
  }
  return 0;
}

}  // namespace synthcap::cli
