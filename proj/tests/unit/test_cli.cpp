// Copyright 2026 The synthcap Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <json.hpp>
#include <sstream>

#include "support/eval_fixture.hpp"
#include "support/metric_oracle.hpp"
#include "synthcap/cli.hpp"
#include "synthcap/corpus.hpp"
#include "synthcap/io.hpp"
#include "synthcap/metrics/report.hpp"
#include "synthcap/tta.hpp"

using namespace synthcap;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

struct Workspace {
  fs::path root;
  explicit Workspace(const std::string& name) : root(fs::temp_directory_path() / ("synthcap_cli_" + name)) {
    fs::remove_all(root);
    fs::create_directories(root);
  }
  ~Workspace() { fs::remove_all(root); }
  std::string operator/(const std::string& rel) const { return (root / rel).string(); }
};

void require_ok(const Run& r) {
  INFO(r.err);
  REQUIRE(r.code == 0);
}

// Mock world plus synthetic clips and features for every manifest.
void small_world(const Workspace& w, std::size_t gt = 16) {
  require_ok(invoke({"mock-data", "--out-dir", w / "world", "--train", std::to_string(gt), "--val", "4", "--eval", "6",
                  "--coco", "12", "--duration", "1", "--seed", "2"}));
  require_ok(invoke({"ingest-captions", "--coco", w / "world/coco_captions.json", "--out", w / "caps/caps.jsonl"}));
  require_ok(invoke({"synthesize", "--captions", w / "caps/caps.jsonl", "--out-dir", w / "syn", "--n", "8", "--duration",
                  "1", "--seed", "2"}));
  for (const char* m : {"world/gt/train.jsonl", "world/gt/val.jsonl", "world/gt/eval.jsonl", "syn/syn.jsonl"}) {
    require_ok(invoke({"extract-features", "--manifest", w / m, "--out-dir", w / "feats"}));
  }
}

// Every file under `dir` except the config echo, which names the directory.
std::vector<std::pair<std::string, std::string>> tree_bytes(const fs::path& dir) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().filename() != "config.json") out.emplace_back(fs::relative(e.path(), dir).string(), io::read_file(e.path()));
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_CASE("usage errors exit 2 with a classed message") {
  auto r = invoke({});
  CHECK(r.code == 2);
  CHECK(r.err.rfind("error[usage]: ", 0) == 0);
  r = invoke({"synthesize", "--captions", "x", "--out-dir", "y", "--bogus"});
  CHECK(r.code == 2);
  CHECK(r.err.rfind("error[usage]: ", 0) == 0);
  r = invoke({"evaluate", "--predictions", "p.jsonl"});
  CHECK(r.code == 2);
  r = invoke({"nonsense"});
  CHECK(r.code == 2);
  r = invoke({"--help"});
  CHECK(r.code == 0);
  CHECK(r.out.find("ablate") != std::string::npos);
}

TEST_CASE("missing and malformed inputs exit 3") {
  Workspace w("io");
  auto r = invoke({"ingest-captions", "--coco", w / "absent.json", "--out", w / "c.jsonl"});
  CHECK(r.code == 3);
  CHECK(r.err.rfind("error[io]: ", 0) == 0);
  CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);
  io::write_file(w / "bad.jsonl", "{\"id\": \"x\"}\n");
  r = invoke({"build-manifest", "--gt", w / "bad.jsonl", "--out", w / "m.jsonl"});
  CHECK(r.code == 3);
  io::write_file(w / "coco.json", "{\"annotations\": [");
  r = invoke({"ingest-captions", "--coco", w / "coco.json", "--out", w / "c.jsonl"});
  CHECK(r.code == 3);
  CHECK(r.err.find("byte") != std::string::npos);
}

TEST_CASE("mock synthesis is byte-reproducible and idempotent") {
  Workspace w("synth");
  require_ok(invoke({"mock-data", "--out-dir", w / "world", "--train", "2", "--val", "2", "--eval", "2", "--coco", "10"}));
  require_ok(invoke({"ingest-captions", "--coco", w / "world/coco_captions.json", "--out", w / "caps.jsonl"}));
  for (const char* dir : {"a", "b"}) {
    require_ok(invoke({"synthesize", "--captions", w / "caps.jsonl", "--out-dir", w / dir, "--backend", "mock", "--n",
                    "3", "--seed", "7", "--duration", "1"}));
  }
  const auto a = tree_bytes(w / "a");
  CHECK(a.size() == 4);  // 3 WAVs and the manifest
  CHECK(a == tree_bytes(w / "b"));
  const auto m = dataset::read_manifest(w / "a/syn.jsonl");
  REQUIRE(m.size() == 3);
  for (const auto& p : m.pairs) {
    CHECK(p.origin == dataset::Origin::kSyn);
    CHECK(fs::exists(dataset::resolve_audio_path(w / "a/syn.jsonl", p)));
    CHECK(wav::read(dataset::resolve_audio_path(w / "a/syn.jsonl", p)).samples.size() == 16000);
  }

  auto again = invoke({"synthesize", "--captions", w / "caps.jsonl", "--out-dir", w / "a", "--n", "3", "--seed", "7",
                    "--duration", "1"});
  require_ok(again);
  CHECK(again.out.find("synthesized 0 clip(s), 3 already present") != std::string::npos);
  require_ok(invoke({"--force", "synthesize", "--captions", w / "caps.jsonl", "--out-dir", w / "a", "--n", "3", "--seed",
                  "7", "--duration", "1"}));
  CHECK(tree_bytes(w / "a") == a);
}

TEST_CASE("http backend matches the mock backend") {
  Workspace w("http");
  corpus::write_captions_jsonl(w / "caps.jsonl", {{"1", "A dog barks.", corpus::CaptionSource::kPrompt},
                                                  {"2", "A bell rings.", corpus::CaptionSource::kPrompt}});
  tta::MockGenerationServer server(16000);
  const std::string endpoint = "http://127.0.0.1:" + std::to_string(server.start());
  setenv("SYNTHCAP_ENDPOINT", endpoint.c_str(), 1);
  require_ok(invoke({"synthesize", "--captions", w / "caps.jsonl", "--out-dir", w / "http", "--backend", "http",
                  "--duration", "1", "--seed", "4"}));
  unsetenv("SYNTHCAP_ENDPOINT");
  require_ok(invoke({"synthesize", "--captions", w / "caps.jsonl", "--out-dir", w / "mock", "--duration", "1", "--seed",
                  "4"}));
  for (const char* f : {"syn.jsonl", "audio/syn-1.wav", "audio/syn-2.wav"}) {
    CHECK(io::read_file(w / (std::string("http/") + f)) == io::read_file(w / (std::string("mock/") + f)));
  }

  auto r = invoke({"synthesize", "--captions", w / "caps.jsonl", "--out-dir", w / "x", "--backend", "http"});
  CHECK(r.code == 2);

  tta::MockGenerationServer wrong_rate(22050);
  r = invoke({"synthesize", "--captions", w / "caps.jsonl", "--out-dir", w / "y", "--backend", "http", "--endpoint",
           "http://127.0.0.1:" + std::to_string(wrong_rate.start()), "--duration", "1"});
  CHECK(r.code == 4);
  CHECK(r.err.rfind("error[protocol]: ", 0) == 0);
}

TEST_CASE("config file drives options and flags override it") {
  Workspace w("config");
  std::vector<corpus::CaptionRecord> caps;
  for (int i = 0; i < 6; ++i) caps.push_back({std::to_string(i), "a bird sings " + std::to_string(i), corpus::CaptionSource::kPrompt});
  corpus::write_captions_jsonl(w / "caps.jsonl", caps);
  io::write_file(w / "run.json", json{{"seed", 5},
                                      {"synthesize", {{"captions", w / "caps.jsonl"}, {"n", 2}, {"duration", 0.5}}}}
                                     .dump());
  require_ok(invoke({"--config", w / "run.json", "synthesize", "--out-dir", w / "out", "--n", "3"}));
  const auto echo = json::parse(io::read_file(w / "out/config.json"));
  CHECK(echo["command"] == "synthesize");
  CHECK(echo["n"] == "3");
  CHECK(echo["seed"] == "5");
  CHECK(echo["duration"] == "0.5");
  CHECK(dataset::read_manifest(w / "out/syn.jsonl").size() == 3);

  io::write_file(w / "broken.json", "{");
  CHECK(invoke({"--config", w / "broken.json", "synthesize", "--out-dir", w / "o2"}).code == 3);
}

TEST_CASE("build-manifest rebases audio paths and subsets gt") {
  Workspace w("build");
  small_world(w);
  require_ok(invoke({"build-manifest", "--gt", w / "world/gt/train.jsonl", "--syn", w / "syn/syn.jsonl", "--out",
                  w / "runs/m/train.jsonl", "--gt-percent", "25", "--seed", "1"}));
  const auto m = dataset::read_manifest(w / "runs/m/train.jsonl");
  CHECK(m.size() == 4 + 8);
  std::size_t syn = 0;
  for (const auto& p : m.pairs) {
    syn += p.origin == dataset::Origin::kSyn;
    CHECK(fs::exists(dataset::resolve_audio_path(w / "runs/m/train.jsonl", p)));
  }
  CHECK(syn == 8);
  const auto first = io::read_file(w / "runs/m/train.jsonl");
  require_ok(invoke({"build-manifest", "--gt", w / "world/gt/train.jsonl", "--syn", w / "syn/syn.jsonl", "--out",
                  w / "runs/m/train.jsonl", "--gt-percent", "25", "--seed", "1"}));
  CHECK(io::read_file(w / "runs/m/train.jsonl") == first);
}

TEST_CASE("train needs features for every pair") {
  Workspace w("nofeat");
  require_ok(invoke({"mock-data", "--out-dir", w / "world", "--train", "3", "--val", "2", "--eval", "2", "--coco", "5",
                  "--duration", "1"}));
  const auto r = invoke({"train", "--train", w / "world/gt/train.jsonl", "--val", w / "world/gt/val.jsonl", "--features",
                      w / "feats", "--out-dir", w / "run"});
  CHECK(r.code == 3);
  CHECK(r.err.find("extract-features") != std::string::npos);
}

TEST_CASE("evaluate on the five-item fixture reproduces the metrics report") {
  Workspace w("eval");
  const auto m = fixture::five_items();
  dataset::write_manifest(w / "eval.jsonl", m);
  io::write_file(w / "preds.jsonl", metrics::predictions_to_jsonl(fixture::five_predictions()));
  const auto r = invoke({"evaluate", "--predictions", w / "preds.jsonl", "--manifest", w / "eval.jsonl", "--out",
                      w / "reports/fixture.json", "--name", "fixture"});
  require_ok(r);
  auto expected = metrics::evaluate(fixture::five_predictions(), m);
  expected.meta = metrics::ReportMeta{"fixture", std::nullopt, std::nullopt};
  const auto written = json::parse(io::read_file(w / "reports/fixture.json"));
  CHECK(written == metrics::report_to_json(expected));
  CHECK(r.out == metrics::render_table2({expected}));
  CHECK(io::read_file(w / "reports/fixture.md") == r.out);
  CHECK(fs::exists(w / "reports/config.json"));

  std::vector<oracle::Item> o;
  for (std::size_t i = 0; i < m.pairs.size(); ++i) {
    oracle::Item it;
    it.cand = corpus::tokenize(fixture::five_predictions()[i].caption);
    for (const auto& c : m.pairs[i].captions) it.refs.push_back(corpus::tokenize(corpus::normalize_caption(c)));
    o.push_back(it);
  }
  CHECK(std::abs(written["corpus"]["CIDEr"].get<double>() - 10 * oracle::cider(o)) < 1e-9);
  CHECK(std::abs(written["corpus"]["BLEU_4"].get<double>() - 100 * oracle::bleu(o, 4)) < 1e-9);
}

TEST_CASE("ablate runs the percentage grid") {
  Workspace w("ablate");
  small_world(w);
  const std::vector<std::string> base = {"ablate", "--gt", w / "world/gt/train.jsonl", "--syn", w / "syn/syn.jsonl",
                                         "--val", w / "world/gt/val.jsonl", "--eval", w / "world/gt/eval.jsonl",
                                         "--features", w / "feats", "--percent", "12.5,25,37.5,50", "--epochs", "2",
                                         "--d-model", "16", "--heads", "1", "--batch-size", "4", "--seed", "3"};
  auto seq = base;
  seq.insert(seq.end(), {"--out-dir", w / "seq"});
  const auto r = invoke(seq);
  require_ok(r);
  const auto reports = json::parse(io::read_file(w / "seq/reports.json"));
  REQUIRE(reports.size() == 8);
  int with_syn = 0;
  for (const auto& rep : reports) with_syn += rep["meta"]["synthetic"].get<bool>();
  CHECK(with_syn == 4);
  for (const char* cell : {"12.5_gt", "12.5_syn", "25.0_gt", "25.0_syn", "37.5_gt", "37.5_syn", "50.0_gt", "50.0_syn"}) {
    CHECK(fs::exists(w / (std::string("seq/cells/") + cell + "/report.json")));
    CHECK(fs::exists(w / (std::string("seq/cells/") + cell + "/checkpoints/best.ckpt")));
  }
  // gt subset sizes: round(16 * pct / 100)
  CHECK(dataset::read_manifest(w / "seq/cells/12.5_gt/train.jsonl").size() == 2);
  CHECK(dataset::read_manifest(w / "seq/cells/12.5_syn/train.jsonl").size() == 10);
  CHECK(dataset::read_manifest(w / "seq/cells/50.0_gt/train.jsonl").size() == 8);

  const std::string table = io::read_file(w / "seq/ablation.md");
  CHECK(table == r.out);
  for (const char* header : {"| **12.5%** |", "| **25.0%** |", "| **37.5%** |", "| **50.0%** |"}) {
    CHECK(table.find(header) != std::string::npos);
  }
  CHECK(std::count(table.begin(), table.end(), '\n') == 2 + 4 + 8);

  auto par = base;
  par.insert(par.end(), {"--out-dir", w / "par", "--parallel", "3"});
  require_ok(invoke(par));
  CHECK(io::read_file(w / "par/reports.json") == io::read_file(w / "seq/reports.json"));

  const auto rep = invoke({"report", "--reports", w / "seq/reports.json", "--layout", "table4"});
  require_ok(rep);
  CHECK(rep.out == table);
  CHECK(invoke({"ablate", "--gt", "a", "--syn", "b", "--val", "c", "--eval", "d", "--features", "e", "--out-dir",
             w / "bad", "--percent", "0,150"})
            .code == 2);
}

TEST_CASE("train, predict and evaluate chain through files") {
  Workspace w("chain");
  small_world(w, 8);
  require_ok(invoke({"train", "--train", w / "world/gt/train.jsonl", "--val", w / "world/gt/val.jsonl", "--features",
                  w / "feats", "--out-dir", w / "run", "--epochs", "2", "--d-model", "16", "--heads", "1"}));
  for (const char* f : {"run/vocab.txt", "run/metrics.jsonl", "run/config.json", "run/checkpoints/last.ckpt",
                        "run/checkpoints/best.ckpt"}) {
    CHECK(fs::exists(w / f));
  }
  const auto log = io::read_file(w / "run/metrics.jsonl");
  CHECK(std::count(log.begin(), log.end(), '\n') == 2);
  for (const char* beam : {"0", "1"}) {
    require_ok(invoke({"predict", "--checkpoint", w / "run/checkpoints/best.ckpt", "--vocab", w / "run/vocab.txt",
                    "--manifest", w / "world/gt/eval.jsonl", "--features", w / "feats", "--out",
                    w / (std::string("pred/") + beam + ".jsonl"), "--beam", beam}));
  }
  const auto greedy = io::read_file(w / "pred/0.jsonl");
  CHECK(greedy == io::read_file(w / "pred/1.jsonl"));
  CHECK(std::count(greedy.begin(), greedy.end(), '\n') == 6);

  io::write_file(w / "other_vocab.txt", "<pad>\n<sos>\n<eos>\n<unk>\nzebra\n");
  const auto bad = invoke({"predict", "--checkpoint", w / "run/checkpoints/best.ckpt", "--vocab", w / "other_vocab.txt",
                        "--manifest", w / "world/gt/eval.jsonl", "--features", w / "feats", "--out", w / "p.jsonl"});
  CHECK(bad.code == 2);
}
