// Copyright 2026 The synthcap Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "support/model_helpers.hpp"
#include "synthcap/error.hpp"
#include "synthcap/io.hpp"
#include "synthcap/nn/checkpoint.hpp"
#include "synthcap/nn/decode.hpp"
#include "synthcap/nn/model.hpp"
#include "synthcap/nn/optim.hpp"

using namespace synthcap;
using namespace synthcap::nn;
using helpers::random_frames;
using helpers::batch_loss;
using helpers::tiny_batch;
using helpers::tiny_config;
using helpers::TinyBatch;

namespace {

// Closed form, written independently of parameter_layout().
std::size_t expected_parameter_count(int d, int m, int v, int ff, int graph_layers) {
  const std::size_t frontend = std::size_t(m) * d + d;
  const std::size_t graph = std::size_t(graph_layers) * (std::size_t(d) * d + 2 * d);
  const std::size_t enc_norm = 2 * std::size_t(d);
  const std::size_t embedding = std::size_t(v) * d;
  const std::size_t attn = 4 * (std::size_t(d) * d + d);
  const std::size_t ffn = std::size_t(d) * ff + ff + std::size_t(ff) * d + d;
  const std::size_t layer = 3 * 2 * std::size_t(d) + 2 * attn + ffn;
  const std::size_t final_norm = 2 * std::size_t(d);
  const std::size_t output = std::size_t(d) * v + v;
  return frontend + graph + enc_norm + embedding + 2 * layer + final_norm + output;
}

}  // namespace

TEST_CASE("default parameter count") {
  ModelConfig c;
  c.vocab_size = 1000;
  const auto params = init_parameters<float>(c, 1);
  CHECK(expected_parameter_count(128, 64, 1000, 512, 1) == 811624);
  CHECK(params.scalar_count() == 811624);
}

TEST_CASE("initialization is deterministic and follows the scheme") {
  ModelConfig c = tiny_config();
  const auto a = init_parameters<float>(c, 42);
  const auto b = init_parameters<float>(c, 42);
  const auto other = init_parameters<float>(c, 43);
  CHECK(a == b);
  CHECK_FALSE(a == other);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const std::string& name = a.name(i);
    const auto& v = a.value(i);
    if (name.size() > 5 && name.compare(name.size() - 5, 5, ".bias") == 0) CHECK_MESSAGE(v.isZero(0), name);
    if (name.size() > 5 && name.compare(name.size() - 5, 5, ".gain") == 0) CHECK_MESSAGE(v.isOnes(0), name);
  }
  const auto& w = a.at("frontend.weight");
  const double bound = std::sqrt(6.0 / (c.n_mels + c.d_model));
  CHECK(w.cwiseAbs().maxCoeff() <= bound);
  CHECK(w.cwiseAbs().maxCoeff() > 0.5 * bound);
}

TEST_CASE("config validation") {
  ModelConfig c = tiny_config();
  c.n_heads = 3;
  CHECK_THROWS_AS(c.validate(), UsageError);
  c = tiny_config();
  c.n_decoder_layers = 3;
  CHECK_THROWS_AS(c.validate(), UsageError);
  c = tiny_config();
  nlohmann::json j = c;
  CHECK(j.get<ModelConfig>() == c);
}

TEST_CASE("graph attention degenerate cases") {
  ModelConfig c = tiny_config();
  auto params = init_parameters<double>(c, 5);
  Rng rng(9);
  const Mat<double> h = random_frames<double>(rng, 5, c.d_model);

  SUBCASE("zero attention vectors give uniform coefficients") {
    params.at("graph.0.attn_src").setZero();
    params.at("graph.0.attn_dst").setZero();
    CaptionModel<double> model(c, params);
    Tape<double> tape(false);
    const auto p = model.bind(tape);
    Mat<double> alpha;
    const auto out = model.graph_attention(p, 0, tape.constant(h), &alpha);
    CHECK((alpha.array() - 0.2).abs().maxCoeff() < 1e-12);
    const Mat<double> z = h * params.at("graph.0.weight");
    const Eigen::RowVectorXd mean = z.colwise().mean();
    for (Eigen::Index i = 0; i < 5; ++i) {
      for (Eigen::Index k = 0; k < c.d_model; ++k) {
        const double e = mean(k) > 0 ? mean(k) : std::expm1(mean(k));
        CHECK(std::abs(out.value()(i, k) - h(i, k) - e) < 1e-12);
      }
    }
  }
  SUBCASE("single node") {
    CaptionModel<double> model(c, params);
    Tape<double> tape(false);
    const auto p = model.bind(tape);
    Mat<double> alpha;
    const Mat<double> h1 = h.topRows(1);
    const auto out = model.graph_attention(p, 0, tape.constant(h1), &alpha);
    CHECK(alpha.rows() == 1);
    CHECK(alpha(0, 0) == 1.0);
    const Mat<double> z = h1 * params.at("graph.0.weight");
    for (Eigen::Index k = 0; k < c.d_model; ++k) {
      const double e = z(0, k) > 0 ? z(0, k) : std::expm1(z(0, k));
      CHECK(std::abs(out.value()(0, k) - (e + h1(0, k))) < 1e-12);
    }
  }
  SUBCASE("coefficient rows sum to one") {
    CaptionModel<double> model(c, params);
    for (int trial = 0; trial < 20; ++trial) {
      Tape<double> tape(false);
      const auto p = model.bind(tape);
      Mat<double> alpha;
      model.graph_attention(p, 0, tape.constant(random_frames<double>(rng, 7, c.d_model)), &alpha);
      CHECK((alpha.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-6);
    }
  }
}

TEST_CASE("forward shape, causality and padding invariance") {
  ModelConfig c;
  c.vocab_size = 200;
  const auto params = init_parameters<float>(c, 3);
  CaptionModel<float> model(c, params);
  Rng rng(17);
  std::vector<Mat<float>> feats = {random_frames<float>(rng, 96, 64), random_frames<float>(rng, 96, 64)};
  std::vector<std::vector<uint8_t>> fmask(2, std::vector<uint8_t>(96, 1));
  std::vector<std::vector<int>> toks = {{1, 5, 6, 7, 8, 9, 10}, {1, 11, 12, 13, 14, 15, 16}};
  std::vector<std::vector<uint8_t>> tmask(2, std::vector<uint8_t>(7, 1));

  Tape<float> tape(false);
  const auto p = model.bind(tape);
  const auto logits = model.forward(tape, p, feats, fmask, toks, tmask);
  REQUIRE(logits.size() == 2);
  CHECK(logits[0].rows() == 7);
  CHECK(logits[0].cols() == 200);

  SUBCASE("causality") {
    auto changed = toks;
    changed[0][5] = 100;
    changed[0][6] = 150;
    Tape<float> t2(false);
    const auto p2 = model.bind(t2);
    const auto l2 = model.forward(t2, p2, feats, fmask, changed, tmask);
    for (Eigen::Index i = 0; i < 5; ++i) {
      CHECK((l2[0].value().row(i) - logits[0].value().row(i)).cwiseAbs().maxCoeff() < 1e-6);
    }
    CHECK((l2[0].value().row(5) - logits[0].value().row(5)).cwiseAbs().maxCoeff() > 1e-4);
  }
  SUBCASE("padded frames are ignored") {
    auto padded = feats;
    auto pmask = fmask;
    for (std::size_t b = 0; b < 2; ++b) {
      Mat<float> f(106, 64);
      f.topRows(96) = feats[b];
      f.bottomRows(10).setConstant(-23.0f);
      padded[b] = f;
      pmask[b].resize(106, 0);
    }
    Tape<float> t2(false);
    const auto p2 = model.bind(t2);
    const auto l2 = model.forward(t2, p2, padded, pmask, toks, tmask);
    for (std::size_t b = 0; b < 2; ++b) CHECK((l2[b].value() - logits[b].value()).cwiseAbs().maxCoeff() < 1e-5);
  }
  SUBCASE("shape and mask errors") {
    Tape<float> t2(false);
    const auto p2 = model.bind(t2);
    auto bad = fmask;
    bad[0].pop_back();
    CHECK_THROWS_AS(model.forward(t2, p2, feats, bad, toks, tmask), UsageError);
    auto holes = tmask;
    holes[0][2] = 0;
    CHECK_THROWS_AS(model.forward(t2, p2, feats, fmask, toks, holes), UsageError);
    std::vector<Mat<float>> narrow = {random_frames<float>(rng, 8, 32), random_frames<float>(rng, 8, 32)};
    std::vector<std::vector<uint8_t>> nm(2, std::vector<uint8_t>(8, 1));
    CHECK_THROWS_AS(model.forward(t2, p2, narrow, nm, toks, tmask), UsageError);
  }
}

TEST_CASE("gradient check in double precision") {
  const auto r = helpers::gradient_check(tiny_config(), 123, 1e-5);
  INFO("worst tensor: " << r.worst_tensor);
  CHECK(r.checked == init_parameters<double>(tiny_config(), 0).scalar_count());
  CHECK(r.worst < 1e-4);
}

TEST_CASE("label-smoothed cross entropy") {
  Rng rng(2);
  Tape<double> tape(false);
  const Mat<double> x = random_frames<double>(rng, 3, 200);
  const std::vector<std::vector<int>> tgt = {{4, 7, 199}};
  const std::vector<std::vector<uint8_t>> mask = {{1, 1, 1}};

  SUBCASE("eps = 0 is plain cross entropy") {
    const double got = label_smoothed_ce(std::vector{tape.constant(x)}, tgt, mask, 0.0).value()(0, 0);
    double direct = 0;
    for (int i = 0; i < 3; ++i) {
      double z = 0;
      for (int v = 0; v < 200; ++v) z += std::exp(x(i, v));
      direct += -(x(i, tgt[0][static_cast<std::size_t>(i)]) - std::log(z));
    }
    CHECK(std::abs(got - direct / 3) < 1e-7);
  }
  SUBCASE("uniform logits give ln V for every eps") {
    const Mat<double> u = Mat<double>::Constant(3, 200, 0.7);
    for (double eps : {0.0, 0.1, 0.5, 0.9}) {
      const double got = label_smoothed_ce(std::vector{tape.constant(u)}, tgt, mask, eps).value()(0, 0);
      CHECK(std::abs(got - std::log(200.0)) < 1e-12);
    }
    CHECK(std::abs(std::log(200.0) - 5.2983) < 1e-4);
  }
  SUBCASE("masked positions are excluded") {
    Mat<double> peaked = Mat<double>::Zero(3, 200);
    peaked(1, 7) = 20.0;
    const std::vector<std::vector<uint8_t>> one = {{0, 1, 0}};
    CHECK(label_smoothed_ce(std::vector{tape.constant(peaked)}, tgt, one, 0.0).value()(0, 0) < 0.01);
    const std::vector<std::vector<uint8_t>> none = {{0, 0, 0}};
    CHECK_THROWS_AS(label_smoothed_ce(std::vector{tape.constant(peaked)}, tgt, none, 0.0), UsageError);
  }
}

TEST_CASE("loss is invariant to batch order") {
  const ModelConfig c = tiny_config();
  const auto params = init_parameters<double>(c, 8);
  CaptionModel<double> model(c, params);
  Rng rng(21);
  TinyBatch b = tiny_batch(rng, c, 4, 9, 5);
  const double before = batch_loss(model, b, false, 0.1);
  auto rev = [](auto& v) { std::reverse(v.begin(), v.end()); };
  rev(b.features);
  rev(b.frame_mask);
  rev(b.inputs);
  rev(b.targets);
  rev(b.token_mask);
  CHECK(std::abs(batch_loss(model, b, false, 0.1) - before) < 1e-7);
}

TEST_CASE("non-finite activations are rejected") {
  const ModelConfig c = tiny_config();
  auto params = init_parameters<double>(c, 8);
  params.at("frontend.weight")(0, 0) = std::numeric_limits<double>::infinity();
  CaptionModel<double> model(c, params);
  Rng rng(1);
  Tape<double> tape(false);
  const auto p = model.bind(tape);
  CHECK_THROWS_AS(model.encode(tape, p, random_frames<double>(rng, 4, c.n_mels)), NumericError);
}

TEST_CASE("AdamW") {
  SUBCASE("zero gradient from fresh state is pure decay") {
    ParameterSet<double> p;
    p.add("w", Mat<double>::Constant(2, 3, 1.7));
    auto state = AdamState<double>::zeros_like(p);
    AdamWConfig cfg;
    adamw_step(p, {Mat<double>::Zero(2, 3)}, state, cfg);
    CHECK(p.at("w")(0, 0) == 1.7 - cfg.lr * (cfg.weight_decay * 1.7));
    CHECK(p.at("w")(1, 2) == doctest::Approx(1.7 * (1 - cfg.lr * cfg.weight_decay)).epsilon(1e-15));
    CHECK(state.step == 1);
  }
  SUBCASE("first step moves by about lr against the gradient sign") {
    for (double g : {3.0, -0.5, 1e-3}) {
      ParameterSet<double> p;
      p.add("w", Mat<double>::Constant(1, 1, 0.25));
      auto state = AdamState<double>::zeros_like(p);
      AdamWConfig cfg;
      cfg.weight_decay = 0.0;
      adamw_step(p, {Mat<double>::Constant(1, 1, g)}, state, cfg);
      CHECK(std::abs(p.at("w")(0, 0) - (0.25 - cfg.lr * (g > 0 ? 1 : -1))) < 1e-3 * cfg.lr);
    }
  }
  SUBCASE("non-finite gradient") {
    ParameterSet<float> p;
    p.add("w", Mat<float>::Constant(1, 2, 1.0f));
    auto state = AdamState<float>::zeros_like(p);
    Mat<float> g(1, 2);
    g << 1.0f, std::nanf("");
    CHECK_THROWS_AS(adamw_step(p, {g}, state, AdamWConfig{}), NumericError);
    CHECK(p.at("w")(0, 0) == 1.0f);
    CHECK(state.step == 0);
  }
  SUBCASE("identical runs give identical trajectories") {
    auto run = [] {
      ParameterSet<float> p;
      p.add("w", Mat<float>::Constant(3, 3, 0.5f));
      auto state = AdamState<float>::zeros_like(p);
      Rng rng(4);
      for (int s = 0; s < 50; ++s) adamw_step(p, {random_frames<float>(rng, 3, 3)}, state, AdamWConfig{});
      return p;
    };
    CHECK(run() == run());
  }
}

TEST_CASE("decoding with forced scorers") {
  SUBCASE("eos at step one gives an empty caption") {
    helpers::ForcedScorer s(10, {2});
    CHECK(greedy_decode(s, 30) == std::vector<int>{2});
    CHECK(beam_decode(s, 3, 30) == std::vector<int>{2});
  }
  SUBCASE("fixed sequence") {
    helpers::ForcedScorer s(10, {5, 6, 2});
    CHECK(greedy_decode(s, 30) == std::vector<int>{5, 6, 2});
    CHECK(beam_decode(s, 4, 30) == std::vector<int>{5, 6, 2});
  }
  SUBCASE("max_len stops unfinished hypotheses") {
    helpers::ForcedScorer s(10, {5, 6, 7, 8, 9});
    CHECK(greedy_decode(s, 3) == std::vector<int>{5, 6, 7});
    CHECK(beam_decode(s, 1, 3) == std::vector<int>{5, 6, 7});
    // A wider beam also keeps a low-probability <eos> continuation, and any
    // finished hypothesis outranks the unfinished ones.
    CHECK(beam_decode(s, 2, 3).back() == 2);
  }
}

namespace {

class TieScorer : public NextTokenScorer {
 public:
  int vocab_size() const override { return 8; }
  std::vector<double> next_log_probs(const std::vector<int>& prefix) override {
    std::vector<double> lp(8, std::log(1.0 / 8));
    if (prefix.size() > 2) lp[2] = 0.0;
    return lp;
  }
};

}  // namespace

TEST_CASE("greedy ties go to the lowest admissible index") {
  TieScorer s;
  // pad (0) and sos (1) are excluded, eos (2) is the lowest remaining.
  CHECK(greedy_decode(s, 5) == std::vector<int>{2});
}

TEST_CASE("beam width one equals greedy on random models") {
  ModelConfig c = tiny_config();
  c.vocab_size = 12;
  Rng rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    const auto params = init_parameters<float>(c, static_cast<uint64_t>(1000 + trial));
    CaptionModel<float> model(c, params);
    const Mat<float> frames = random_frames<float>(rng, 10, c.n_mels);
    ModelScorer a(model, frames), b(model, frames);
    CHECK(greedy_decode(a, c.max_len) == beam_decode(b, 1, c.max_len));
  }
}

TEST_CASE("checkpoint round trip and corruption") {
  const ModelConfig c = tiny_config();
  Checkpoint ck;
  ck.config = c;
  ck.vocab_hash = 0x0123456789abcdefULL;
  ck.params = init_parameters<float>(c, 77);
  ck.optimizer = AdamState<float>::zeros_like(ck.params);
  ck.optimizer.step = 12;
  ck.optimizer.m[0].setConstant(0.5f);
  ck.train_state = {{"epoch", 3}, {"best_spider", 12.5}};

  const std::string bytes = encode_checkpoint(ck);
  CHECK(bytes.substr(0, 12) == "SYNTHCAPCKPT");
  const Checkpoint back = decode_checkpoint(bytes);
  CHECK(back.params == ck.params);
  CHECK(back.config == ck.config);
  CHECK(back.vocab_hash == ck.vocab_hash);
  CHECK(back.optimizer.step == 12);
  CHECK(back.optimizer.m[0] == ck.optimizer.m[0]);
  CHECK(back.train_state == ck.train_state);
  CHECK(encode_checkpoint(back) == bytes);

  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(decode_checkpoint(bad_magic), FormatError);

  std::string bad_version = bytes;
  bad_version[12] = 9;
  try {
    decode_checkpoint(bad_version);
    FAIL("expected an error");
  } catch (const FormatError& e) {
    const std::string w = e.what();
    CHECK(w.find("version 9") != std::string::npos);
    CHECK(w.find("version 1") != std::string::npos);
  }
  CHECK_THROWS_AS(decode_checkpoint(bytes.substr(0, bytes.size() - 7)), FormatError);

  const auto path = std::filesystem::temp_directory_path() / "synthcap_test_ckpt" / "a.ckpt";
  save_checkpoint(ck, path);
  CHECK(load_checkpoint(path).params == ck.params);
  std::filesystem::remove_all(path.parent_path());
}
