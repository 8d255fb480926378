// Copyright 2026 The synthcap Authors
// SPDX-License-Identifier: Apache-2.0

#include "synthcap/tta.hpp"

#include <httplib.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <numbers>
#include <thread>

#include "synthcap/corpus.hpp"
#include "synthcap/error.hpp"
#include "synthcap/hash.hpp"
#include "synthcap/io.hpp"
#include "synthcap/rng.hpp"

namespace synthcap::tta {

using nlohmann::json;

void validate_request(const GenerationRequest& req) {
  if (!(req.duration_s > 0.0) || !std::isfinite(req.duration_s)) {
    throw UsageError("generation request duration_s must be positive");
  }
  corpus::normalize_caption(req.caption);
}

namespace {

double unit(uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

constexpr double kPi = std::numbers::pi;
constexpr double kPeak = 0.5;

// RBJ band-pass (0 dB peak gain) over white noise.
std::vector<double> noise_burst(uint64_t seed, std::size_t n, double center_hz, int sample_rate) {
  Rng rng(seed);
  const double w0 = 2.0 * kPi * center_hz / sample_rate;
  const double q = 4.0;
  const double alpha = std::sin(w0) / (2.0 * q);
  const double a0 = 1.0 + alpha;
  const double b0 = alpha / a0, b2 = -alpha / a0;
  const double a1 = -2.0 * std::cos(w0) / a0, a2 = (1.0 - alpha) / a0;
  std::vector<double> y(n);
  double x1 = 0, x2 = 0, y1 = 0, y2 = 0, peak = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = 2.0 * rng.uniform() - 1.0;
    const double v = b0 * x + b2 * x2 - a1 * y1 - a2 * y2;
    x2 = x1;
    x1 = x;
    y2 = y1;
    y1 = v;
    y[i] = v;
    peak = std::max(peak, std::fabs(v));
  }
  if (peak > 0) {
    for (auto& v : y) v /= peak;
  }
  return y;
}

}  // namespace

std::vector<MockEvent> mock_events(const GenerationRequest& req) {
  validate_request(req);
  const uint64_t seed = req.seed.value_or(0);
  const auto tokens = corpus::tokenize(corpus::normalize_caption(req.caption));
  std::vector<MockEvent> events;
  events.reserve(tokens.size());
  for (std::size_t p = 0; p < tokens.size(); ++p) {
    const auto& token = tokens[p];
    SplitMix64 identity(Fnv1a64().update(token).update_u64(seed).digest());
    MockEvent e;
    e.token = token;
    e.kind = static_cast<EventKind>(identity.next() % 3);
    e.base_hz = 100.0 + 3900.0 * unit(identity.next());
    e.length_s = 0.2 + 1.3 * unit(identity.next());
    e.noise_seed = identity.next();
    SplitMix64 placement(
        Fnv1a64().update(token).update_u64(seed).update_u32(static_cast<uint32_t>(p)).digest());
    e.onset_s = req.duration_s * unit(placement.next());
    events.push_back(std::move(e));
  }
  return events;
}

AudioClip mock_synthesize(const GenerationRequest& req, int sample_rate) {
  if (sample_rate <= 0) throw UsageError("sample rate must be positive");
  const auto events = mock_events(req);
  const auto n_total = static_cast<std::size_t>(std::llround(req.duration_s * sample_rate));
  std::vector<double> mix(n_total, 0.0);
  const double nyquist_cap = 0.45 * sample_rate;

  for (const auto& e : events) {
    const auto start = static_cast<std::size_t>(std::floor(e.onset_s * sample_rate));
    if (start >= n_total) continue;
    const auto len = std::max<std::size_t>(2, static_cast<std::size_t>(std::llround(e.length_s * sample_rate)));
    const std::size_t n = std::min(len, n_total - start);
    const double f0 = std::min(e.base_hz, nyquist_cap);
    std::vector<double> burst;
    if (e.kind == EventKind::kNoiseBurst) burst = noise_burst(e.noise_seed, n, f0, sample_rate);
    const double f1 = std::min(2.0 * f0, nyquist_cap);
    const double sweep = (f1 - f0) / (static_cast<double>(len) / sample_rate);
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / sample_rate;
      const double env = 0.5 * (1.0 - std::cos(2.0 * kPi * static_cast<double>(i) / static_cast<double>(len - 1)));
      double v = 0.0;
      switch (e.kind) {
        case EventKind::kSine:
          v = std::sin(2.0 * kPi * f0 * t);
          break;
        case EventKind::kNoiseBurst:
          v = burst[i];
          break;
        case EventKind::kChirp:
          v = std::sin(2.0 * kPi * (f0 * t + 0.5 * sweep * t * t));
          break;
      }
      mix[start + i] += env * v;
    }
  }

  double peak = 0.0;
  for (double v : mix) peak = std::max(peak, std::fabs(v));
  AudioClip clip;
  clip.sample_rate = sample_rate;
  clip.samples.resize(n_total);
  const double gain = peak > 0.0 ? kPeak / peak : 0.0;
  for (std::size_t i = 0; i < n_total; ++i) clip.samples[i] = static_cast<float>(mix[i] * gain);
  return clip;
}

// ---- wire protocol ---------------------------------------------------------

json request_to_json(const GenerationRequest& req) {
  json body = {{"caption", req.caption}, {"duration_s", req.duration_s}};
  if (req.seed) body["seed"] = *req.seed;
  return body;
}

GenerationRequest request_from_json(const json& body) {
  std::vector<std::string> errors;
  GenerationRequest req;
  if (!body.is_object()) throw ProtocolError("request body must be a JSON object");
  if (!body.contains("caption") || !body["caption"].is_string()) {
    errors.emplace_back("caption: required string");
  } else {
    req.caption = body["caption"].get<std::string>();
    if (corpus::normalize_text(req.caption).empty()) errors.emplace_back("caption: must be non-empty");
  }
  if (!body.contains("duration_s") || !body["duration_s"].is_number()) {
    errors.emplace_back("duration_s: required number");
  } else {
    req.duration_s = body["duration_s"].get<double>();
    if (!(req.duration_s > 0.0)) errors.emplace_back("duration_s: must be positive");
  }
  if (body.contains("seed") && !body["seed"].is_null()) {
    if (!body["seed"].is_number_integer()) {
      errors.emplace_back("seed: must be an integer");
    } else {
      req.seed = body["seed"].get<uint64_t>();
    }
  }
  if (!errors.empty()) {
    std::string msg = "invalid generation request:";
    for (const auto& e : errors) msg += " " + e + ";";
    throw ProtocolError(msg);
  }
  return req;
}

std::string encode_response(const AudioClip& clip) {
  json body = {{"sample_rate", clip.sample_rate}, {"format", "wav"}, {"audio_b64", io::base64_encode(wav::encode(clip))}};
  return body.dump();
}

AudioClip decode_response(std::string_view body, int expected_rate) {
  json doc;
  try {
    doc = json::parse(body.begin(), body.end());
  } catch (const json::parse_error& e) {
    throw ProtocolError(std::string("generation response is not JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("sample_rate") || !doc["sample_rate"].is_number_integer() ||
      !doc.contains("format") || !doc["format"].is_string() || !doc.contains("audio_b64") ||
      !doc["audio_b64"].is_string()) {
    throw ProtocolError("generation response does not match schema {sample_rate, format, audio_b64}");
  }
  if (doc["format"].get<std::string>() != "wav") {
    throw ProtocolError("generation response format \"" + doc["format"].get<std::string>() + "\" is not wav");
  }
  const int rate = doc["sample_rate"].get<int>();
  if (rate != expected_rate) {
    throw ProtocolError("sample-rate mismatch: service returned " + std::to_string(rate) +
                        " Hz, pipeline expects " + std::to_string(expected_rate) + " Hz");
  }
  AudioClip clip;
  try {
    clip = wav::decode(io::base64_decode(doc["audio_b64"].get<std::string>()));
  } catch (const FormatError& e) {
    throw ProtocolError(std::string("generation response audio is invalid: ") + e.what());
  }
  if (clip.sample_rate != expected_rate) {
    throw ProtocolError("sample-rate mismatch: WAV payload is " + std::to_string(clip.sample_rate) +
                        " Hz, pipeline expects " + std::to_string(expected_rate) + " Hz");
  }
  return clip;
}

// ---- client ----------------------------------------------------------------

namespace {

void configure(httplib::Client& client, double timeout_s) {
  const auto sec = static_cast<time_t>(timeout_s);
  const auto usec = static_cast<time_t>((timeout_s - static_cast<double>(sec)) * 1e6);
  client.set_connection_timeout(sec, usec);
  client.set_read_timeout(sec, usec);
  client.set_write_timeout(sec, usec);
}

AudioClip attempt_generate(const std::string& endpoint, const GenerationRequest& req,
                           const ServiceOptions& options) {
  httplib::Client client(endpoint);
  if (!client.is_valid()) throw UsageError("invalid generation endpoint \"" + endpoint + "\"");
  configure(client, options.timeout_s);
  auto res = client.Post("/v1/generate", request_to_json(req).dump(), "application/json");
  if (!res) {
    throw RetryableError("generation request to " + endpoint + " failed: " + httplib::to_string(res.error()));
  }
  if (res->status != 200) throw ServiceError(res->status, res->body);
  return decode_response(res->body, options.expected_sample_rate);
}

}  // namespace

AudioClip generate_via_service(const std::string& endpoint, const GenerationRequest& req,
                               const ServiceOptions& options) {
  validate_request(req);
  double delay = options.retry.base_delay_s;
  for (int attempt = 1;; ++attempt) {
    try {
      return attempt_generate(endpoint, req, options);
    } catch (const RetryableError&) {
      if (attempt >= options.retry.max_attempts) throw;
    }
    std::this_thread::sleep_for(std::chrono::duration<double>(delay));
    delay *= options.retry.factor;
  }
}

std::vector<AudioClip> generate_batch_via_service(const std::string& endpoint,
                                                  const std::vector<GenerationRequest>& requests,
                                                  const ServiceOptions& options) {
  std::vector<AudioClip> clips(requests.size());
  std::vector<std::exception_ptr> failures(requests.size());
  std::atomic<std::size_t> next{0};
  const auto workers = static_cast<std::size_t>(std::max(1, options.max_in_flight));
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(workers, requests.size()); ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < requests.size(); i = next++) {
        try {
          clips[i] = generate_via_service(endpoint, requests[i], options);
        } catch (...) {
          failures[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
  return clips;
}

HealthStatus check_health(const std::string& endpoint, double timeout_s) {
  httplib::Client client(endpoint);
  configure(client, timeout_s);
  auto res = client.Get("/v1/health");
  if (!res) throw RetryableError("health check failed: " + httplib::to_string(res.error()));
  if (res->status != 200) throw ServiceError(res->status, res->body);
  json doc = json::parse(res->body, nullptr, false);
  if (doc.is_discarded() || !doc.is_object() || !doc.contains("status") || !doc["status"].is_string()) {
    throw ProtocolError("health response does not match schema {status, backend}");
  }
  return {doc["status"].get<std::string>(), doc.value("backend", std::string())};
}

// ---- built-in mock server ---------------------------------------------------

struct MockGenerationServer::Impl {
  int sample_rate;
  httplib::Server server;
  std::thread thread;
};

MockGenerationServer::MockGenerationServer(int sample_rate) : impl_(std::make_unique<Impl>()) {
  impl_->sample_rate = sample_rate;
  auto& svr = impl_->server;
  svr.Get("/v1/health", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(json({{"status", "ok"}, {"backend", "mock"}}).dump(), "application/json");
  });
  svr.Post("/v1/generate", [rate = sample_rate](const httplib::Request& request, httplib::Response& res) {
    json body = json::parse(request.body, nullptr, false);
    if (body.is_discarded()) {
      res.status = 400;
      res.set_content(json({{"error", "body is not valid JSON"}}).dump(), "application/json");
      return;
    }
    GenerationRequest req;
    try {
      req = request_from_json(body);
    } catch (const ProtocolError& e) {
      res.status = 400;
      res.set_content(json({{"error", e.what()}}).dump(), "application/json");
      return;
    }
    try {
      res.set_content(encode_response(mock_synthesize(req, rate)), "application/json");
    } catch (const std::exception& e) {
      res.status = 500;
      res.set_content(json({{"error", e.what()}}).dump(), "application/json");
    }
  });
}

MockGenerationServer::~MockGenerationServer() { stop(); }

int MockGenerationServer::start(const std::string& host, int port) {
  auto& svr = impl_->server;
  int bound = port;
  if (port == 0) {
    bound = svr.bind_to_any_port(host);
  } else if (!svr.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) throw IoError("cannot bind mock server to " + host + ":" + std::to_string(port));
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void MockGenerationServer::listen(const std::string& host, int port) {
  if (!impl_->server.listen(host, port)) {
    throw IoError("cannot listen on " + host + ":" + std::to_string(port));
  }
}

void MockGenerationServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace synthcap::tta
