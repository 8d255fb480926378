// Copyright 2026 The synthcap Authors
// SPDX-License-Identifier: Apache-2.0

// Text-to-audio boundary: caption in, waveform out. Two interchangeable
// backends sit behind it: a deterministic procedural synthesizer (the "mock
// world") and any HTTP server speaking the generation protocol:
//
//   POST /v1/generate  {"caption": str, "duration_s": num, "seed": int?}
//     -> 200 {"sample_rate": int, "format": "wav", "audio_b64": str}
//   GET  /v1/health    -> 200 {"status": "ok", "backend": str}

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "synthcap/audio.hpp"

namespace synthcap::tta {

struct GenerationRequest {
  std::string caption;
  double duration_s = 10.0;
  std::optional<uint64_t> seed;
};

void validate_request(const GenerationRequest& req);

enum class EventKind { kSine = 0, kNoiseBurst = 1, kChirp = 2 };

// One sound event of the mock world. Kind, frequency, length and noise seed
// come from hash64(token || seed) and so are fixed per token; the onset also
// hashes the token position, so word order moves events in time.
struct MockEvent {
  std::string token;
  EventKind kind = EventKind::kSine;
  double onset_s = 0.0;
  double base_hz = 0.0;
  double length_s = 0.0;
  uint64_t noise_seed = 0;
};

std::vector<MockEvent> mock_events(const GenerationRequest& req);

// Sums Hann-enveloped events and peak-normalizes to 0.5. Output length is
// round(duration_s * sample_rate).
AudioClip mock_synthesize(const GenerationRequest& req, int sample_rate);

// ---- wire protocol --------------------------------------------------------

nlohmann::json request_to_json(const GenerationRequest& req);
// Throws ProtocolError listing every invalid field.
GenerationRequest request_from_json(const nlohmann::json& body);

std::string encode_response(const AudioClip& clip);
// Validates schema and that both the JSON and WAV rates equal expected_rate.
AudioClip decode_response(std::string_view body, int expected_rate);

// ---- client ---------------------------------------------------------------

struct RetryPolicy {
  int max_attempts = 3;
  double base_delay_s = 0.5;
  double factor = 2.0;
};

struct ServiceOptions {
  double timeout_s = 120.0;
  int expected_sample_rate = 16000;
  RetryPolicy retry;
  int max_in_flight = 4;
};

AudioClip generate_via_service(const std::string& endpoint, const GenerationRequest& req,
                               const ServiceOptions& options);

// Bounded-concurrency fan-out; result i corresponds to request i. The first
// failure (by request index) is rethrown after all workers finish.
std::vector<AudioClip> generate_batch_via_service(const std::string& endpoint,
                                                  const std::vector<GenerationRequest>& requests,
                                                  const ServiceOptions& options);

struct HealthStatus {
  std::string status;
  std::string backend;
};

HealthStatus check_health(const std::string& endpoint, double timeout_s = 5.0);

// ---- built-in mock server ------------------------------------------------

class MockGenerationServer {
 public:
  explicit MockGenerationServer(int sample_rate = 16000);
  ~MockGenerationServer();
  MockGenerationServer(const MockGenerationServer&) = delete;
  MockGenerationServer& operator=(const MockGenerationServer&) = delete;

  // Binds (port 0 picks a free port), serves on a background thread and
  // returns the bound port.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  // Serves on the calling thread until stop() is called elsewhere.
  void listen(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace synthcap::tta
