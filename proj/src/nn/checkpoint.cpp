// Copyright 2026 The synthcap Authors
// SPDX-License-Identifier: Apache-2.0

#include "synthcap/nn/checkpoint.hpp"

#include <cstdio>
#include <cstring>

#include "synthcap/io.hpp"

namespace synthcap::nn {

using nlohmann::json;

namespace {

constexpr char kMagic[12] = {'S', 'Y', 'N', 'T', 'H', 'C', 'A', 'P', 'C', 'K', 'P', 'T'};

std::string hex64(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

uint64_t parse_hex64(const std::string& s, const std::string& source) {
  if (s.size() != 16 || s.find_first_not_of("0123456789abcdef") != std::string::npos) {
    throw FormatError(source + ": malformed vocab_hash \"" + s + "\"");
  }
  return std::stoull(s, nullptr, 16);
}

void append_tensor(std::string& payload, json& tensors, const std::string& name, const Mat<float>& m) {
  tensors.push_back({{"name", name}, {"shape", {m.rows(), m.cols()}}, {"offset", payload.size()}});
  for (Eigen::Index i = 0; i < m.size(); ++i) io::put_f32(payload, m.data()[i]);
}

}  // namespace

std::string encode_checkpoint(const Checkpoint& ckpt) {
  const auto& p = ckpt.params;
  const bool has_opt = !ckpt.optimizer.m.empty();
  if (has_opt && (ckpt.optimizer.m.size() != p.size() || ckpt.optimizer.v.size() != p.size())) {
    throw UsageError("checkpoint optimizer state does not match parameter count");
  }
  std::string payload;
  json tensors = json::array();
  for (std::size_t i = 0; i < p.size(); ++i) append_tensor(payload, tensors, p.name(i), p.value(i));
  if (has_opt) {
    for (std::size_t i = 0; i < p.size(); ++i) append_tensor(payload, tensors, "optimizer.m/" + p.name(i), ckpt.optimizer.m[i]);
    for (std::size_t i = 0; i < p.size(); ++i) append_tensor(payload, tensors, "optimizer.v/" + p.name(i), ckpt.optimizer.v[i]);
  }
  json header = {{"format_version", kCheckpointVersion},
                 {"config", ckpt.config},
                 {"vocab_hash", hex64(ckpt.vocab_hash)},
                 {"tensors", std::move(tensors)},
                 {"optimizer", {{"present", has_opt}, {"step", ckpt.optimizer.step}}},
                 {"train_state", ckpt.train_state}};
  const std::string text = header.dump();

  std::string out(kMagic, sizeof kMagic);
  io::put_u32(out, kCheckpointVersion);
  io::put_u64(out, text.size());
  out += text;
  out += payload;
  return out;
}

Checkpoint decode_checkpoint(std::string_view bytes, const std::string& source) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    throw FormatError(source + ": not a synthcap checkpoint (bad magic)");
  }
  const uint32_t version = io::get_u32(bytes, 12);
  if (version != kCheckpointVersion) {
    throw FormatError(source + ": checkpoint format version " + std::to_string(version) +
                      " does not match supported version " + std::to_string(kCheckpointVersion));
  }
  if (bytes.size() < 24) throw FormatError(source + ": checkpoint truncated in header length");
  const uint64_t header_len = io::get_u64(bytes, 16);
  if (header_len > bytes.size() - 24) throw FormatError(source + ": checkpoint truncated in JSON header");
  json header;
  try {
    header = json::parse(bytes.substr(24, header_len));
  } catch (const json::exception& e) {
    throw FormatError(source + ": checkpoint header is not valid JSON: " + e.what());
  }
  const std::string_view payload = bytes.substr(24 + header_len);

  Checkpoint ckpt;
  try {
    if (header.at("format_version").get<uint32_t>() != version) {
      throw FormatError(source + ": header format_version " + header.at("format_version").dump() +
                        " disagrees with file version " + std::to_string(version));
    }
    ckpt.config = header.at("config").get<ModelConfig>();
    ckpt.vocab_hash = parse_hex64(header.at("vocab_hash").get<std::string>(), source);
    ckpt.train_state = header.value("train_state", json::object());
    const bool has_opt = header.at("optimizer").at("present").get<bool>();
    ckpt.optimizer.step = header.at("optimizer").at("step").get<uint64_t>();

    ParameterSet<float> opt_m, opt_v;
    for (const auto& t : header.at("tensors")) {
      const std::string name = t.at("name").get<std::string>();
      const auto rows = t.at("shape").at(0).get<Eigen::Index>();
      const auto cols = t.at("shape").at(1).get<Eigen::Index>();
      const auto offset = t.at("offset").get<std::size_t>();
      if (rows < 0 || cols < 0) throw FormatError(source + ": negative shape for tensor \"" + name + "\"");
      const std::size_t count = static_cast<std::size_t>(rows * cols);
      if (offset > payload.size() || count * 4 > payload.size() - offset) {
        throw FormatError(source + ": checkpoint payload truncated in tensor \"" + name + "\"");
      }
      Mat<float> m(rows, cols);
      if (count) std::memcpy(m.data(), payload.data() + offset, count * 4);
      if (name.rfind("optimizer.m/", 0) == 0) {
        opt_m.add(name.substr(12), std::move(m));
      } else if (name.rfind("optimizer.v/", 0) == 0) {
        opt_v.add(name.substr(12), std::move(m));
      } else {
        ckpt.params.add(name, std::move(m));
      }
    }
    if (has_opt) {
      for (std::size_t i = 0; i < ckpt.params.size(); ++i) {
        ckpt.optimizer.m.push_back(opt_m.at(ckpt.params.name(i)));
        ckpt.optimizer.v.push_back(opt_v.at(ckpt.params.name(i)));
      }
    }
  } catch (const json::exception& e) {
    throw FormatError(source + ": malformed checkpoint header: " + e.what());
  } catch (const UsageError& e) {
    throw FormatError(source + ": " + e.what());
  }
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  io::write_file(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(io::read_file(path), path.string());
}

}  // namespace synthcap::nn
