// Copyright 2026 The synthcap Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <set>

#include "synthcap/error.hpp"
#include "synthcap/hash.hpp"
#include "synthcap/io.hpp"
#include "synthcap/rng.hpp"

using namespace synthcap;

TEST_CASE("fnv1a-64 published test vectors") {
  CHECK(hash64("") == 0xcbf29ce484222325ULL);
  CHECK(hash64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(hash64("foobar") == 0x85944171f73967e8ULL);
  Fnv1a64 h;
  h.update("foo").update("bar");
  CHECK(h.digest() == hash64("foobar"));
}

TEST_CASE("rng streams are reproducible and seed-sensitive") {
  Rng a(42), b(42), c(43);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const uint64_t x = a.next_u64();
    CHECK(x == b.next_u64());
    differs |= x != c.next_u64();
  }
  CHECK(differs);
  CHECK(Rng::derive(7, {1, 2}) == Rng::derive(7, {1, 2}));
  CHECK(Rng::derive(7, {1, 2}) != Rng::derive(7, {2, 1}));
  CHECK(Rng::derive(7, {1}) != Rng::derive(8, {1}));
}

TEST_CASE("rng ranges") {
  Rng r(3);
  std::set<int64_t> seen;
  for (int i = 0; i < 2000; ++i) {
    const int64_t v = r.uniform_int(-2, 2);
    CHECK(v >= -2);
    CHECK(v <= 2);
    seen.insert(v);
    const double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(r.uniform_below(7) < 7);
  }
  CHECK(seen.size() == 5);
  CHECK_THROWS_AS(r.uniform_int(1, 0), UsageError);

  double sum = 0, sq = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    sum += z;
    sq += z * z;
  }
  CHECK(std::abs(sum / n) < 0.05);
  CHECK(std::abs(sq / n - 1.0) < 0.05);
}

TEST_CASE("base64 round trip and RFC 4648 vectors") {
  CHECK(io::base64_encode(std::string_view("")) == "");
  CHECK(io::base64_encode(std::string_view("f")) == "Zg==");
  CHECK(io::base64_encode(std::string_view("fo")) == "Zm8=");
  CHECK(io::base64_encode(std::string_view("foobar")) == "Zm9vYmFy");
  CHECK(io::base64_decode("Zm9vYg==") == "foob");
  std::string bytes;
  for (int i = 0; i < 256; ++i) bytes.push_back(static_cast<char>(i));
  CHECK(io::base64_decode(io::base64_encode(std::string_view(bytes))) == bytes);
  CHECK_THROWS(io::base64_decode("Zm9v!"));
}

TEST_CASE("little-endian scalars") {
  std::string s;
  io::put_u32(s, 0x01020304u);
  io::put_u64(s, 0x1122334455667788ULL);
  io::put_f32(s, -1.5f);
  REQUIRE(s.size() == 16);
  CHECK(static_cast<uint8_t>(s[0]) == 0x04);
  CHECK(io::get_u32(s, 0) == 0x01020304u);
  CHECK(io::get_u64(s, 4) == 0x1122334455667788ULL);
  CHECK(io::get_f32(s, 12) == -1.5f);
  CHECK_THROWS_AS(io::get_u64(s, 12), FormatError);
}

TEST_CASE("error classes map to exit codes") {
  CHECK(UsageError("x").error_class() == ErrorClass::kUsage);
  CHECK(static_cast<int>(IoError("x").error_class()) == 3);
  CHECK(static_cast<int>(ParseError("x", 4).error_class()) == 3);
  CHECK(static_cast<int>(ServiceError(500, "boom").error_class()) == 4);
  CHECK(static_cast<int>(NumericError("x").error_class()) == 5);
  CHECK(std::string(error_class_name(ErrorClass::kProtocol)) == "protocol");
  CHECK(std::string(ParseError("bad", 17).what()).find("17") != std::string::npos);
  CHECK(ServiceError(503, "busy").status() == 503);
}

TEST_CASE("missing file is an io error") {
  CHECK_THROWS_AS(io::read_file("/nonexistent/synthcap/file"), IoError);
}
