// Copyright 2026 The synthcap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace synthcap {

// Process exit codes double as the machine-readable error class.
enum class ErrorClass : int {
  kUsage = 2,
  kIo = 3,
  kProtocol = 4,
  kTraining = 5,
};

const char* error_class_name(ErrorClass cls);

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, const std::string& what)
      : std::runtime_error(what), cls_(cls) {}
  ErrorClass error_class() const { return cls_; }

 private:
  ErrorClass cls_;
};

// Bad arguments or violated preconditions.
class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(ErrorClass::kUsage, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorClass::kIo, what) {}
};

// A document or binary file that does not follow its declared layout.
class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what) : Error(ErrorClass::kIo, what) {}
};

class ParseError : public FormatError {
 public:
  ParseError(const std::string& what, std::size_t byte_offset)
      : FormatError(what + " (at byte " + std::to_string(byte_offset) + ")"),
        offset_(byte_offset) {}
  std::size_t byte_offset() const { return offset_; }

 private:
  std::size_t offset_;
};

class ProtocolError : public Error {
 public:
  explicit ProtocolError(const std::string& what) : Error(ErrorClass::kProtocol, what) {}
};

// Timeouts and dropped connections; safe to retry.
class RetryableError : public ProtocolError {
 public:
  explicit RetryableError(const std::string& what) : ProtocolError(what) {}
};

class ServiceError : public ProtocolError {
 public:
  ServiceError(int status, std::string body)
      : ProtocolError("generation service returned HTTP " + std::to_string(status) + ": " + body),
        status_(status),
        body_(std::move(body)) {}
  int status() const { return status_; }
  const std::string& body() const { return body_; }

 private:
  int status_;
  std::string body_;
};

class TrainingError : public Error {
 public:
  explicit TrainingError(const std::string& what) : Error(ErrorClass::kTraining, what) {}
};

// Raised by tensor ops when a value leaves the finite range.
class NumericError : public TrainingError {
 public:
  explicit NumericError(const std::string& what) : TrainingError(what) {}
};

}  // namespace synthcap
