// Copyright 2026 The synthcap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstring>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "synthcap/nn/tape.hpp"

namespace synthcap::nn {

// Named parameter tensors in registration order.
template <typename Real>
class ParameterSet {
 public:
  void add(std::string name, Mat<Real> value) {
    if (index_.count(name)) throw UsageError("duplicate parameter name \"" + name + "\"");
    index_.emplace(name, entries_.size());
    entries_.emplace_back(std::move(name), std::move(value));
  }

  bool contains(std::string_view name) const { return index_.count(std::string(name)) != 0; }

  Mat<Real>& at(std::string_view name) { return entries_[position(name)].second; }
  const Mat<Real>& at(std::string_view name) const { return entries_[position(name)].second; }

  std::size_t position(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) throw UsageError("unknown parameter \"" + std::string(name) + "\"");
    return it->second;
  }

  std::size_t size() const { return entries_.size(); }
  const std::string& name(std::size_t i) const { return entries_[i].first; }
  Mat<Real>& value(std::size_t i) { return entries_[i].second; }
  const Mat<Real>& value(std::size_t i) const { return entries_[i].second; }

  // Total number of scalars.
  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& [_, v] : entries_) n += static_cast<std::size_t>(v.size());
    return n;
  }

  template <typename Other>
  ParameterSet<Other> cast() const {
    ParameterSet<Other> out;
    for (const auto& [name, v] : entries_) out.add(name, v.template cast<Other>());
    return out;
  }

  bool operator==(const ParameterSet& other) const {
    if (entries_.size() != other.entries_.size()) return false;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      const auto& [na, va] = entries_[i];
      const auto& [nb, vb] = other.entries_[i];
      if (na != nb || va.rows() != vb.rows() || va.cols() != vb.cols()) return false;
      if (va.size() && std::memcmp(va.data(), vb.data(), sizeof(Real) * static_cast<std::size_t>(va.size())) != 0) {
        return false;
      }
    }
    return true;
  }

 private:
  std::vector<std::pair<std::string, Mat<Real>>> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace synthcap::nn
