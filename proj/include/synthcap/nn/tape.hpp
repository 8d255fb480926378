// Copyright 2026 The synthcap Authors
// SPDX-License-Identifier: Apache-2.0

// Minimal reverse-mode automatic differentiation over dense row-major
// matrices. A Tape records every op applied during one forward pass; calling
// backward() on a 1x1 result walks the record in reverse and accumulates
// gradients into every node that (transitively) depends on a parameter.
//
// Every op output is checked for NaN/Inf at creation time.

#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <deque>
#include <functional>
#include <string>

#include "synthcap/error.hpp"

namespace synthcap::nn {

template <typename Real>
using Mat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Real>
class Tape;

template <typename Real>
struct Var {
  Tape<Real>* tape = nullptr;
  std::size_t id = 0;

  const Mat<Real>& value() const { return tape->value(id); }
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
};

template <typename Real>
class Tape {
 public:
  using Backward = std::function<void(Tape&, std::size_t self)>;

  // With record = false no backward closures are kept; use for inference.
  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return record_; }
  std::size_t size() const { return nodes_.size(); }

  Var<Real> constant(Mat<Real> value) { return push_leaf(std::move(value), nullptr, false); }
  // Constant whose storage stays with the caller; it must outlive the tape.
  Var<Real> constant_ref(const Mat<Real>& value) { return push_leaf(Mat<Real>(), &value, false); }
  Var<Real> parameter(Mat<Real> value) { return push_leaf(std::move(value), nullptr, record_); }
  Var<Real> parameter_ref(const Mat<Real>& value) { return push_leaf(Mat<Real>(), &value, record_); }

  const Mat<Real>& value(std::size_t id) const {
    const Node& n = nodes_[id];
    return n.external ? *n.external : n.value;
  }

  bool needs_grad(std::size_t id) const { return nodes_[id].needs_grad; }

  // Gradient of the last backward() target with respect to v; zero if v
  // did not contribute.
  Mat<Real> grad(Var<Real> v) const {
    const Node& n = nodes_[v.id];
    if (n.grad.size() == 0) return Mat<Real>::Zero(value(v.id).rows(), value(v.id).cols());
    return n.grad;
  }

  // Zero-initialized on first access. Ops call this for inputs with needs_grad.
  Mat<Real>& grad_ref(std::size_t id) {
    Node& n = nodes_[id];
    if (n.grad.size() == 0) n.grad = Mat<Real>::Zero(value(id).rows(), value(id).cols());
    return n.grad;
  }

  Var<Real> push(const char* op, Mat<Real> value, std::initializer_list<Var<Real>> inputs, Backward backward) {
    bool needs = false;
    if (record_) {
      for (const auto& in : inputs) needs = needs || nodes_[in.id].needs_grad;
    }
    return push_node(op, std::move(value), needs, needs ? std::move(backward) : Backward());
  }

  // Variant for ops with a runtime-sized input list.
  Var<Real> push_many(const char* op, Mat<Real> value, const std::vector<Var<Real>>& inputs, Backward backward) {
    bool needs = false;
    if (record_) {
      for (const auto& in : inputs) needs = needs || nodes_[in.id].needs_grad;
    }
    return push_node(op, std::move(value), needs, needs ? std::move(backward) : Backward());
  }

  void backward(Var<Real> target) {
    if (!record_) throw UsageError("backward() on a tape that does not record");
    const auto& v = value(target.id);
    if (v.rows() != 1 || v.cols() != 1) throw UsageError("backward() target must be 1x1");
    for (auto& n : nodes_) n.grad.resize(0, 0);
    grad_ref(target.id).setOnes();
    for (std::size_t i = target.id + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (n.backward && n.grad.size() != 0) n.backward(*this, i);
    }
  }

 private:
  struct Node {
    Mat<Real> value;
    const Mat<Real>* external = nullptr;
    Mat<Real> grad;
    bool needs_grad = false;
    Backward backward;
  };

  Var<Real> push_leaf(Mat<Real> value, const Mat<Real>* external, bool needs) {
    Node n;
    n.value = std::move(value);
    n.external = external;
    n.needs_grad = needs;
    nodes_.push_back(std::move(n));
    return {this, nodes_.size() - 1};
  }

  Var<Real> push_node(const char* op, Mat<Real> value, bool needs, Backward backward) {
    if (!value.allFinite()) throw NumericError(std::string("non-finite value produced by ") + op);
    Node n;
    n.value = std::move(value);
    n.needs_grad = needs;
    n.backward = std::move(backward);
    nodes_.push_back(std::move(n));
    return {this, nodes_.size() - 1};
  }

  bool record_;
  std::deque<Node> nodes_;
};

}  // namespace synthcap::nn
