// Copyright 2026 The synthcap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <vector>

#include "synthcap/nn/parameters.hpp"

namespace synthcap::nn {

struct AdamWConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

template <typename Real>
struct AdamState {
  std::vector<Mat<Real>> m, v;
  uint64_t step = 0;

  static AdamState zeros_like(const ParameterSet<Real>& params) {
    AdamState s;
    for (std::size_t i = 0; i < params.size(); ++i) {
      const auto& p = params.value(i);
      s.m.push_back(Mat<Real>::Zero(p.rows(), p.cols()));
      s.v.push_back(Mat<Real>::Zero(p.rows(), p.cols()));
    }
    return s;
  }
};

// Decoupled weight decay: theta -= lr * (m_hat / (sqrt(v_hat) + eps) + wd * theta).
// grads[i] pairs with params.value(i). Checks every gradient before touching
// any parameter, so a NumericError leaves params and state untouched.
template <typename Real>
void adamw_step(ParameterSet<Real>& params, const std::vector<Mat<Real>>& grads, AdamState<Real>& state,
                const AdamWConfig& cfg) {
  if (grads.size() != params.size() || state.m.size() != params.size() || state.v.size() != params.size()) {
    throw UsageError("adamw_step: parameter, gradient and state counts differ");
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (grads[i].rows() != params.value(i).rows() || grads[i].cols() != params.value(i).cols()) {
      throw UsageError("adamw_step: gradient shape mismatch for \"" + params.name(i) + "\"");
    }
    if (!grads[i].allFinite()) throw NumericError("non-finite gradient for \"" + params.name(i) + "\"");
  }
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const Real b1 = static_cast<Real>(cfg.beta1), b2 = static_cast<Real>(cfg.beta2);
  const Real c1 = static_cast<Real>(1.0 - std::pow(cfg.beta1, t));
  const Real c2 = static_cast<Real>(1.0 - std::pow(cfg.beta2, t));
  const Real lr = static_cast<Real>(cfg.lr), eps = static_cast<Real>(cfg.eps), wd = static_cast<Real>(cfg.weight_decay);
  for (std::size_t i = 0; i < grads.size(); ++i) {
    Mat<Real>& theta = params.value(i);
    Mat<Real>& m = state.m[i];
    Mat<Real>& v = state.v[i];
    const Mat<Real>& g = grads[i];
    for (Eigen::Index k = 0; k < theta.size(); ++k) {
      const Real gk = g.data()[k];
      m.data()[k] = b1 * m.data()[k] + (Real(1) - b1) * gk;
      v.data()[k] = b2 * v.data()[k] + (Real(1) - b2) * gk * gk;
      const Real mhat = m.data()[k] / c1;
      const Real vhat = v.data()[k] / c2;
      theta.data()[k] -= lr * (mhat / (std::sqrt(vhat) + eps) + wd * theta.data()[k]);
    }
  }
}

}  // namespace synthcap::nn
