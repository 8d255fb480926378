// Copyright 2026 The synthcap Authors
// SPDX-License-Identifier: Apache-2.0

// Differentiable ops on Tape variables. Shapes are checked eagerly and a
// mismatch raises UsageError.

#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "synthcap/nn/tape.hpp"
#include "synthcap/rng.hpp"

namespace synthcap::nn::ops {

namespace detail {

inline void require(bool ok, const char* op, const std::string& what) {
  if (!ok) throw UsageError(std::string(op) + ": " + what);
}

inline std::string shape(Eigen::Index r, Eigen::Index c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

}  // namespace detail

// a * b
template <typename Real>
Var<Real> matmul(Var<Real> a, Var<Real> b) {
  detail::require(a.cols() == b.rows(), "matmul",
                  detail::shape(a.rows(), a.cols()) + " * " + detail::shape(b.rows(), b.cols()));
  Mat<Real> out = a.value() * b.value();
  return a.tape->push("matmul", std::move(out), {a, b}, [a, b](Tape<Real>& t, std::size_t self) {
    const Mat<Real>& g = t.grad_ref(self);
    if (t.needs_grad(a.id)) t.grad_ref(a.id).noalias() += g * t.value(b.id).transpose();
    if (t.needs_grad(b.id)) t.grad_ref(b.id).noalias() += t.value(a.id).transpose() * g;
  });
}

// a * b^T
template <typename Real>
Var<Real> matmul_nt(Var<Real> a, Var<Real> b) {
  detail::require(a.cols() == b.cols(), "matmul_nt",
                  detail::shape(a.rows(), a.cols()) + " * (" + detail::shape(b.rows(), b.cols()) + ")^T");
  Mat<Real> out = a.value() * b.value().transpose();
  return a.tape->push("matmul_nt", std::move(out), {a, b}, [a, b](Tape<Real>& t, std::size_t self) {
    const Mat<Real>& g = t.grad_ref(self);
    if (t.needs_grad(a.id)) t.grad_ref(a.id).noalias() += g * t.value(b.id);
    if (t.needs_grad(b.id)) t.grad_ref(b.id).noalias() += g.transpose() * t.value(a.id);
  });
}

template <typename Real>
Var<Real> add(Var<Real> a, Var<Real> b) {
  detail::require(a.rows() == b.rows() && a.cols() == b.cols(), "add",
                  detail::shape(a.rows(), a.cols()) + " + " + detail::shape(b.rows(), b.cols()));
  Mat<Real> out = a.value() + b.value();
  return a.tape->push("add", std::move(out), {a, b}, [a, b](Tape<Real>& t, std::size_t self) {
    const Mat<Real>& g = t.grad_ref(self);
    if (t.needs_grad(a.id)) t.grad_ref(a.id) += g;
    if (t.needs_grad(b.id)) t.grad_ref(b.id) += g;
  });
}

// a + broadcast(row), row is 1 x cols(a).
template <typename Real>
Var<Real> add_row(Var<Real> a, Var<Real> row) {
  detail::require(row.rows() == 1 && row.cols() == a.cols(), "add_row",
                  detail::shape(a.rows(), a.cols()) + " + " + detail::shape(row.rows(), row.cols()));
  Mat<Real> out = a.value().rowwise() + row.value().row(0);
  return a.tape->push("add_row", std::move(out), {a, row}, [a, row](Tape<Real>& t, std::size_t self) {
    const Mat<Real>& g = t.grad_ref(self);
    if (t.needs_grad(a.id)) t.grad_ref(a.id) += g;
    if (t.needs_grad(row.id)) t.grad_ref(row.id) += g.colwise().sum();
  });
}

// out(i, j) = col(i) + row(j); col is n x 1, row is 1 x m.
template <typename Real>
Var<Real> add_outer(Var<Real> col, Var<Real> row) {
  detail::require(col.cols() == 1 && row.rows() == 1, "add_outer",
                  detail::shape(col.rows(), col.cols()) + " (+) " + detail::shape(row.rows(), row.cols()));
  Mat<Real> out = col.value().replicate(1, row.cols());
  out.rowwise() += row.value().row(0);
  return col.tape->push("add_outer", std::move(out), {col, row}, [col, row](Tape<Real>& t, std::size_t self) {
    const Mat<Real>& g = t.grad_ref(self);
    if (t.needs_grad(col.id)) t.grad_ref(col.id) += g.rowwise().sum();
    if (t.needs_grad(row.id)) t.grad_ref(row.id) += g.colwise().sum();
  });
}

template <typename Real>
Var<Real> scale(Var<Real> a, Real s) {
  Mat<Real> out = a.value() * s;
  return a.tape->push("scale", std::move(out), {a}, [a, s](Tape<Real>& t, std::size_t self) {
    if (t.needs_grad(a.id)) t.grad_ref(a.id) += t.grad_ref(self) * s;
  });
}

template <typename Real>
Var<Real> relu(Var<Real> a) {
  Mat<Real> out = a.value().cwiseMax(Real(0));
  return a.tape->push("relu", std::move(out), {a}, [a](Tape<Real>& t, std::size_t self) {
    if (!t.needs_grad(a.id)) return;
    const Mat<Real>& g = t.grad_ref(self);
    t.grad_ref(a.id) += (t.value(a.id).array() > Real(0)).select(g, Real(0));
  });
}

template <typename Real>
Var<Real> leaky_relu(Var<Real> a, Real slope) {
  Mat<Real> out = (a.value().array() > Real(0)).select(a.value(), a.value() * slope);
  return a.tape->push("leaky_relu", std::move(out), {a}, [a, slope](Tape<Real>& t, std::size_t self) {
    if (!t.needs_grad(a.id)) return;
    const Mat<Real>& g = t.grad_ref(self);
    t.grad_ref(a.id) += (t.value(a.id).array() > Real(0)).select(g, g * slope);
  });
}

// ELU with alpha = 1.
template <typename Real>
Var<Real> elu(Var<Real> a) {
  Mat<Real> out = a.value().unaryExpr([](Real x) { return x > Real(0) ? x : std::expm1(x); });
  return a.tape->push("elu", std::move(out), {a}, [a](Tape<Real>& t, std::size_t self) {
    if (!t.needs_grad(a.id)) return;
    const Mat<Real>& g = t.grad_ref(self);
    const Mat<Real>& x = t.value(a.id);
    t.grad_ref(a.id).array() +=
        g.array() * x.unaryExpr([](Real v) { return v > Real(0) ? Real(1) : std::exp(v); }).array();
  });
}

template <typename Real>
Mat<Real> softmax_rows_value(const Mat<Real>& x) {
  Mat<Real> y = x.colwise() - x.rowwise().maxCoeff();
  y = y.array().exp();
  y.array().colwise() /= y.rowwise().sum().array();
  return y;
}

template <typename Real>
Var<Real> softmax_rows(Var<Real> a) {
  return a.tape->push("softmax_rows", softmax_rows_value(a.value()), {a}, [a](Tape<Real>& t, std::size_t self) {
    if (!t.needs_grad(a.id)) return;
    const Mat<Real>& g = t.grad_ref(self);
    const Mat<Real>& y = t.value(self);
    const Eigen::Matrix<Real, Eigen::Dynamic, 1> dot = (g.array() * y.array()).rowwise().sum();
    t.grad_ref(a.id).array() += y.array() * (g.colwise() - dot).array();
  });
}

// Row-wise layer normalization with learned gain and bias (both 1 x cols).
template <typename Real>
Var<Real> layer_norm(Var<Real> a, Var<Real> gain, Var<Real> bias, Real eps = Real(1e-5)) {
  const Eigen::Index n = a.cols();
  detail::require(gain.rows() == 1 && gain.cols() == n && bias.rows() == 1 && bias.cols() == n, "layer_norm",
                  "gain/bias must be 1x" + std::to_string(n));
  const Mat<Real>& x = a.value();
  Eigen::Matrix<Real, Eigen::Dynamic, 1> inv_std(x.rows());
  Mat<Real> xhat(x.rows(), n);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Real mean = x.row(i).mean();
    const Real var = (x.row(i).array() - mean).square().mean();
    inv_std(i) = Real(1) / std::sqrt(var + eps);
    xhat.row(i) = (x.row(i).array() - mean) * inv_std(i);
  }
  Mat<Real> out = (xhat.array().rowwise() * gain.value().row(0).array()).matrix();
  out.rowwise() += bias.value().row(0);
  return a.tape->push(
      "layer_norm", std::move(out), {a, gain, bias},
      [a, gain, bias, xhat = std::move(xhat), inv_std = std::move(inv_std)](Tape<Real>& t, std::size_t self) {
        const Mat<Real>& g = t.grad_ref(self);
        if (t.needs_grad(gain.id)) t.grad_ref(gain.id) += (g.array() * xhat.array()).colwise().sum().matrix();
        if (t.needs_grad(bias.id)) t.grad_ref(bias.id) += g.colwise().sum();
        if (!t.needs_grad(a.id)) return;
        const Mat<Real> dxhat = (g.array().rowwise() * t.value(gain.id).row(0).array()).matrix();
        Mat<Real>& ga = t.grad_ref(a.id);
        for (Eigen::Index i = 0; i < dxhat.rows(); ++i) {
          const Real m1 = dxhat.row(i).mean();
          const Real m2 = (dxhat.row(i).array() * xhat.row(i).array()).mean();
          ga.row(i).array() += inv_std(i) * (dxhat.row(i).array() - m1 - xhat.row(i).array() * m2);
        }
      });
}

template <typename Real>
Var<Real> slice_cols(Var<Real> a, Eigen::Index start, Eigen::Index count) {
  detail::require(start >= 0 && count >= 0 && start + count <= a.cols(), "slice_cols", "range out of bounds");
  Mat<Real> out = a.value().middleCols(start, count);
  return a.tape->push("slice_cols", std::move(out), {a}, [a, start, count](Tape<Real>& t, std::size_t self) {
    if (t.needs_grad(a.id)) t.grad_ref(a.id).middleCols(start, count) += t.grad_ref(self);
  });
}

template <typename Real>
Var<Real> concat_cols(const std::vector<Var<Real>>& parts) {
  detail::require(!parts.empty(), "concat_cols", "no inputs");
  Eigen::Index cols = 0;
  for (const auto& p : parts) {
    detail::require(p.rows() == parts[0].rows(), "concat_cols", "row counts differ");
    cols += p.cols();
  }
  Mat<Real> out(parts[0].rows(), cols);
  Eigen::Index c = 0;
  for (const auto& p : parts) {
    out.middleCols(c, p.cols()) = p.value();
    c += p.cols();
  }
  return parts[0].tape->push_many("concat_cols", std::move(out), parts, [parts](Tape<Real>& t, std::size_t self) {
    const Mat<Real>& g = t.grad_ref(self);
    Eigen::Index offset = 0;
    for (const auto& p : parts) {
      const Eigen::Index w = t.value(p.id).cols();
      if (t.needs_grad(p.id)) t.grad_ref(p.id) += g.middleCols(offset, w);
      offset += w;
    }
  });
}

// Embedding lookup: row ids[i] of table becomes row i of the output.
template <typename Real>
Var<Real> gather_rows(Var<Real> table, std::span<const int> ids) {
  std::vector<int> rows(ids.begin(), ids.end());
  Mat<Real> out(static_cast<Eigen::Index>(rows.size()), table.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    detail::require(rows[i] >= 0 && rows[i] < table.rows(), "gather_rows",
                    "index " + std::to_string(rows[i]) + " outside table of " + std::to_string(table.rows()));
    out.row(static_cast<Eigen::Index>(i)) = table.value().row(rows[i]);
  }
  return table.tape->push("gather_rows", std::move(out), {table},
                          [table, rows = std::move(rows)](Tape<Real>& t, std::size_t self) {
                            if (!t.needs_grad(table.id)) return;
                            const Mat<Real>& g = t.grad_ref(self);
                            Mat<Real>& gt = t.grad_ref(table.id);
                            for (std::size_t i = 0; i < rows.size(); ++i) {
                              gt.row(rows[i]) += g.row(static_cast<Eigen::Index>(i));
                            }
                          });
}

// Averages consecutive windows of `factor` rows; the last window may be short.
template <typename Real>
Var<Real> mean_pool_rows(Var<Real> a, int factor) {
  detail::require(factor >= 1, "mean_pool_rows", "factor must be >= 1");
  const Eigen::Index n = a.rows();
  const Eigen::Index out_rows = (n + factor - 1) / factor;
  Mat<Real> out(out_rows, a.cols());
  for (Eigen::Index r = 0; r < out_rows; ++r) {
    const Eigen::Index begin = r * factor;
    const Eigen::Index len = std::min<Eigen::Index>(factor, n - begin);
    out.row(r) = a.value().middleRows(begin, len).colwise().sum() / static_cast<Real>(len);
  }
  return a.tape->push("mean_pool_rows", std::move(out), {a}, [a, factor](Tape<Real>& t, std::size_t self) {
    if (!t.needs_grad(a.id)) return;
    const Mat<Real>& g = t.grad_ref(self);
    Mat<Real>& ga = t.grad_ref(a.id);
    const Eigen::Index n = ga.rows();
    for (Eigen::Index r = 0; r < g.rows(); ++r) {
      const Eigen::Index begin = r * factor;
      const Eigen::Index len = std::min<Eigen::Index>(factor, n - begin);
      for (Eigen::Index k = 0; k < len; ++k) ga.row(begin + k) += g.row(r) / static_cast<Real>(len);
    }
  });
}

// Inverted dropout; the keep mask comes from rng so runs are reproducible.
template <typename Real>
Var<Real> dropout(Var<Real> a, double p, Rng& rng) {
  if (p <= 0.0) return a;
  detail::require(p < 1.0, "dropout", "rate must be < 1");
  Mat<Real> mask(a.rows(), a.cols());
  const Real keep_scale = Real(1.0 / (1.0 - p));
  for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = rng.uniform() < p ? Real(0) : keep_scale;
  Mat<Real> out = a.value().cwiseProduct(mask);
  return a.tape->push("dropout", std::move(out), {a}, [a, mask = std::move(mask)](Tape<Real>& t, std::size_t self) {
    if (t.needs_grad(a.id)) t.grad_ref(a.id) += t.grad_ref(self).cwiseProduct(mask);
  });
}

// Keeps the first `rows` rows of a (prefix crop).
template <typename Real>
Var<Real> take_rows(Var<Real> a, Eigen::Index rows) {
  detail::require(rows >= 0 && rows <= a.rows(), "take_rows", "row count out of range");
  Mat<Real> out = a.value().topRows(rows);
  return a.tape->push("take_rows", std::move(out), {a}, [a, rows](Tape<Real>& t, std::size_t self) {
    if (t.needs_grad(a.id)) t.grad_ref(a.id).topRows(rows) += t.grad_ref(self);
  });
}

// Appends zero rows up to `rows` total.
template <typename Real>
Var<Real> pad_rows(Var<Real> a, Eigen::Index rows) {
  detail::require(rows >= a.rows(), "pad_rows", "target smaller than input");
  Mat<Real> out = Mat<Real>::Zero(rows, a.cols());
  out.topRows(a.rows()) = a.value();
  const Eigen::Index kept = a.rows();
  return a.tape->push("pad_rows", std::move(out), {a}, [a, kept](Tape<Real>& t, std::size_t self) {
    if (t.needs_grad(a.id)) t.grad_ref(a.id) += t.grad_ref(self).topRows(kept);
  });
}

// Sum of 1x1 variables.
template <typename Real>
Var<Real> sum_scalars(const std::vector<Var<Real>>& parts) {
  detail::require(!parts.empty(), "sum_scalars", "no inputs");
  Real total = 0;
  for (const auto& p : parts) {
    detail::require(p.rows() == 1 && p.cols() == 1, "sum_scalars", "inputs must be 1x1");
    total += p.value()(0, 0);
  }
  Mat<Real> out(1, 1);
  out(0, 0) = total;
  return parts[0].tape->push_many("sum_scalars", std::move(out), parts, [parts](Tape<Real>& t, std::size_t self) {
    const Real g = t.grad_ref(self)(0, 0);
    for (const auto& p : parts) {
      if (t.needs_grad(p.id)) t.grad_ref(p.id)(0, 0) += g;
    }
  });
}

// Sum over valid rows of the label-smoothed cross entropy
//   -sum_v q_v log softmax(logits_row)_v,  q = (1 - eps) onehot(target) + eps / V.
// Rows with mask 0 contribute nothing. Returns a 1x1 variable.
template <typename Real>
Var<Real> label_smoothed_ce_sum(Var<Real> logits, std::span<const int> targets, std::span<const uint8_t> mask,
                                Real eps) {
  const Eigen::Index rows = logits.rows(), vocab = logits.cols();
  detail::require(static_cast<Eigen::Index>(targets.size()) == rows && static_cast<Eigen::Index>(mask.size()) == rows,
                  "label_smoothed_ce", "targets/mask length must equal logits rows");
  detail::require(eps >= Real(0) && eps < Real(1), "label_smoothed_ce", "eps must lie in [0, 1)");
  std::vector<int> tgt(targets.begin(), targets.end());
  std::vector<uint8_t> valid(mask.begin(), mask.end());
  const Mat<Real>& x = logits.value();
  Mat<Real> probs(rows, vocab);
  Real total = 0;
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (!valid[static_cast<std::size_t>(i)]) continue;
    const int target = tgt[static_cast<std::size_t>(i)];
    detail::require(target >= 0 && target < vocab, "label_smoothed_ce", "target index out of range");
    const Real mx = x.row(i).maxCoeff();
    const Real lse = mx + std::log((x.row(i).array() - mx).exp().sum());
    // -sum_v q_v (x_v - lse) = lse - (1 - eps) x_t - (eps / V) sum_v x_v
    total += lse - (Real(1) - eps) * x(i, target) - eps / static_cast<Real>(vocab) * x.row(i).sum();
    probs.row(i) = (x.row(i).array() - lse).exp();
  }
  Mat<Real> out(1, 1);
  out(0, 0) = total;
  return logits.tape->push(
      "label_smoothed_ce", std::move(out), {logits},
      [logits, tgt = std::move(tgt), valid = std::move(valid), probs = std::move(probs), eps, vocab](
          Tape<Real>& t, std::size_t self) {
        if (!t.needs_grad(logits.id)) return;
        const Real g = t.grad_ref(self)(0, 0);
        Mat<Real>& gl = t.grad_ref(logits.id);
        for (Eigen::Index i = 0; i < gl.rows(); ++i) {
          if (!valid[static_cast<std::size_t>(i)]) continue;
          gl.row(i).array() += g * (probs.row(i).array() - eps / static_cast<Real>(vocab));
          gl(i, tgt[static_cast<std::size_t>(i)]) -= g * (Real(1) - eps);
        }
      });
}

}  // namespace synthcap::nn::ops
