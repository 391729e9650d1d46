// Licensed under the Apache License, Version 2.0 (the "License"); you
// may not use this file except in compliance with the License.  You
// may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or
// implied.  See the License for the specific language governing
// permissions and limitations under the License.

#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "omama/error.hpp"
#include "omama/ops.hpp"
#include "omama/tensor.hpp"

namespace omama {

/// Handle to a value recorded on a Tape.
struct Var {
  std::size_t id = 0;
};

/// Reverse-mode gradient tape.
///
/// Every recorded node keeps its forward value and a closure that pushes the
/// node's incoming gradient to its inputs. backward() walks the nodes in
/// exact reverse recording order; gradients accumulate additively, so a leaf
/// used several times receives the sum of its contributions. One tape per
/// step, single-threaded.
class Tape {
 public:
  using Backward = std::function<void(Tape&, const Tensor& grad)>;

  Var leaf(Tensor value) { return push(std::move(value), nullptr); }

  Var record(Tensor value, Backward backward) { return push(std::move(value), std::move(backward)); }

  const Tensor& value(Var v) const { return nodes_.at(v.id).value; }

  /// Gradient accumulated at v by the last backward(); zeros if none reached it.
  Tensor grad(Var v) const {
    const Node& n = nodes_.at(v.id);
    return n.grad.empty() && !n.value.empty() ? Tensor(n.value.shape()) : n.grad;
  }

  void accumulate(Var v, const Tensor& g) {
    Node& n = nodes_.at(v.id);
    if (g.shape() != n.value.shape()) {
      throw DimensionError("gradient shape " + shape_str(g.shape()) + " does not match value " +
                           shape_str(n.value.shape()));
    }
    if (n.grad.empty()) {
      n.grad = g;
      return;
    }
    for (std::size_t i = 0; i < g.size(); ++i) n.grad[i] += g[i];
  }

  /// Seeds d(out)/d(out) = 1 for a single-element output and back-propagates.
  void backward(Var out) {
    if (value(out).size() != 1) throw DimensionError("backward: output must hold a single value");
    for (Node& n : nodes_) n.grad = Tensor();
    nodes_[out.id].grad = Tensor::filled(value(out).shape(), 1.0);
    for (std::size_t i = out.id + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (!n.backward || n.grad.empty()) continue;
      const Tensor g = n.grad;
      n.backward(*this, g);
    }
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    Backward backward;
  };

  Var push(Tensor value, Backward backward) {
    nodes_.push_back(Node{std::move(value), Tensor(), std::move(backward)});
    return Var{nodes_.size() - 1};
  }

  std::vector<Node> nodes_;
};

// Recorded primitives. Each mirrors a pure op in omama::ops.
namespace ad {

inline Var matmul(Tape& t, Var a, Var b) {
  return t.record(ops::matmul(t.value(a), t.value(b)), [a, b](Tape& tp, const Tensor& g) {
    auto [da, db] = ops::matmul_vjp(tp.value(a), tp.value(b), g);
    tp.accumulate(a, da);
    tp.accumulate(b, db);
  });
}

inline Var transpose(Tape& t, Var a) {
  return t.record(ops::transpose(t.value(a)),
                  [a](Tape& tp, const Tensor& g) { tp.accumulate(a, ops::transpose(g)); });
}

inline Var add(Tape& t, Var a, Var b) {
  const Tensor& x = t.value(a);
  const Tensor& y = t.value(b);
  if (x.shape() != y.shape()) {
    throw DimensionError("add: shapes differ, " + shape_str(x.shape()) + " vs " + shape_str(y.shape()));
  }
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + y[i];
  return t.record(std::move(out), [a, b](Tape& tp, const Tensor& g) {
    tp.accumulate(a, g);
    tp.accumulate(b, g);
  });
}

/// Adds a bias vector (n elements, any shape) to every row of an m x n matrix.
inline Var add_bias(Tape& t, Var x, Var bias) {
  const Tensor& xv = t.value(x);
  const Tensor& bv = t.value(bias);
  require_rank(xv, 2, "add_bias");
  if (bv.size() != xv.cols()) {
    throw DimensionError("add_bias: bias " + shape_str(bv.shape()) + " vs rows of " + shape_str(xv.shape()));
  }
  Tensor out = xv;
  for (std::size_t i = 0; i < xv.rows(); ++i)
    for (std::size_t j = 0; j < xv.cols(); ++j) out(i, j) += bv[j];
  return t.record(std::move(out), [x, bias](Tape& tp, const Tensor& g) {
    tp.accumulate(x, g);
    Tensor gb(tp.value(bias).shape());
    for (std::size_t i = 0; i < g.rows(); ++i)
      for (std::size_t j = 0; j < g.cols(); ++j) gb[j] += g(i, j);
    tp.accumulate(bias, gb);
  });
}

inline Var scale(Tape& t, Var x, double s) {
  Tensor out = t.value(x);
  for (double& v : out.data()) v *= s;
  return t.record(std::move(out), [x, s](Tape& tp, const Tensor& g) {
    Tensor gx = g;
    for (double& v : gx.data()) v *= s;
    tp.accumulate(x, gx);
  });
}

inline Var relu(Tape& t, Var x) {
  return t.record(ops::relu(t.value(x)),
                  [x](Tape& tp, const Tensor& g) { tp.accumulate(x, ops::relu_vjp(tp.value(x), g)); });
}

inline Var softmax_rows(Tape& t, Var x) {
  Tensor y = ops::softmax_rows(t.value(x));
  return t.record(y, [x, y](Tape& tp, const Tensor& g) { tp.accumulate(x, ops::softmax_rows_vjp(y, g)); });
}

inline Var layer_norm(Tape& t, Var x, Var gamma, Var beta, double eps) {
  return t.record(ops::layer_norm(t.value(x), t.value(gamma), t.value(beta), eps),
                  [x, gamma, beta, eps](Tape& tp, const Tensor& g) {
                    auto grads = ops::layer_norm_vjp(tp.value(x), tp.value(gamma), eps, g);
                    tp.accumulate(x, grads.dx);
                    tp.accumulate(gamma, grads.dgamma.reshaped(tp.value(gamma).shape()));
                    tp.accumulate(beta, grads.dbeta.reshaped(tp.value(beta).shape()));
                  });
}

/// Rows [begin, begin + count) of a matrix.
inline Var slice_rows(Tape& t, Var x, std::size_t begin, std::size_t count) {
  const Tensor& xv = t.value(x);
  require_rank(xv, 2, "slice_rows");
  if (begin + count > xv.rows()) {
    throw DimensionError("slice_rows: rows [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                         ") out of " + shape_str(xv.shape()));
  }
  const std::size_t w = xv.cols();
  Tensor out({count, w});
  std::copy_n(xv.data().begin() + static_cast<std::ptrdiff_t>(begin * w), count * w, out.data().begin());
  return t.record(std::move(out), [x, begin, count, w](Tape& tp, const Tensor& g) {
    Tensor gx(tp.value(x).shape());
    std::copy_n(g.data().begin(), count * w, gx.data().begin() + static_cast<std::ptrdiff_t>(begin * w));
    tp.accumulate(x, gx);
  });
}

/// Gathers rows by index (indices may repeat).
inline Var gather_rows(Tape& t, Var x, std::vector<std::size_t> rows) {
  const Tensor& xv = t.value(x);
  require_rank(xv, 2, "gather_rows");
  const std::size_t w = xv.cols();
  Tensor out({rows.size(), w});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= xv.rows()) throw DimensionError("gather_rows: row index out of range");
    std::copy_n(xv.row_span(rows[i]).begin(), w, out.row_span(i).begin());
  }
  return t.record(std::move(out), [x, rows = std::move(rows), w](Tape& tp, const Tensor& g) {
    Tensor gx(tp.value(x).shape());
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = 0; j < w; ++j) gx(rows[i], j) += g(i, j);
    tp.accumulate(x, gx);
  });
}

/// Horizontal concatenation of matrices with equal row counts.
inline Var concat_cols(Tape& t, const std::vector<Var>& parts) {
  if (parts.empty()) throw DimensionError("concat_cols: nothing to concatenate");
  const std::size_t m = t.value(parts[0]).rows();
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (Var p : parts) {
    const Tensor& v = t.value(p);
    require_rank(v, 2, "concat_cols");
    if (v.rows() != m) throw DimensionError("concat_cols: row counts differ");
    widths.push_back(v.cols());
    total += v.cols();
  }
  Tensor out({m, total});
  std::size_t off = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& v = t.value(parts[k]);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < widths[k]; ++j) out(i, off + j) = v(i, j);
    off += widths[k];
  }
  return t.record(std::move(out), [parts, widths, m](Tape& tp, const Tensor& g) {
    std::size_t o = 0;
    for (std::size_t k = 0; k < parts.size(); ++k) {
      Tensor gp({m, widths[k]});
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < widths[k]; ++j) gp(i, j) = g(i, o + j);
      tp.accumulate(parts[k], gp);
      o += widths[k];
    }
  });
}

/// Vertical concatenation of matrices with equal column counts.
inline Var concat_rows(Tape& t, const std::vector<Var>& parts) {
  if (parts.empty()) throw DimensionError("concat_rows: nothing to concatenate");
  const std::size_t n = t.value(parts[0]).cols();
  std::vector<std::size_t> heights;
  std::size_t total = 0;
  for (Var p : parts) {
    const Tensor& v = t.value(p);
    require_rank(v, 2, "concat_rows");
    if (v.cols() != n) throw DimensionError("concat_rows: column counts differ");
    heights.push_back(v.rows());
    total += v.rows();
  }
  Tensor out({total, n});
  auto dst = out.data().begin();
  for (Var p : parts) dst = std::copy(t.value(p).data().begin(), t.value(p).data().end(), dst);
  return t.record(std::move(out), [parts, heights, n](Tape& tp, const Tensor& g) {
    auto src = g.data().begin();
    for (std::size_t k = 0; k < parts.size(); ++k) {
      Tensor gp({heights[k], n});
      std::copy_n(src, heights[k] * n, gp.data().begin());
      src += static_cast<std::ptrdiff_t>(heights[k] * n);
      tp.accumulate(parts[k], gp);
    }
  });
}

inline Var sum(Tape& t, Var x) {
  double s = 0.0;
  for (double v : t.value(x).data()) s += v;
  return t.record(Tensor({1}, {s}), [x](Tape& tp, const Tensor& g) {
    tp.accumulate(x, Tensor::filled(tp.value(x).shape(), g[0]));
  });
}

/// Weighted sum of all entries, sum(w .* x); handy as a generic scalar probe.
inline Var dot_with(Tape& t, Var x, Tensor weights) {
  const Tensor& xv = t.value(x);
  if (weights.size() != xv.size()) throw DimensionError("dot_with: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < xv.size(); ++i) s += weights[i] * xv[i];
  return t.record(Tensor({1}, {s}), [x, weights = std::move(weights)](Tape& tp, const Tensor& g) {
    Tensor gx = weights.reshaped(tp.value(x).shape());
    for (double& v : gx.data()) v *= g[0];
    tp.accumulate(x, gx);
  });
}

}  // namespace ad
}  // namespace omama
