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

// Matching head: rho = [cross_view ; context ; object], the shallow MLP that
// maps rho into the shared latent space, cosine similarity, and the InfoNCE
// mask matching loss.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "omama/encoder.hpp"
#include "omama/error.hpp"
#include "omama/ops.hpp"
#include "omama/tape.hpp"
#include "omama/tensor.hpp"

namespace omama {

/// Two-layer perceptron [in -> hidden -> d_f] with a ReLU in between.
struct MlpParams {
  Tensor w1;  // in x hidden
  Tensor b1;  // hidden
  Tensor w2;  // hidden x d_f
  Tensor b2;  // d_f

  std::size_t input_width() const { return w1.rows(); }
  std::size_t output_width() const { return w2.cols(); }
};

struct MlpVars {
  Var w1, b1, w2, b2;
};

inline MlpVars bind(Tape& t, const MlpParams& p) { return {t.leaf(p.w1), t.leaf(p.b1), t.leaf(p.w2), t.leaf(p.b2)}; }

struct LossConfig {
  double temperature = 0.07;
  std::size_t batch = 16;
};

/// Counts cosine similarities that hit a zero-norm input (defined as 0).
inline std::atomic<std::size_t>& zero_norm_warnings() {
  static std::atomic<std::size_t> count{0};
  return count;
}

inline std::vector<double> assemble_rho(const MaskDescriptor& desc) {
  if (!desc.cross_view) throw StateError("assemble_rho: cross-view embedding not computed");
  std::vector<double> rho;
  rho.reserve(desc.cross_view->size() + desc.context.size() + desc.object.size());
  rho.insert(rho.end(), desc.cross_view->begin(), desc.cross_view->end());
  rho.insert(rho.end(), desc.context.begin(), desc.context.end());
  rho.insert(rho.end(), desc.object.begin(), desc.object.end());
  return rho;
}

/// rows x in  ->  rows x d_f.
inline Var embed(Tape& t, Var rho, const MlpVars& p) {
  const Tensor& x = t.value(rho);
  if (x.rank() != 2 || x.cols() != t.value(p.w1).rows()) {
    throw DimensionError("embed: input " + shape_str(x.shape()) + " does not match MLP input width " +
                         std::to_string(t.value(p.w1).rows()));
  }
  const Var h = ad::relu(t, ad::add_bias(t, ad::matmul(t, rho, p.w1), p.b1));
  return ad::add_bias(t, ad::matmul(t, h, p.w2), p.b2);
}

inline std::vector<double> embed(std::span<const double> rho, const MlpParams& params, Tape& tape) {
  const MlpVars vars = bind(tape, params);
  const Var out = embed(tape, tape.leaf(Tensor::row(rho)), vars);
  const auto& v = tape.value(out).vec();
  return {v.begin(), v.end()};
}

inline double cosine_sim(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("cosine_sim: lengths differ");
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0.0 || bb == 0.0) {
    ++zero_norm_warnings();
    return 0.0;
  }
  return std::clamp(ab / (std::sqrt(aa) * std::sqrt(bb)), -1.0, 1.0);
}

/// Cosine similarity of each row of `rows` (B x f) with `ref` (1 x f);
/// output has shape {B}.
inline Var cosine_rows(Tape& t, Var rows, Var ref) {
  const Tensor& e = t.value(rows);
  const Tensor& s = t.value(ref);
  if (e.rank() != 2 || s.size() != e.cols()) throw DimensionError("cosine_rows: widths differ");
  const std::size_t b = e.rows();
  Tensor out({b});
  for (std::size_t i = 0; i < b; ++i) out[i] = cosine_sim(e.row_span(i), s.data());
  return t.record(out, [rows, ref, out](Tape& tp, const Tensor& g) {
    const Tensor& e = tp.value(rows);
    const Tensor& s = tp.value(ref);
    const std::size_t f = e.cols();
    double ss = 0.0;
    for (double v : s.data()) ss += v * v;
    const double ns = std::sqrt(ss);
    Tensor ge(e.shape()), gs(s.shape());
    for (std::size_t i = 0; i < e.rows(); ++i) {
      const auto ei = e.row_span(i);
      double ee = 0.0;
      for (double v : ei) ee += v * v;
      const double ne = std::sqrt(ee);
      if (ne == 0.0 || ns == 0.0) continue;
      // d sim / d e = s/(|e||s|) - sim e/|e|^2, symmetric for s.
      for (std::size_t j = 0; j < f; ++j) {
        ge(i, j) += g[i] * (s[j] / (ne * ns) - out[i] * ei[j] / ee);
        gs[j] += g[i] * (ei[j] / (ne * ns) - out[i] * s[j] / ss);
      }
    }
    tp.accumulate(rows, ge);
    tp.accumulate(ref, gs);
  });
}

namespace detail {
inline void check_info_nce(std::size_t n, std::size_t positive, double temperature) {
  if (!(temperature > 0.0)) throw ParameterError("info_nce: temperature must be positive");
  if (n == 0 || positive >= n) throw ParameterError("info_nce: positive index out of range");
}
}  // namespace detail

/// L = logsumexp(sims / tau) - sims[positive] / tau.
inline double info_nce(std::span<const double> sims, std::size_t positive, const LossConfig& cfg) {
  detail::check_info_nce(sims.size(), positive, cfg.temperature);
  const double mx = *std::max_element(sims.begin(), sims.end()) / cfg.temperature;
  double z = 0.0;
  for (double s : sims) z += std::exp(s / cfg.temperature - mx);
  return mx + std::log(z) - sims[positive] / cfg.temperature;
}

/// d L / d sims = (softmax(sims / tau) - onehot(positive)) / tau.
inline std::vector<double> info_nce_grad(std::span<const double> sims, std::size_t positive, const LossConfig& cfg) {
  detail::check_info_nce(sims.size(), positive, cfg.temperature);
  std::vector<double> scaled(sims.begin(), sims.end());
  for (double& v : scaled) v /= cfg.temperature;
  const Tensor p = ops::softmax_rows(Tensor::row(scaled));
  std::vector<double> g(sims.size());
  for (std::size_t i = 0; i < sims.size(); ++i)
    g[i] = ((i == positive ? p[i] - 1.0 : p[i]) / cfg.temperature);
  return g;
}

inline Var info_nce(Tape& t, Var sims, std::size_t positive, const LossConfig& cfg) {
  const auto s = t.value(sims).data();
  const double loss = info_nce(s, positive, cfg);
  return t.record(Tensor({1}, {loss}), [sims, positive, cfg](Tape& tp, const Tensor& g) {
    const auto grad = info_nce_grad(tp.value(sims).data(), positive, cfg);
    Tensor gs(tp.value(sims).shape());
    for (std::size_t i = 0; i < grad.size(); ++i) gs[i] = g[0] * grad[i];
    tp.accumulate(sims, gs);
  });
}

}  // namespace omama
