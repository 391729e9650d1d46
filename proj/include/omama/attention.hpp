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

// Cross-view attention: a mask's object descriptor queries the other view's
// full feature map.
//
//   tokens = LN(flatten(map)) + pos_embed[0..T)
//   q      = LN(queries)
//   out    = softmax(q W_Q (tokens W_K)^T / sqrt(d_k)) tokens W_V
//
// Single head; the layer norm parameters are shared by queries and tokens.

#include <cmath>
#include <string>
#include <vector>

#include "omama/encoder.hpp"
#include "omama/error.hpp"
#include "omama/ops.hpp"
#include "omama/tape.hpp"
#include "omama/tensor.hpp"

namespace omama {

inline constexpr double kLayerNormEps = 1e-5;

struct AttentionParams {
  Tensor w_q;        // d x d_k
  Tensor w_k;        // d x d_k
  Tensor w_v;        // d x d_k
  Tensor pos_embed;  // P x d
  Tensor ln_gamma;   // d
  Tensor ln_beta;    // d

  std::size_t dim() const { return w_q.rows(); }
  std::size_t key_dim() const { return w_q.cols(); }
  std::size_t max_tokens() const { return pos_embed.rows(); }
};

struct AttentionVars {
  Var w_q, w_k, w_v, pos_embed, ln_gamma, ln_beta;
};

inline AttentionVars bind(Tape& t, const AttentionParams& p) {
  return {t.leaf(p.w_q), t.leaf(p.w_k), t.leaf(p.w_v), t.leaf(p.pos_embed), t.leaf(p.ln_gamma), t.leaf(p.ln_beta)};
}

struct AttentionOutput {
  Var output;   // m x d_k
  Var weights;  // m x T, rows sum to 1
};

/// queries: m x d; tokens: T x d (an already flattened feature map).
inline AttentionOutput cross_attend(Tape& t, Var queries, Var tokens, const AttentionVars& p) {
  const std::size_t count = t.value(tokens).rows();
  const std::size_t capacity = t.value(p.pos_embed).rows();
  if (count > capacity) {
    throw CapacityError("context has " + std::to_string(count) + " tokens but the positional embedding holds " +
                        std::to_string(capacity));
  }
  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(t.value(p.w_k).cols()));

  const Var tok_norm = ad::layer_norm(t, tokens, p.ln_gamma, p.ln_beta, kLayerNormEps);
  const Var tok = ad::add(t, tok_norm, ad::slice_rows(t, p.pos_embed, 0, count));
  const Var q_norm = ad::layer_norm(t, queries, p.ln_gamma, p.ln_beta, kLayerNormEps);

  const Var q = ad::matmul(t, q_norm, p.w_q);
  const Var k = ad::matmul(t, tok, p.w_k);
  const Var v = ad::matmul(t, tok, p.w_v);
  const Var logits = ad::scale(t, ad::matmul(t, q, ad::transpose(t, k)), inv_sqrt_dk);
  const Var weights = ad::softmax_rows(t, logits);
  return {ad::matmul(t, weights, v), weights};
}

inline Tensor stack_rows(const std::vector<std::vector<double>>& rows, std::size_t width) {
  Tensor out({rows.size(), width});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != width) throw DimensionError("row width mismatch while stacking descriptors");
    std::copy(rows[i].begin(), rows[i].end(), out.row_span(i).begin());
  }
  return out;
}

inline std::vector<std::vector<double>> unstack_rows(const Tensor& m) {
  std::vector<std::vector<double>> out;
  for (std::size_t i = 0; i < m.rows(); ++i) out.emplace_back(m.row_span(i).begin(), m.row_span(i).end());
  return out;
}

/// List form: each query attends over an h x w x d context map.
inline std::vector<std::vector<double>> cross_attend(const std::vector<std::vector<double>>& queries,
                                                     const Tensor& context_map, const AttentionParams& params,
                                                     Tape& tape) {
  require_rank(context_map, 3, "cross_attend context");
  if (context_map.dim(2) != params.dim()) throw DimensionError("cross_attend: context width differs from W_K rows");
  const AttentionVars vars = bind(tape, params);
  const Var q = tape.leaf(stack_rows(queries, params.dim()));
  const Var tok = tape.leaf(ops::flatten_tokens(context_map));
  return unstack_rows(tape.value(cross_attend(tape, q, tok, vars).output));
}

/// Fills cross_view for the candidates (attending over the source map) and
/// the source (attending over the destination map). One parameter set
/// serves both directions.
inline void refine_descriptors(MaskDescriptor& source, std::vector<MaskDescriptor>& candidates,
                               const Tensor& src_map, const Tensor& dst_map, const AttentionParams& params,
                               Tape& tape) {
  for (const auto& c : candidates)
    if (c.object.empty()) throw StateError("refine_descriptors: candidate object descriptor unset");
  if (source.object.empty()) throw StateError("refine_descriptors: source object descriptor unset");
  if (!candidates.empty()) {
    std::vector<std::vector<double>> q;
    for (const auto& c : candidates) q.push_back(c.object);
    const auto refined = cross_attend(q, src_map, params, tape);
    for (std::size_t i = 0; i < candidates.size(); ++i) candidates[i].cross_view = refined[i];
  }
  source.cross_view = cross_attend({source.object}, dst_map, params, tape).front();
}

}  // namespace omama
