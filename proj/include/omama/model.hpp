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

// Learnable parameters and the per-sample forward graph shared by training
// and inference.

#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "omama/attention.hpp"
#include "omama/config.hpp"
#include "omama/encoder.hpp"
#include "omama/head.hpp"
#include "omama/mining.hpp"
#include "omama/pack.hpp"
#include "omama/rng.hpp"
#include "omama/tape.hpp"

namespace omama {

struct ModelDims {
  std::size_t d = 0;
  std::size_t d_k = 0;
  std::size_t max_tokens = 0;
  std::size_t hidden = 0;
  std::size_t d_f = 0;

  std::size_t rho_width() const { return d_k + 2 * d; }
  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

inline ModelDims resolve_dims(const RunConfig& cfg, std::size_t feature_dim) {
  return {feature_dim, cfg.attn.d_k == 0 ? feature_dim : cfg.attn.d_k, cfg.attn.max_tokens, cfg.head.hidden,
          cfg.head.d_f};
}

struct ModelParams {
  ModelDims dims;
  AttentionParams attn;
  MlpParams mlp;

  /// Calls fn(name, tensor) in the fixed order used by the optimizer and
  /// checkpoints.
  template <class Fn>
  void for_each(Fn&& fn) {
    visit(*this, fn);
  }
  template <class Fn>
  void for_each(Fn&& fn) const {
    visit(*this, fn);
  }

  std::vector<Tensor*> tensors() {
    std::vector<Tensor*> out;
    for_each([&](const std::string&, Tensor& t) { out.push_back(&t); });
    return out;
  }

 private:
  template <class Self, class Fn>
  static void visit(Self& s, Fn& fn) {
    fn(std::string("attn.w_q"), s.attn.w_q);
    fn(std::string("attn.w_k"), s.attn.w_k);
    fn(std::string("attn.w_v"), s.attn.w_v);
    fn(std::string("attn.pos_embed"), s.attn.pos_embed);
    fn(std::string("attn.ln_gamma"), s.attn.ln_gamma);
    fn(std::string("attn.ln_beta"), s.attn.ln_beta);
    fn(std::string("mlp.w1"), s.mlp.w1);
    fn(std::string("mlp.b1"), s.mlp.b1);
    fn(std::string("mlp.w2"), s.mlp.w2);
    fn(std::string("mlp.b2"), s.mlp.b2);
  }
};

namespace detail {
inline Tensor uniform_fan_in(std::size_t rows, std::size_t cols, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(rows));
  Tensor t({rows, cols});
  for (double& v : t.data()) v = rng.uniform(-bound, bound);
  return t;
}
}  // namespace detail

/// Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)); biases 0; layer norm
/// gamma 1, beta 0; positional embedding 0.02 * N(0, 1).
inline ModelParams init_model(const ModelDims& dims, Rng& rng) {
  ModelParams p;
  p.dims = dims;
  p.attn.w_q = detail::uniform_fan_in(dims.d, dims.d_k, rng);
  p.attn.w_k = detail::uniform_fan_in(dims.d, dims.d_k, rng);
  p.attn.w_v = detail::uniform_fan_in(dims.d, dims.d_k, rng);
  p.attn.pos_embed = Tensor({dims.max_tokens, dims.d});
  for (double& v : p.attn.pos_embed.data()) v = 0.02 * rng.normal();
  p.attn.ln_gamma = Tensor::filled({dims.d}, 1.0);
  p.attn.ln_beta = Tensor({dims.d});
  p.mlp.w1 = detail::uniform_fan_in(dims.rho_width(), dims.hidden, rng);
  p.mlp.b1 = Tensor({dims.hidden});
  p.mlp.w2 = detail::uniform_fan_in(dims.hidden, dims.d_f, rng);
  p.mlp.b2 = Tensor({dims.d_f});
  return p;
}

struct ModelVars {
  AttentionVars attn;
  MlpVars mlp;

  std::vector<Var> all() const {
    return {attn.w_q, attn.w_k, attn.w_v, attn.pos_embed, attn.ln_gamma, attn.ln_beta,
            mlp.w1,   mlp.b1,   mlp.w2,   mlp.b2};
  }
};

inline ModelVars bind(Tape& t, const ModelParams& p) { return {bind(t, p.attn), bind(t, p.mlp)}; }

/// Frozen inputs of one pack: pooled descriptors plus both views' tokens.
struct PreparedSample {
  EncodedSample enc;
  Tensor src_tokens;  // T_s x d, feature resolution
  Tensor dst_tokens;  // T_d x d
  std::vector<Point2> centroids;  // kept candidates, mask grid
};

inline PreparedSample prepare_sample(const FeaturePack& pack, double margin) {
  PreparedSample s;
  s.enc = encode_all(pack, margin);
  s.src_tokens = ops::flatten_tokens(pack.source_features);
  s.dst_tokens = ops::flatten_tokens(pack.dest_features);
  for (auto i : s.enc.kept_indices) s.centroids.push_back(mask_centroid(pack.candidates[i]));
  return s;
}

struct ScoreGraph {
  Var sims;                  // {B}
  Var source_embedding;      // 1 x d_f
  Var candidate_embeddings;  // B x d_f
  Var candidate_rho;         // B x rho
  Var source_rho;            // 1 x rho
};

/// Builds rho for the source and for candidates at `rows` (positions in
/// s.enc.candidates, repeats allowed), embeds them, and scores each
/// candidate against the source by cosine similarity.
inline ScoreGraph score_candidates(Tape& t, const ModelVars& vars, const PreparedSample& s,
                                   std::span<const std::size_t> rows) {
  const std::size_t d = s.src_tokens.cols();
  Tensor obj({rows.size(), d}), ctx({rows.size(), d});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& c = s.enc.candidates.at(rows[i]);
    std::copy(c.object.begin(), c.object.end(), obj.row_span(i).begin());
    std::copy(c.context.begin(), c.context.end(), ctx.row_span(i).begin());
  }
  const Var cand_obj = t.leaf(std::move(obj));
  const Var cand_ctx = t.leaf(std::move(ctx));
  const Var src_obj = t.leaf(Tensor::row(s.enc.source.object));
  const Var src_ctx = t.leaf(Tensor::row(s.enc.source.context));
  const Var src_tokens = t.leaf(s.src_tokens);
  const Var dst_tokens = t.leaf(s.dst_tokens);

  // Candidates look at the source view; the source looks at the destination.
  const Var cand_cross = cross_attend(t, cand_obj, src_tokens, vars.attn).output;
  const Var src_cross = cross_attend(t, src_obj, dst_tokens, vars.attn).output;

  const Var cand_rho = ad::concat_cols(t, {cand_cross, cand_ctx, cand_obj});
  const Var src_rho = ad::concat_cols(t, {src_cross, src_ctx, src_obj});
  const Var emb = embed(t, ad::concat_rows(t, {src_rho, cand_rho}), vars.mlp);
  const Var src_emb = ad::slice_rows(t, emb, 0, 1);
  const Var cand_emb = ad::slice_rows(t, emb, 1, rows.size());
  return {cosine_rows(t, cand_emb, src_emb), src_emb, cand_emb, cand_rho, src_rho};
}

}  // namespace omama
