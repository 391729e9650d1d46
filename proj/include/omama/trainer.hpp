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

#include <cmath>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "omama/checkpoint.hpp"
#include "omama/config.hpp"
#include "omama/error.hpp"
#include "omama/head.hpp"
#include "omama/mining.hpp"
#include "omama/model.hpp"
#include "omama/pack.hpp"
#include "omama/rng.hpp"
#include "omama/tape.hpp"

namespace omama {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

inline AdamConfig adam_config(const RunConfig& c) { return {c.train.lr, c.train.beta1, c.train.beta2, c.train.eps}; }

/// Bias-corrected Adam. A step with any non-finite gradient is skipped
/// (returns false, bumps state.skipped) and leaves everything untouched.
inline bool adam_step(std::span<Tensor* const> params, std::span<const Tensor> grads, AdamState& state,
                      const AdamConfig& cfg) {
  if (params.size() != grads.size()) throw DimensionError("adam_step: parameter and gradient counts differ");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->shape() != grads[i].shape()) {
      throw DimensionError("adam_step: gradient " + shape_str(grads[i].shape()) + " for parameter " +
                           shape_str(params[i]->shape()));
    }
    if (!grads[i].all_finite()) {
      ++state.skipped;
      return false;
    }
  }
  if (state.m.empty()) {
    for (auto* p : params) {
      state.m.emplace_back(p->shape());
      state.v.emplace_back(p->shape());
    }
  }
  ++state.t;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i]->data();
    auto m = state.m[i].data();
    auto v = state.v[i].data();
    const auto g = grads[i].data();
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g[k];
      v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g[k] * g[k];
      const double mhat = m[k] / c1;
      const double vhat = v[k] / c2;
      p[k] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
  return true;
}

/// Random-access sequence of packs in manifest order.
struct Dataset {
  std::size_t size = 0;
  std::function<FeaturePack(std::size_t)> load;

  static Dataset from_files(std::vector<std::filesystem::path> files) {
    auto shared = std::make_shared<std::vector<std::filesystem::path>>(std::move(files));
    return {shared->size(), [shared](std::size_t i) { return load_pack(shared->at(i)); }};
  }
  static Dataset from_manifest(const std::filesystem::path& manifest) { return from_files(read_manifest(manifest)); }
  static Dataset from_memory(std::vector<FeaturePack> packs) {
    auto shared = std::make_shared<std::vector<FeaturePack>>(std::move(packs));
    return {shared->size(), [shared](std::size_t i) { return shared->at(i); }};
  }
};

/// Fresh parameters and optimizer state for a feature width.
inline Checkpoint initial_checkpoint(const RunConfig& cfg, std::size_t feature_dim) {
  cfg.validate();
  Checkpoint c;
  c.config = cfg;
  Rng rng(cfg.train.seed);
  c.params = init_model(resolve_dims(cfg, feature_dim), rng);
  c.params.for_each([&](const std::string&, const Tensor& t) {
    c.adam.m.emplace_back(t.shape());
    c.adam.v.emplace_back(t.shape());
  });
  c.rng_seed = cfg.mining.seed;
  return c;
}

struct StepLog {
  std::uint64_t step = 0;
  double loss = 0.0;
  double top1 = 0.0;
  bool skipped = false;
  std::string reason;
};

/// Result of one sample's contrastive batch, before the optimizer update.
struct SampleLoss {
  double loss = 0.0;
  bool top1 = false;
  std::vector<Tensor> grads;  // ModelParams::for_each order
};

/// Forward and backward pass for one pack. Throws SampleError when the
/// pack cannot form a batch.
inline SampleLoss sample_loss(const FeaturePack& pack, const ModelParams& params, const RunConfig& cfg, Rng& rng) {
  if (!pack.visible || !pack.gt_index) throw SampleError("training pack has no visible ground truth");
  const PreparedSample prep = prepare_sample(pack, cfg.encoder.context_margin);
  const auto& kept = prep.enc.kept_indices;
  const auto it = std::find(kept.begin(), kept.end(), *pack.gt_index);
  if (it == kept.end()) throw SampleError("ground-truth candidate is empty on the upsampled grid");
  const auto gt = static_cast<std::size_t>(it - kept.begin());

  std::set<std::size_t> hard;
  if (cfg.mining.strategy == "adjacent") hard = hard_negative_set(delaunay_adjacency(prep.centroids), gt);
  const NegativeBatch batch = build_negative_batch(kept.size(), gt, hard, cfg.mining.batch_size, rng);

  std::vector<std::size_t> rows{gt};
  rows.insert(rows.end(), batch.negative_indices.begin(), batch.negative_indices.end());

  Tape tape;
  const ModelVars vars = bind(tape, params);
  const ScoreGraph g = score_candidates(tape, vars, prep, rows);
  const Var loss = info_nce(tape, g.sims, 0, LossConfig{cfg.loss.temperature, cfg.mining.batch_size});
  tape.backward(loss);

  SampleLoss out;
  out.loss = tape.value(loss)[0];
  const auto sims = tape.value(g.sims).data();
  out.top1 = std::max_element(sims.begin(), sims.end()) == sims.begin();
  for (Var v : vars.all()) out.grads.push_back(tape.grad(v));
  return out;
}

struct TrainHooks {
  std::function<void(const StepLog&)> on_step;
  std::function<void(const Checkpoint&)> on_checkpoint;
  std::function<void(const std::string&)> on_warning;
};

/// Runs steps state.step+1 .. cfg.train.steps. Step k trains on pack
/// (k - 1) mod |data| with batch sampling seeded by mining.seed ^ (k - 1).
/// Skipped samples consume their step without an update.
inline Checkpoint train(const Dataset& data, Checkpoint state, const TrainHooks& hooks = {}) {
  if (data.size == 0) throw ParameterError("train: empty dataset");
  const RunConfig& cfg = state.config;
  cfg.validate();
  const AdamConfig adam = adam_config(cfg);

  auto check_skips = [&](bool force) {
    if (state.epoch_seen == 0) return;
    if (!force && state.epoch_seen < data.size) return;
    const double frac = static_cast<double>(state.epoch_skipped) / static_cast<double>(state.epoch_seen);
    if (frac > cfg.train.max_skip_fraction) {
      throw Error("training aborted: " + std::to_string(state.epoch_skipped) + " of " +
                  std::to_string(state.epoch_seen) + " samples skipped in one epoch");
    }
    if (!force) state.epoch_seen = state.epoch_skipped = 0;
  };

  while (state.step < cfg.train.steps) {
    const std::uint64_t index = state.rng_counter;
    StepLog log;
    log.step = state.step + 1;
    try {
      Rng rng(state.rng_seed ^ index);
      const FeaturePack pack = data.load(static_cast<std::size_t>(index % data.size));
      SampleLoss s = sample_loss(pack, state.params, cfg, rng);
      log.loss = s.loss;
      log.top1 = s.top1 ? 1.0 : 0.0;
      auto tensors = state.params.tensors();
      if (!adam_step(tensors, s.grads, state.adam, adam) && hooks.on_warning) {
        hooks.on_warning("step " + std::to_string(log.step) + ": non-finite gradient, update skipped");
      }
    } catch (const SampleError& e) {
      log.skipped = true;
      log.reason = e.what();
      ++state.epoch_skipped;
      if (hooks.on_warning) hooks.on_warning("step " + std::to_string(log.step) + ": sample skipped: " + e.what());
    }
    ++state.epoch_seen;
    ++state.rng_counter;
    ++state.step;
    if (hooks.on_step) hooks.on_step(log);
    check_skips(false);
    const bool last = state.step == cfg.train.steps;
    if (hooks.on_checkpoint && (last || (cfg.train.checkpoint_every && state.step % cfg.train.checkpoint_every == 0)))
      hooks.on_checkpoint(state);
  }
  check_skips(true);
  return state;
}

}  // namespace omama
