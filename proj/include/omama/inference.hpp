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

// Inference (argmax over candidate similarities with a visibility
// threshold) and dataset evaluation.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "omama/checkpoint.hpp"
#include "omama/config.hpp"
#include "omama/head.hpp"
#include "omama/metrics.hpp"
#include "omama/model.hpp"
#include "omama/pack.hpp"
#include "omama/trainer.hpp"

namespace omama {

struct MatchResult {
  std::optional<std::size_t> chosen_index;  // index into pack.candidates
  double similarity = 0.0;                  // best similarity
  bool visible_pred = false;
  std::vector<std::pair<std::size_t, double>> ranked;  // descending, ties by lower index
  std::string diagnostic;

  std::optional<std::size_t> best_index() const {
    return ranked.empty() ? std::nullopt : std::optional<std::size_t>(ranked.front().first);
  }
};

/// Ranks candidates (original indices `ids`) by similarity and applies the
/// visibility rule: visible iff the best similarity reaches the threshold.
inline MatchResult rank_candidates(const std::vector<std::size_t>& ids, const std::vector<double>& sims,
                                   double threshold) {
  if (ids.size() != sims.size()) throw DimensionError("rank_candidates: id and similarity counts differ");
  MatchResult r;
  for (std::size_t i = 0; i < ids.size(); ++i) r.ranked.emplace_back(ids[i], sims[i]);
  std::stable_sort(r.ranked.begin(), r.ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  if (r.ranked.empty()) {
    r.diagnostic = "no non-empty candidates";
    return r;
  }
  r.similarity = r.ranked.front().second;
  r.visible_pred = r.similarity >= threshold;
  if (r.visible_pred) r.chosen_index = r.ranked.front().first;
  return r;
}

/// Cosine similarities of candidate embeddings (rows) to a source embedding.
inline std::vector<double> latent_similarities(const Tensor& candidates, std::span<const double> source) {
  std::vector<double> out;
  for (std::size_t i = 0; i < candidates.rows(); ++i) out.push_back(cosine_sim(candidates.row_span(i), source));
  return out;
}

/// Full forward pass over every kept candidate.
inline MatchResult match(const FeaturePack& pack, const ModelParams& params, const RunConfig& cfg, double threshold) {
  const PreparedSample prep = prepare_sample(pack, cfg.encoder.context_margin);
  if (prep.enc.candidates.empty()) return rank_candidates({}, {}, threshold);
  std::vector<std::size_t> rows(prep.enc.candidates.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  Tape tape;
  const ScoreGraph g = score_candidates(tape, bind(tape, params), prep, rows);
  const auto& sims = tape.value(g.sims).vec();
  return rank_candidates(prep.enc.kept_indices, sims, threshold);
}

inline MatchResult match(const FeaturePack& pack, const Checkpoint& ckpt, double threshold) {
  return match(pack, ckpt.params, ckpt.config, threshold);
}

struct SampleRecord {
  std::size_t index = 0;
  bool visible_gt = false;
  bool visible_pred = false;
  std::optional<std::size_t> gt_index;
  std::optional<std::size_t> chosen_index;
  std::optional<std::size_t> best_index;
  double similarity = 0.0;
  bool top1_correct = false;
  double iou = 0.0;
  std::optional<double> location_error;
  std::optional<double> contour_accuracy;
  double iou_if_shown = 0.0;  // IoU of the argmax mask, for threshold sweeps
  std::string error;
};

struct SweepPoint {
  double threshold = 0.0;
  double vis_acc = 0.0;
  double iou = 0.0;
};

struct EvalReport {
  double threshold = 0.5;
  std::vector<SampleRecord> samples;
  std::size_t evaluated = 0;
  std::size_t errors = 0;
  std::size_t top1_total = 0;
  double iou = 0.0;
  double vis_acc = 0.0;
  std::optional<double> loc_err;
  std::optional<double> cont_acc;
  double top1 = 0.0;
  std::vector<SweepPoint> sweep;
};

namespace detail {
inline std::optional<double> mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}
}  // namespace detail

/// Evaluates one pack. Errors are reported in the record, not thrown.
/// Scores one prediction against the pack's ground truth.
inline SampleRecord score_prediction(const FeaturePack& pack, const MatchResult& m, const RunConfig& cfg) {
  SampleRecord rec;
  rec.visible_gt = pack.visible;
  rec.gt_index = pack.gt_index;
  rec.visible_pred = m.visible_pred;
  rec.chosen_index = m.chosen_index;
  rec.best_index = m.best_index();
  rec.similarity = m.similarity;

  const std::size_t w = pack.dest_features.dim(1) * kMaskScale, h = pack.dest_features.dim(0) * kMaskScale;
  BinaryGrid gt(w, h);
  if (pack.visible) {
    if (pack.gt_mask) {
      gt = pack.gt_mask->decode();
    } else if (pack.gt_index) {
      gt = pack.candidates[*pack.gt_index].decode();
    } else {
      throw SampleError("visible sample has no ground truth");
    }
  }
  rec.top1_correct = pack.visible && pack.gt_index && rec.best_index == pack.gt_index;
  const BinaryGrid best = rec.best_index ? pack.candidates.at(*rec.best_index).decode() : BinaryGrid(w, h);
  const BinaryGrid pred = m.visible_pred ? best : BinaryGrid(w, h);
  rec.iou = iou(pred, gt);
  rec.iou_if_shown = iou(best, gt);
  if (pack.visible && m.visible_pred) {
    rec.location_error = location_error(pred, gt);
    rec.contour_accuracy = contour_accuracy(pred, gt, cfg.eval.contour_tol);
  }
  return rec;
}

inline SampleRecord evaluate_sample(const FeaturePack& pack, const ModelParams& params, const RunConfig& cfg,
                                    double threshold) {
  try {
    return score_prediction(pack, match(pack, params, cfg, threshold), cfg);
  } catch (const Error& e) {
    SampleRecord rec;
    rec.visible_gt = pack.visible;
    rec.gt_index = pack.gt_index;
    rec.error = e.what();
    return rec;
  }
}

inline void aggregate(EvalReport& r) {
  std::vector<double> ious, vis, locs, conts, top1;
  r.evaluated = r.errors = 0;
  for (const auto& s : r.samples) {
    if (!s.error.empty()) {
      ++r.errors;
      continue;
    }
    ++r.evaluated;
    ious.push_back(s.iou);
    vis.push_back(s.visible_pred == s.visible_gt ? 1.0 : 0.0);
    if (s.location_error) locs.push_back(*s.location_error);
    if (s.contour_accuracy) conts.push_back(*s.contour_accuracy);
    if (s.visible_gt && s.gt_index) top1.push_back(s.top1_correct ? 1.0 : 0.0);
  }
  r.iou = detail::mean_of(ious).value_or(0.0);
  r.vis_acc = detail::mean_of(vis).value_or(0.0);
  r.loc_err = detail::mean_of(locs);
  r.cont_acc = detail::mean_of(conts);
  r.top1 = detail::mean_of(top1).value_or(0.0);
  r.top1_total = top1.size();
}

/// Vis.A and IoU over a threshold grid, from the stored per-sample values.
inline std::vector<SweepPoint> sweep_thresholds(const std::vector<SampleRecord>& samples, const std::vector<double>& grid) {
  std::vector<SweepPoint> out;
  for (double t : grid) {
    std::vector<double> vis, ious;
    for (const auto& s : samples) {
      if (!s.error.empty()) continue;
      const bool shown = s.best_index.has_value() && s.similarity >= t;
      vis.push_back(shown == s.visible_gt ? 1.0 : 0.0);
      ious.push_back(shown ? s.iou_if_shown : (s.visible_gt ? 0.0 : 1.0));
    }
    out.push_back({t, detail::mean_of(vis).value_or(0.0), detail::mean_of(ious).value_or(0.0)});
  }
  return out;
}

inline std::vector<double> default_sweep_grid() {
  std::vector<double> g;
  for (int i = -4; i <= 20; ++i) g.push_back(0.05 * i);
  return g;
}

inline EvalReport evaluate(const Dataset& data, const ModelParams& params, const RunConfig& cfg, double threshold,
                           bool sweep = false) {
  EvalReport r;
  r.threshold = threshold;
  for (std::size_t i = 0; i < data.size; ++i) {
    SampleRecord rec;
    try {
      rec = evaluate_sample(data.load(i), params, cfg, threshold);
    } catch (const Error& e) {
      rec.error = e.what();
    }
    rec.index = i;
    r.samples.push_back(std::move(rec));
  }
  aggregate(r);
  if (sweep) r.sweep = sweep_thresholds(r.samples, default_sweep_grid());
  return r;
}

inline nlohmann::ordered_json to_json(const EvalReport& r) {
  using J = nlohmann::ordered_json;
  auto opt = [](const auto& o) { return o ? J(*o) : J(nullptr); };
  J samples = J::array();
  for (const auto& s : r.samples) {
    J rec{{"index", s.index},
          {"visible_gt", s.visible_gt},
          {"visible_pred", s.visible_pred},
          {"gt_index", opt(s.gt_index)},
          {"chosen_index", opt(s.chosen_index)},
          {"best_index", opt(s.best_index)},
          {"similarity", s.similarity},
          {"top1_correct", s.top1_correct},
          {"iou", s.iou},
          {"loc_err", opt(s.location_error)},
          {"cont_acc", opt(s.contour_accuracy)}};
    if (!s.error.empty()) rec["error"] = s.error;
    samples.push_back(std::move(rec));
  }
  J out{{"threshold", r.threshold},
        {"aggregates",
         {{"iou", r.iou}, {"vis_acc", r.vis_acc}, {"loc_err", opt(r.loc_err)}, {"cont_acc", opt(r.cont_acc)},
          {"top1", r.top1}}},
        {"counts", {{"evaluated", r.evaluated}, {"errors", r.errors}, {"top1_samples", r.top1_total}}},
        {"samples", std::move(samples)}};
  if (!r.sweep.empty()) {
    J sw = J::array();
    for (const auto& p : r.sweep) sw.push_back({{"threshold", p.threshold}, {"vis_acc", p.vis_acc}, {"iou", p.iou}});
    out["threshold_sweep"] = std::move(sw);
  }
  return out;
}

}  // namespace omama
