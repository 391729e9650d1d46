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


#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "support/fixtures.hpp"

namespace {

using namespace omama;
using namespace omama::testing;

BinaryGrid cross_dilate(const BinaryGrid& g) {
  BinaryGrid out = g;
  for (std::size_t y = 0; y < g.height; ++y)
    for (std::size_t x = 0; x < g.width; ++x) {
      if (!g.at(x, y)) continue;
      if (x > 0) out.set(x - 1, y);
      if (y > 0) out.set(x, y - 1);
      if (x + 1 < g.width) out.set(x + 1, y);
      if (y + 1 < g.height) out.set(x, y + 1);
    }
  return out;
}

MatchResult oracle_predictor(const FeaturePack& p) {
  std::vector<std::size_t> ids(p.candidates.size());
  std::vector<double> sims(ids.size(), 0.0);
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
  if (p.gt_index) sims[*p.gt_index] = 1.0;
  return rank_candidates(ids, sims, 0.5);
}

TEST(Iou, Fixtures) {
  const BinaryGrid a = rect_grid(16, 16, 2, 2, 5, 5);
  EXPECT_EQ(iou(a, a), 1.0);
  EXPECT_EQ(iou(a, rect_grid(16, 16, 8, 8, 11, 11)), 0.0);
  EXPECT_EQ(iou(rect_grid(16, 16, 0, 0, 3, 3), rect_grid(16, 16, 2, 0, 5, 3)), 1.0 / 3.0);
  EXPECT_EQ(iou(BinaryGrid(4, 4), BinaryGrid(4, 4)), 1.0);
  EXPECT_THROW(iou(BinaryGrid(4, 4), BinaryGrid(4, 5)), ParameterError);
}

TEST(Iou, SymmetricAndBounded) {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const BinaryGrid a = random_grid(12, 9, rng, rng.uniform()), b = random_grid(12, 9, rng, rng.uniform());
    const double v = iou(a, b);
    EXPECT_EQ(v, iou(b, a));
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
    EXPECT_EQ(iou(a, a), 1.0);
  }
}

TEST(LocationError, Fixtures) {
  const BinaryGrid a = rect_grid(20, 10, 3, 3, 6, 5);
  EXPECT_EQ(location_error(a, a), 0.0);
  BinaryGrid tl(20, 10), br(20, 10);
  tl.set(0, 0);
  br.set(19, 9);
  EXPECT_EQ(location_error(tl, br), 1.0);
  EXPECT_FALSE(location_error(BinaryGrid(20, 10), a).has_value());
}

TEST(LocationError, MatchesCentroidOracle) {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t w = 2 + rng.below(30), h = 2 + rng.below(30);
    BinaryGrid a = random_grid(w, h, rng, 0.3), b = random_grid(w, h, rng, 0.3);
    a.set(0, 0);
    b.set(w - 1, h - 1);
    const Point2 ca = centroid_oracle(a), cb = centroid_oracle(b);
    const double want = std::hypot(ca.x - cb.x, ca.y - cb.y) /
                        std::hypot(static_cast<double>(w - 1), static_cast<double>(h - 1));
    EXPECT_NEAR(*location_error(a, b), want, 1e-12);
  }
}

TEST(ContourAccuracy, Fixtures) {
  const BinaryGrid sq = rect_grid(32, 32, 10, 10, 19, 19);
  EXPECT_EQ(contour_accuracy(sq, sq), 1.0);
  EXPECT_EQ(contour_accuracy(rect_grid(32, 32, 0, 0, 3, 3), rect_grid(32, 32, 28, 28, 31, 31), 0.01), 0.0);
  EXPECT_EQ(contour_accuracy(BinaryGrid(8, 8), BinaryGrid(8, 8)), 1.0);
  const double diag = grid_diagonal(32, 32);
  EXPECT_EQ(contour_accuracy(cross_dilate(sq), sq, (1.0 + 1e-9) / diag), 1.0);
  EXPECT_EQ(contour_accuracy(rect_grid(32, 32, 9, 9, 20, 20), sq, 1.5 / diag), 1.0);
  EXPECT_LT(contour_accuracy(rect_grid(32, 32, 9, 9, 20, 20), sq, 0.5 / diag), 1.0);
}

TEST(ContourAccuracy, SelfIsOneAndMonotoneInTolerance) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const BinaryGrid a = random_grid(24, 24, rng, 0.4), b = random_grid(24, 24, rng, 0.4);
    EXPECT_EQ(contour_accuracy(a, a), 1.0);
    const double lo = contour_accuracy(a, b, 0.0), mid = contour_accuracy(a, b, 0.03), hi = contour_accuracy(a, b, 0.1);
    EXPECT_LE(lo, mid);
    EXPECT_LE(mid, hi);
  }
}

TEST(RankCandidates, SingletonAboveThreshold) {
  const auto r = rank_candidates({0}, {0.9}, 0.5);
  EXPECT_EQ(r.chosen_index, 0u);
  EXPECT_TRUE(r.visible_pred);
}

TEST(RankCandidates, BelowThresholdIsInvisible) {
  const auto r = rank_candidates({0, 1}, {0.3, 0.1}, 0.5);
  EXPECT_FALSE(r.visible_pred);
  EXPECT_FALSE(r.chosen_index.has_value());
  EXPECT_EQ(r.best_index(), 0u);
  EXPECT_EQ(r.similarity, 0.3);
}

TEST(RankCandidates, TiesGoToLowerIndex) {
  const auto r = rank_candidates({0, 1, 2}, {0.7, 0.7, 0.2}, 0.5);
  EXPECT_EQ(r.chosen_index, 0u);
  const auto s = rank_candidates({4, 2, 9}, {0.7, 0.7, 0.8}, 0.5);
  EXPECT_EQ(s.ranked, (std::vector<std::pair<std::size_t, double>>{{9, 0.8}, {2, 0.7}, {4, 0.7}}));
}

TEST(RankCandidates, EmptyGivesDiagnostic) {
  const auto r = rank_candidates({}, {}, 0.5);
  EXPECT_FALSE(r.visible_pred);
  EXPECT_FALSE(r.diagnostic.empty());
}

TEST(Match, RankingIsPermutationOfKeptAndScaleInvariant) {
  SyntheticConfig sc = tiny_synthetic(10, 4);
  const auto packs = generate_dataset(sc).train;
  RunConfig cfg = tiny_run(1, 4);
  Checkpoint ck = initial_checkpoint(cfg, sc.dim);
  Checkpoint scaled = ck;
  for (double& v : scaled.params.mlp.w2.data()) v *= 3.7;
  for (double& v : scaled.params.mlp.b2.data()) v *= 3.7;
  for (const auto& p : packs) {
    const MatchResult m = match(p, ck, -2.0);
    std::vector<std::size_t> got;
    for (const auto& [i, s] : m.ranked) got.push_back(i);
    std::sort(got.begin(), got.end());
    EXPECT_EQ(got, encode_all(p, cfg.encoder.context_margin).kept_indices);
    for (std::size_t i = 1; i < m.ranked.size(); ++i) EXPECT_GE(m.ranked[i - 1].second, m.ranked[i].second);
    EXPECT_EQ(match(p, scaled, -2.0).best_index(), m.best_index());
    EXPECT_TRUE(m.visible_pred);
    EXPECT_EQ(m.chosen_index, m.ranked.front().first);
  }
}

TEST(Match, AllCandidatesEmptyIsInvisible) {
  FeaturePack p = small_pack();
  for (auto& c : p.candidates) c = MaskBitmap::empty(8, 8);
  p.gt_index.reset();
  RunConfig cfg = tiny_run(1);
  const MatchResult m = match(p, initial_checkpoint(cfg, 2), 0.0);
  EXPECT_FALSE(m.visible_pred);
  EXPECT_FALSE(m.diagnostic.empty());
}

TEST(Evaluate, PerfectPredictorHitsUpperBound) {
  SyntheticConfig sc = tiny_synthetic(60, 2);
  sc.invisible_prob = 0.3;
  const auto packs = generate_dataset(sc).train;
  EvalReport r;
  std::size_t invisible = 0;
  for (const auto& p : packs) {
    r.samples.push_back(score_prediction(p, oracle_predictor(p), RunConfig{}));
    invisible += !p.visible;
  }
  ASSERT_GT(invisible, 0u);
  aggregate(r);
  EXPECT_EQ(r.iou, 1.0);
  EXPECT_EQ(r.vis_acc, 1.0);
  EXPECT_EQ(r.loc_err, 0.0);
  EXPECT_EQ(r.cont_acc, 1.0);
  EXPECT_EQ(r.top1, 1.0);
  EXPECT_EQ(r.errors, 0u);
}

TEST(Evaluate, AlwaysInvisiblePredictorOnVisibleSet) {
  const auto packs = generate_dataset(tiny_synthetic(30, 3)).train;
  EvalReport r;
  for (const auto& p : packs) {
    ASSERT_TRUE(p.visible);
    std::vector<std::size_t> ids(p.candidates.size());
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
    r.samples.push_back(score_prediction(p, rank_candidates(ids, std::vector<double>(ids.size(), 0.0), 0.5), {}));
  }
  aggregate(r);
  EXPECT_EQ(r.vis_acc, 0.0);
  EXPECT_EQ(r.iou, 0.0);
  EXPECT_FALSE(r.loc_err.has_value());
}

TEST(Evaluate, RandomChoiceMatchesChance) {
  const auto packs = generate_dataset(tiny_synthetic(600, 5)).train;
  Rng rng(6);
  EvalReport r;
  double chance = 0.0, var = 0.0;
  for (const auto& p : packs) {
    const std::size_t n = p.candidates.size();
    std::vector<std::size_t> ids(n);
    std::vector<double> sims(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) ids[i] = i;
    sims[rng.below(n)] = 1.0;
    r.samples.push_back(score_prediction(p, rank_candidates(ids, sims, 0.5), {}));
    chance += 1.0 / static_cast<double>(n);
    var += (1.0 / static_cast<double>(n)) * (1.0 - 1.0 / static_cast<double>(n));
  }
  aggregate(r);
  const double count = static_cast<double>(packs.size());
  EXPECT_NEAR(r.top1, chance / count, 3.0 * std::sqrt(var) / count);
}

TEST(Evaluate, SweepUsesStoredSimilarities) {
  std::vector<SampleRecord> s(2);
  s[0].visible_gt = true;
  s[0].best_index = 0;
  s[0].similarity = 0.6;
  s[0].iou_if_shown = 0.8;
  s[1].visible_gt = false;
  s[1].best_index = 1;
  s[1].similarity = 0.4;
  const auto pts = sweep_thresholds(s, {0.3, 0.5, 0.7});
  EXPECT_EQ(pts[0].vis_acc, 0.5);
  EXPECT_EQ(pts[1].vis_acc, 1.0);
  EXPECT_EQ(pts[1].iou, 0.9);
  EXPECT_EQ(pts[2].vis_acc, 0.5);
  EXPECT_EQ(pts[2].iou, 0.5);
}

}  // namespace
