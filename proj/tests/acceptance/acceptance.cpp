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


// Acceptance runner: one PASS/FAIL line per criterion, non-zero exit on any
// failure.  `--write-golden` refreshes tests/golden/synthetic_e2e.json.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "omama/omama.hpp"
#include "support/fixtures.hpp"
#include "support/grad_cases.hpp"
#include "support/oracles.hpp"

namespace {

using namespace omama;
using namespace omama::testing;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void report(const std::string& name, const Outcome& o, Clock::time_point t0) {
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  std::printf("%s  %-22s %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), secs);
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

void criterion(const std::string& name, const std::function<Outcome()>& body) {
  const auto t0 = Clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& ex) {
    o = {false, std::string("threw: ") + ex.what()};
  }
  report(name, o, t0);
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), f, a, b, c, d);
  return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

Outcome gradients() {
  const auto t0 = Clock::now();
  double worst = 0;
  std::string worst_case;
  for (const auto& name : grad_case_names())
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const auto r = run_grad_case(name, seed);
      if (r.checked == 0) return {false, name + " checked nothing"};
      if (r.max_rel > worst) worst = r.max_rel, worst_case = name;
    }
  const double secs = seconds_since(t0);
  return {worst < 1e-4 && secs < 30.0,
          fmt("max rel err %.2e (limit 1e-4), ", worst) + worst_case + fmt(", %.1f s (limit 30)", secs)};
}

Outcome loss_sanity() {
  const std::vector<double> equal(4, 0.3);
  const double dev = std::fabs(info_nce(equal, 0, {}) - std::log(4.0));
  Rng rng(9);
  double shift = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> s(8);
    for (double& v : s) v = rng.uniform(-1, 1);
    const double l = info_nce(s, trial % 8, {});
    const double c = rng.uniform(-5, 5);
    for (double& v : s) v += c;
    shift = std::max(shift, std::fabs(info_nce(s, trial % 8, {}) - l));
  }
  return {dev <= 1e-9 && shift <= 1e-9, fmt("|L - ln 4| = %.1e, max shift drift %.1e (limit 1e-9)", dev, shift)};
}

Outcome pooling() {
  Rng rng(8);
  int bad = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t h = 2 + rng.below(9), w = 2 + rng.below(9);
    const Tensor f = random_tensor({h, w, 1 + rng.below(4)}, rng);
    BinaryGrid g = random_grid(w * kUpsampleFactor, h * kUpsampleFactor, rng, 0.05 + 0.5 * rng.uniform());
    if (g.count() == 0) g.set(0, 0);
    const MaskBitmap m = MaskBitmap::encode(g);
    if (object_descriptor(m, f) != object_oracle(g, f) || context_descriptor(m, f, 0.5) != context_oracle(g, f, 0.5))
      ++bad;
  }
  return {bad == 0, fmt("%.0f of 100 instances differ from the double-loop oracle", bad)};
}

bool symmetric_no_loops(const AdjacencyGraph& g) {
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g.connected(i, i)) return false;
    for (std::size_t j = 0; j < g.size(); ++j)
      if (g.connected(i, j) != g.connected(j, i)) return false;
  }
  return true;
}

Outcome delaunay() {
  Rng rng(77);
  int mismatched = 0, trials = 0;
  while (trials < 50) {
    const auto pts = random_points(3 + rng.below(18), rng);
    if (!general_position(pts)) continue;
    ++trials;
    const auto g = delaunay_adjacency(pts);
    if (g.edges() != delaunay_oracle(pts) || !symmetric_no_loops(g)) ++mismatched;
  }
  const std::vector<std::vector<Point2>> degenerate = {
      {{1, 1}}, {{0, 0}, {5, 5}}, {{0, 0}, {1, 1}, {2, 2}, {5, 5}}, {{3, 0}, {3, 7}, {3, 2}},
      {{2, 2}, {2, 2}, {9, 1}, {5, 8}, {2, 2}}};
  int bad_degenerate = 0;
  for (const auto& pts : degenerate) {
    const auto g = delaunay_adjacency(pts);
    if (g.size() != pts.size() || !symmetric_no_loops(g)) ++bad_degenerate;
  }
  return {mismatched == 0 && bad_degenerate == 0,
          fmt("%.0f of 50 sets differ from the empty-circle oracle; %.0f of %.0f degenerate fixtures malformed",
              mismatched, bad_degenerate, static_cast<double>(degenerate.size()))};
}

Outcome pack_format() {
  Rng rng(1234);
  int unstable = 0;
  for (int i = 0; i < 100; ++i) {
    const FeaturePack p = random_pack(rng);
    const auto bytes = encode_pack(p);
    const FeaturePack q = decode_pack(bytes);
    if (!(q == p) || encode_pack(q) != bytes) ++unstable;
  }
  std::string wrong;
  const auto cases = corruption_cases();
  for (const auto& c : cases) {
    const auto got = raised([&] { decode_pack(c.bytes); });
    if (!got || *got != c.expected) wrong += " " + c.name;
  }
  return {unstable == 0 && wrong.empty(),
          fmt("%.0f of 100 round trips unstable; %.0f corruption fixtures, misclassified:", unstable,
              static_cast<double>(cases.size())) +
              (wrong.empty() ? " none" : wrong)};
}

double chance_level(const std::vector<FeaturePack>& packs) {
  double s = 0;
  std::size_t n = 0;
  for (const auto& p : packs)
    if (p.visible) s += 1.0 / static_cast<double>(p.candidates.size()), ++n;
  return n ? s / static_cast<double>(n) : 0.0;
}

RunConfig synthetic_run(std::uint64_t seed) {
  RunConfig cfg;
  cfg.mining.batch_size = 8;
  cfg.train.steps = 200;
  cfg.train.seed = seed;
  cfg.mining.seed = seed;
  return cfg;
}

Outcome end_to_end(const std::filesystem::path& golden, bool write_golden) {
  const auto t0 = Clock::now();
  SyntheticConfig sc;
  sc.packs = 400;
  sc.eval_packs = 100;
  const SyntheticDataset ds = generate_dataset(sc);
  const RunConfig cfg = synthetic_run(0);
  const Dataset eval = Dataset::from_memory(ds.eval);
  Checkpoint ck = initial_checkpoint(cfg, sc.dim);
  const EvalReport before = evaluate(eval, ck.params, cfg, cfg.eval.vis_threshold);
  ck = train(Dataset::from_memory(ds.train), std::move(ck));
  const EvalReport after = evaluate(eval, ck.params, cfg, cfg.eval.vis_threshold);
  const double secs = seconds_since(t0), chance = chance_level(ds.eval);

  nlohmann::ordered_json measured{
      {"chance", chance}, {"untrained_top1", before.top1}, {"top1", after.top1}, {"iou", after.iou}};
  std::string golden_note;
  bool golden_ok = true;
  if (write_golden) {
    std::ofstream(golden) << measured.dump(2) << '\n';
    golden_note = "; golden written";
  } else {
    std::ifstream in(golden);
    if (!in) return {false, "missing golden " + golden.string() + " (run with --write-golden once)"};
    const auto want = nlohmann::json::parse(in);
    for (const char* k : {"untrained_top1", "top1", "iou"})
      if (std::fabs(want.at(k).get<double>() - measured.at(k).get<double>()) > 0.02) golden_ok = false;
    golden_note = golden_ok ? "; matches golden" : "; drifted from golden " + want.dump();
  }
  const bool pass = after.top1 >= 0.90 && after.iou >= 0.85 && std::fabs(before.top1 - chance) <= 0.1 &&
                    secs < 300.0 && golden_ok;
  return {pass, fmt("top-1 %.3f (>= 0.90), IoU %.3f (>= 0.85), untrained %.3f vs chance %.3f (+-0.1)", after.top1,
                    after.iou, before.top1, chance) +
                    fmt(", %.1f s (limit 300)", secs) + golden_note};
}

Outcome ablation() {
  double adjacent = 0, random = 0;
  std::string per_seed;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SyntheticConfig sc;
    sc.packs = 400;
    sc.eval_packs = 100;
    sc.seed = seed;
    sc.world_seed = seed;
    const SyntheticDataset ds = generate_dataset(sc);
    const Dataset train_set = Dataset::from_memory(ds.train), eval = Dataset::from_memory(ds.eval);
    double acc[2];
    for (int k = 0; k < 2; ++k) {
      RunConfig cfg = synthetic_run(seed);
      cfg.mining.strategy = k == 0 ? "adjacent" : "random";
      const Checkpoint ck = train(train_set, initial_checkpoint(cfg, sc.dim));
      acc[k] = evaluate(eval, ck.params, cfg, -2.0).top1;
    }
    adjacent += acc[0] / 5;
    random += acc[1] / 5;
    per_seed += fmt(" %.2f/%.2f", acc[0], acc[1]);
  }
  return {adjacent >= random - 0.02,
          fmt("mean top-1 adjacent %.3f vs random %.3f (slack 0.02); per seed:", adjacent, random) + per_seed};
}

Outcome determinism() {
  const Dataset data = Dataset::from_memory(generate_dataset(tiny_synthetic(15, 2)).train);
  const RunConfig cfg = tiny_run(40, 7);
  const Checkpoint a = train(data, initial_checkpoint(cfg, 6));
  const Checkpoint b = train(data, initial_checkpoint(cfg, 6));
  const bool same_ckpt = encode_checkpoint(a) == encode_checkpoint(b);

  const Dataset eval = Dataset::from_memory(generate_dataset(tiny_synthetic(10, 3)).train);
  const bool same_report = to_json(evaluate(eval, a.params, cfg, cfg.eval.vis_threshold)).dump() ==
                           to_json(evaluate(eval, b.params, cfg, cfg.eval.vis_threshold)).dump();

  Checkpoint half = train(data, initial_checkpoint(tiny_run(17, 7), 6));
  half = decode_checkpoint(encode_checkpoint(half));
  half.config.train.steps = 40;
  const bool resumed = encode_checkpoint(train(data, half)) == encode_checkpoint(a);
  return {same_ckpt && same_report && resumed,
          std::string("checkpoints ") + (same_ckpt ? "identical" : "differ") + ", reports " +
              (same_report ? "identical" : "differ") + ", resume at 17 of 40 " +
              (resumed ? "bit-identical" : "diverges")};
}

Outcome metric_fixtures() {
  std::vector<std::string> bad;
  auto check = [&](bool ok, const char* what) {
    if (!ok) bad.emplace_back(what);
  };
  const BinaryGrid a = rect_grid(16, 16, 2, 2, 5, 5);
  check(iou(a, a) == 1.0, "iou self");
  check(iou(a, rect_grid(16, 16, 8, 8, 11, 11)) == 0.0, "iou disjoint");
  check(iou(rect_grid(16, 16, 0, 0, 3, 3), rect_grid(16, 16, 2, 0, 5, 3)) == 1.0 / 3.0, "iou third");
  check(iou(BinaryGrid(4, 4), BinaryGrid(4, 4)) == 1.0, "iou empty");
  const BinaryGrid r = rect_grid(20, 10, 3, 3, 6, 5);
  BinaryGrid tl(20, 10), br(20, 10);
  tl.set(0, 0);
  br.set(19, 9);
  check(location_error(r, r) == 0.0, "loc self");
  check(location_error(tl, br) == 1.0, "loc corners");
  check(!location_error(BinaryGrid(20, 10), r).has_value(), "loc empty");
  const BinaryGrid sq = rect_grid(32, 32, 10, 10, 19, 19);
  check(contour_accuracy(sq, sq) == 1.0, "contour self");
  check(contour_accuracy(rect_grid(32, 32, 0, 0, 3, 3), rect_grid(32, 32, 28, 28, 31, 31), 0.01) == 0.0,
        "contour far");
  check(contour_accuracy(BinaryGrid(8, 8), BinaryGrid(8, 8)) == 1.0, "contour empty");
  check(contour_accuracy(rect_grid(32, 32, 9, 9, 20, 20), sq, 1.5 / grid_diagonal(32, 32)) == 1.0,
        "contour dilated");
  std::string detail = "11 fixtures";
  for (const auto& b : bad) detail += ", failed " + b;
  return {bad.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
  const bool write_golden = argc > 1 && std::string(argv[1]) == "--write-golden";
  const std::filesystem::path golden = std::filesystem::path(OMAMA_GOLDEN_DIR) / "synthetic_e2e.json";

  criterion("gradient suite", gradients);
  criterion("loss sanity", loss_sanity);
  criterion("pooling oracle", pooling);
  criterion("delaunay oracle", delaunay);
  criterion("pack format", pack_format);
  criterion("synthetic end-to-end", [&] { return end_to_end(golden, write_golden); });
  criterion("ablation trend", ablation);
  criterion("determinism", determinism);
  criterion("metric fixtures", metric_fixtures);

  std::printf("%s: %d criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
