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


// omama: command-line front end for packs, training, matching and
// evaluation.
//
// Exit codes: 0 success, 1 usage error, 2 data or validation error,
// 3 internal error.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "omama/omama.hpp"

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitInternal = 3;

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw omama::Error("cannot create " + path.string());
  out << text;
}

// --- gen-synthetic ---------------------------------------------------------

struct GenArgs {
  std::string out;
  omama::SyntheticConfig cfg;
  std::string direction = "Ego2Exo";
  std::optional<std::uint64_t> world_seed;
};

int run_gen(GenArgs& a) {
  if (a.direction == "Exo2Ego") {
    a.cfg.direction = omama::Direction::Exo2Ego;
  } else if (a.direction != "Ego2Exo") {
    throw omama::ParameterError("--direction must be Ego2Exo or Exo2Ego");
  }
  a.cfg.world_seed = a.world_seed.value_or(a.cfg.seed);
  const auto ds = omama::generate_dataset(a.cfg);
  omama::write_dataset(ds, a.cfg, a.out);
  std::cout << "wrote " << ds.train.size() << " packs";
  if (!ds.eval.empty()) std::cout << " and " << ds.eval.size() << " eval packs";
  std::cout << " to " << a.out << '\n';
  return kExitOk;
}

// --- train -----------------------------------------------------------------

struct TrainArgs {
  std::string manifest, config, out, resume;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;
  bool quiet = false;
};

fs::path checkpoint_path(const fs::path& dir, std::uint64_t step) {
  return dir / ("ckpt_" + std::to_string(step) + ".ommc");
}

int run_train(const TrainArgs& a) {
  const omama::Dataset data = omama::Dataset::from_manifest(a.manifest);
  if (data.size == 0) throw omama::ValidationError("manifest " + a.manifest + " lists no packs");
  fs::create_directories(a.out);

  omama::Checkpoint state;
  if (!a.resume.empty()) {
    state = omama::load_checkpoint(a.resume);
    for (const auto& o : a.overrides) state.config.apply_override(o);
    state.config.validate();
  } else {
    omama::RunConfig cfg = a.config.empty() ? omama::RunConfig{} : omama::RunConfig::load(a.config);
    if (a.seed) {
      cfg.train.seed = *a.seed;
      cfg.mining.seed = *a.seed;
    }
    for (const auto& o : a.overrides) cfg.apply_override(o);
    cfg.validate();
    state = omama::initial_checkpoint(cfg, data.load(0).dim());
  }
  write_text(fs::path(a.out) / "config.resolved.json", state.config.to_json().dump(2) + "\n");

  const fs::path csv_path = fs::path(a.out) / "metrics.csv";
  const bool fresh = a.resume.empty() || !fs::exists(csv_path);
  std::ofstream csv(csv_path, fresh ? std::ios::trunc : std::ios::app);
  if (!csv) throw omama::Error("cannot create " + csv_path.string());
  if (fresh) csv << "step,loss,top1\n";

  omama::TrainHooks hooks;
  hooks.on_step = [&](const omama::StepLog& log) {
    char line[96];
    std::snprintf(line, sizeof(line), "%llu,%.17g,%g\n", static_cast<unsigned long long>(log.step),
                  log.skipped ? std::nan("") : log.loss, log.skipped ? std::nan("") : log.top1);
    csv << line;
    if (!a.quiet && (log.step % 25 == 0 || log.step == state.config.train.steps))
      std::cerr << "step " << log.step << " loss " << log.loss << '\n';
  };
  hooks.on_checkpoint = [&](const omama::Checkpoint& c) { omama::save_checkpoint(c, checkpoint_path(a.out, c.step)); };
  hooks.on_warning = [](const std::string& w) { std::cerr << "warning: " << w << '\n'; };
  const omama::Checkpoint done = omama::train(data, std::move(state), hooks);
  std::cout << "trained to step " << done.step << "; checkpoint " << checkpoint_path(a.out, done.step).string() << '\n';
  return kExitOk;
}

// --- match -----------------------------------------------------------------

/// Side-by-side binary PGM: source grid with the source mask, a separator,
/// destination grid with the chosen mask.
std::string overlay_pgm(const omama::FeaturePack& pack, std::optional<std::size_t> chosen) {
  const omama::BinaryGrid src = pack.source_mask.decode();
  const std::size_t dw = pack.dest_features.dim(1) * omama::kMaskScale;
  const std::size_t dh = pack.dest_features.dim(0) * omama::kMaskScale;
  const omama::BinaryGrid dst = chosen ? pack.candidates.at(*chosen).decode() : omama::BinaryGrid(dw, dh);
  constexpr std::size_t kSep = 4;
  const std::size_t w = src.width + kSep + dst.width, h = std::max(src.height, dst.height);
  std::string img = "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      unsigned char v = 0;
      if (x < src.width) {
        v = y < src.height && src.at(x, y) ? 255 : 40;
      } else if (x < src.width + kSep) {
        v = 128;
      } else {
        const std::size_t dx = x - src.width - kSep;
        v = y < dst.height && dst.at(dx, y) ? 255 : 40;
      }
      img.push_back(static_cast<char>(v));
    }
  return img;
}

struct MatchArgs {
  std::string pack, ckpt, overlay;
  std::optional<double> threshold;
  std::optional<std::uint64_t> seed;
  bool json = false;
};

int run_match(const MatchArgs& a) {
  const omama::FeaturePack pack = omama::load_pack(a.pack);
  const omama::Checkpoint ckpt = omama::load_checkpoint(a.ckpt);
  const double threshold = a.threshold.value_or(ckpt.config.eval.vis_threshold);
  const omama::MatchResult m = omama::match(pack, ckpt, threshold);
  if (a.json) {
    Json ranked = Json::array();
    for (const auto& [i, s] : m.ranked) ranked.push_back({{"index", i}, {"similarity", s}});
    Json out{{"chosen_index", m.chosen_index ? Json(*m.chosen_index) : Json(nullptr)},
             {"similarity", m.similarity},
             {"visible", m.visible_pred},
             {"threshold", threshold},
             {"ranked", ranked}};
    if (!m.diagnostic.empty()) out["diagnostic"] = m.diagnostic;
    std::cout << out.dump(2) << '\n';
  } else {
    if (m.chosen_index) {
      std::cout << "chosen " << *m.chosen_index << " similarity " << m.similarity << '\n';
    } else {
      std::cout << "chosen none (best similarity " << m.similarity << " below threshold " << threshold << ")\n";
    }
    if (!m.diagnostic.empty()) std::cout << "note: " << m.diagnostic << '\n';
    for (std::size_t r = 0; r < m.ranked.size(); ++r)
      std::cout << "  " << r + 1 << ". candidate " << m.ranked[r].first << "  " << m.ranked[r].second << '\n';
  }
  if (!a.overlay.empty()) write_text(a.overlay, overlay_pgm(pack, m.chosen_index));
  return kExitOk;
}

// --- eval ------------------------------------------------------------------

std::string sparkline(const std::vector<double>& values, std::size_t width = 60) {
  static const std::string kLevels = " .:-=+*#%@";
  if (values.empty()) return "";
  std::vector<double> bins;
  const std::size_t n = std::min(width, values.size());
  for (std::size_t b = 0; b < n; ++b) {
    const std::size_t lo = b * values.size() / n, hi = (b + 1) * values.size() / n;
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += values[i];
    bins.push_back(s / static_cast<double>(hi - lo));
  }
  const auto [mn, mx] = std::minmax_element(bins.begin(), bins.end());
  std::string out;
  for (double v : bins) {
    const double t = *mx > *mn ? (v - *mn) / (*mx - *mn) : 0.5;
    out.push_back(kLevels[static_cast<std::size_t>(std::lround(t * static_cast<double>(kLevels.size() - 1)))]);
  }
  return out;
}

std::vector<double> read_loss_column(const fs::path& csv) {
  std::ifstream in(csv);
  if (!in) throw omama::Error("cannot open metrics " + csv.string());
  std::vector<double> out;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::string step, loss;
    if (std::getline(row, step, ',') && std::getline(row, loss, ',')) {
      const double v = std::strtod(loss.c_str(), nullptr);
      if (std::isfinite(v)) out.push_back(v);
    }
  }
  return out;
}

struct EvalArgs {
  std::string manifest, ckpt, report, plot, metrics;
  std::optional<double> threshold;
  std::optional<std::uint64_t> seed;
  bool sweep = false;
};

int run_eval(const EvalArgs& a) {
  const omama::Dataset data = omama::Dataset::from_manifest(a.manifest);
  const omama::Checkpoint ckpt = omama::load_checkpoint(a.ckpt);
  const double threshold = a.threshold.value_or(ckpt.config.eval.vis_threshold);
  const omama::EvalReport r = omama::evaluate(data, ckpt.params, ckpt.config, threshold, a.sweep);
  Json out = omama::to_json(r);
  out["model"] = {{"step", ckpt.step},
                  {"mining_strategy", ckpt.config.mining.strategy},
                  {"config_hash", ckpt.config.hash()}};
  write_text(a.report, out.dump(2) + "\n");

  std::cout << "samples " << r.evaluated << " (errors " << r.errors << ")\n"
            << "IoU " << r.iou << "  Vis.A " << r.vis_acc << "  top-1 " << r.top1;
  if (r.loc_err) std::cout << "  Loc.E " << *r.loc_err;
  if (r.cont_acc) std::cout << "  Cont.A " << *r.cont_acc;
  std::cout << '\n';
  if (!r.sweep.empty()) {
    const auto best = std::max_element(r.sweep.begin(), r.sweep.end(),
                                       [](const auto& x, const auto& y) { return x.vis_acc < y.vis_acc; });
    std::cout << "best Vis.A " << best->vis_acc << " at threshold " << best->threshold << '\n';
  }
  if (a.plot == "ascii") {
    std::vector<double> ious;
    for (const auto& s : r.samples)
      if (s.error.empty()) ious.push_back(s.iou);
    std::cout << "IoU  |" << sparkline(ious) << "|\n";
    if (!a.metrics.empty()) std::cout << "loss |" << sparkline(read_loss_column(a.metrics)) << "|\n";
  } else if (!a.plot.empty()) {
    throw omama::ParameterError("--plot supports only 'ascii'");
  }
  return kExitOk;
}

// --- inspect-pack ----------------------------------------------------------

int run_inspect(const std::string& path, bool json) {
  const omama::FeaturePack p = omama::load_pack(path);
  Json out{{"version", p.version},
           {"direction", omama::to_string(p.direction)},
           {"dim", p.dim()},
           {"source_hw", {p.source_features.dim(0), p.source_features.dim(1)}},
           {"dest_hw", {p.dest_features.dim(0), p.dest_features.dim(1)}},
           {"candidates", p.candidates.size()},
           {"visible", p.visible},
           {"gt_index", p.gt_index ? Json(*p.gt_index) : Json(nullptr)},
           {"gt_mask", p.gt_mask.has_value()},
           {"source_mask_pixels", p.source_mask.count()}};
  if (json) {
    std::cout << out.dump(2) << '\n';
  } else {
    for (const auto& [k, v] : out.items()) std::cout << k << ": " << v.dump() << '\n';
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cross-view mask matching: synthetic data, training, matching and evaluation"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* g = app.add_subcommand("gen-synthetic", "Write a synthetic dataset of packs with known correspondence");
  g->add_option("--out", gen.out, "Output directory")->required();
  g->add_option("--packs", gen.cfg.packs, "Training packs")->capture_default_str();
  g->add_option("--eval-packs", gen.cfg.eval_packs, "Extra evaluation packs (manifest_eval.txt)")->capture_default_str();
  g->add_option("--objects", gen.cfg.objects, "Objects per scene")->capture_default_str();
  g->add_option("--dim", gen.cfg.dim, "Feature dimension")->capture_default_str();
  g->add_option("--noise", gen.cfg.noise, "Per-pixel noise sigma")->capture_default_str();
  g->add_option("--distractor-parts", gen.cfg.distractor_parts, "Partial masks per object")->capture_default_str();
  g->add_option("--invisible-prob", gen.cfg.invisible_prob, "Chance the target is absent from the destination")
      ->capture_default_str();
  g->add_option("--view-gain", gen.cfg.view_gain, "Scale of the view-dependent channels")->capture_default_str();
  g->add_option("--direction", gen.direction, "Ego2Exo or Exo2Ego")->capture_default_str();
  g->add_option("--seed", gen.cfg.seed, "Pack seed")->capture_default_str();
  g->add_option("--world-seed", gen.world_seed, "Seed of the shared view transforms (default: --seed)");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train the matcher on a manifest of packs");
  t->add_option("--manifest", tr.manifest, "Manifest listing training packs")->required();
  t->add_option("--config", tr.config, "JSON config file");
  t->add_option("--out", tr.out, "Output directory")->required();
  t->add_option("--seed", tr.seed, "Seed for initialisation and batch sampling");
  t->add_option("--set", tr.overrides, "Config override key=value (repeatable)");
  t->add_option("--resume", tr.resume, "Continue from a checkpoint");
  t->add_flag("--quiet", tr.quiet, "No progress lines");

  MatchArgs ma;
  auto* m = app.add_subcommand("match", "Rank the candidates of one pack");
  m->add_option("--pack", ma.pack, "Pack file")->required();
  m->add_option("--ckpt", ma.ckpt, "Checkpoint file")->required();
  m->add_option("--threshold", ma.threshold, "Visibility threshold (default: from checkpoint config)");
  m->add_option("--emit-overlay", ma.overlay, "Write a side-by-side PGM of source and chosen mask");
  m->add_option("--seed", ma.seed, "Accepted for uniformity; matching is deterministic");
  m->add_flag("--json", ma.json, "Print JSON");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Evaluate a checkpoint on a manifest");
  e->add_option("--manifest", ev.manifest, "Manifest listing evaluation packs")->required();
  e->add_option("--ckpt", ev.ckpt, "Checkpoint file")->required();
  auto* thr = e->add_option("--threshold", ev.threshold, "Visibility threshold (default: from checkpoint config)");
  e->add_flag("--sweep-threshold", ev.sweep, "Also report Vis.A and IoU over a threshold grid")->excludes(thr);
  e->add_option("--report", ev.report, "JSON report path")->required();
  e->add_option("--plot", ev.plot, "'ascii' prints sparklines");
  e->add_option("--metrics", ev.metrics, "metrics.csv of a training run, for the loss sparkline");
  e->add_option("--seed", ev.seed, "Accepted for uniformity; evaluation is deterministic");

  std::string inspect_path;
  bool inspect_json = false;
  auto* ip = app.add_subcommand("inspect-pack", "Validate a pack and print its header");
  ip->add_option("pack", inspect_path, "Pack file")->required();
  ip->add_flag("--json", inspect_json, "Print JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::CallForAllHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::ParseError& ex) {
    std::cerr << "error: " << ex.what() << "\n\n";
    const CLI::App* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    std::cerr << sub->help();
    return kExitUsage;
  }

  try {
    if (*g) return run_gen(gen);
    if (*t) return run_train(tr);
    if (*m) return run_match(ma);
    if (*e) return run_eval(ev);
    if (*ip) return run_inspect(inspect_path, inspect_json);
  } catch (const omama::StateError& ex) {
    std::cerr << "internal error: " << ex.what() << '\n';
    return kExitInternal;
  } catch (const omama::Error& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return kExitData;
  } catch (const nlohmann::json::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return kExitData;
  } catch (const std::exception& ex) {
    std::cerr << "internal error: " << ex.what() << '\n';
    return kExitInternal;
  }
  return kExitUsage;
}
