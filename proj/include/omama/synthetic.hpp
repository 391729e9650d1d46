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

// Synthetic cross-view scenes with known correspondence.
//
// Each object k has a latent identity z_k. A view v renders it as
// A_v z_k + b_v + noise inside the object's shape and pure noise elsewhere.
// A_v is the identity on most channels and an amplified rotation on a few
// variant channels. The exo rotation is the negated ego one by default, so
// raw descriptors of the same object are uncorrelated across views until a
// model learns to discount the variant block. Destination candidates are
// the true shapes plus small sub-rectangles of each object, which share the
// object's appearance but not its extent. Shape kind and size are drawn per
// object and jittered per view.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "omama/error.hpp"
#include "omama/mask.hpp"
#include "omama/pack.hpp"
#include "omama/rng.hpp"
#include "omama/tensor.hpp"

namespace omama {

struct SyntheticConfig {
  std::size_t packs = 100;
  std::size_t eval_packs = 0;
  std::size_t objects = 8;
  std::size_t dim = 16;
  double noise = 0.5;
  std::size_t distractor_parts = 2;
  std::uint64_t seed = 0;
  std::uint64_t world_seed = 0;
  std::size_t src_height = 32, src_width = 32;  // feature grid
  std::size_t dst_height = 32, dst_width = 32;
  std::size_t min_side = 12, max_side = 22;  // object extent on the mask grid
  std::size_t min_gap = 12;                  // clearance between bounding boxes, mask pixels
  double size_jitter = 0.15;  // per-view relative change of an object's extent
  double part_min = 0.25, part_max = 0.5;  // part side as a fraction of the object's side
  std::size_t variant_dims = 3;  // channels whose appearance depends on the view
  double view_gain = 3.0;        // scale of the view-dependent block
  double view_bias = 0.0;        // scale of the per-view offset, inside the variant block
  bool mirror_views = true;      // exo variant block is the negated ego block
  bool axis_aligned = true;      // variant block on the last channels, else a random subspace
  double invisible_prob = 0.0;
  Direction direction = Direction::Ego2Exo;
  bool identity_views = false;
};

struct ViewTransform {
  Tensor a;                   // d x d
  std::vector<double> bias;   // d
};

struct World {
  ViewTransform ego;
  ViewTransform exo;
};

enum class ShapeKind : std::uint8_t { Rect, Ellipse };

/// Axis-aligned rectangle or the ellipse inscribed in it, inclusive bounds
/// on the mask grid.
struct ShapeSpec {
  ShapeKind kind = ShapeKind::Rect;
  std::size_t x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  bool contains(std::size_t x, std::size_t y) const {
    if (x < x0 || x > x1 || y < y0 || y > y1) return false;
    if (kind == ShapeKind::Rect) return true;
    const double cx = 0.5 * static_cast<double>(x0 + x1), cy = 0.5 * static_cast<double>(y0 + y1);
    const double rx = 0.5 * static_cast<double>(x1 - x0 + 1), ry = 0.5 * static_cast<double>(y1 - y0 + 1);
    const double dx = (static_cast<double>(x) - cx) / rx, dy = (static_cast<double>(y) - cy) / ry;
    return dx * dx + dy * dy <= 1.0;
  }

  BinaryGrid rasterize(std::size_t width, std::size_t height) const {
    BinaryGrid g(width, height);
    for (std::size_t y = y0; y <= y1 && y < height; ++y)
      for (std::size_t x = x0; x <= x1 && x < width; ++x)
        if (contains(x, y)) g.set(x, y);
    return g;
  }
};

struct SceneSpec {
  std::size_t objects = 0;
  std::size_t dim = 0;
  std::size_t src_height = 0, src_width = 0, dst_height = 0, dst_width = 0;
  ViewTransform source_view, dest_view;
  std::vector<std::vector<double>> identities;  // K x d
  double noise = 0.0;
  std::size_t distractor_parts = 0;
  double part_min = 0.25, part_max = 0.5;
  std::vector<ShapeSpec> source_shapes, dest_shapes;
  std::vector<bool> visible_dest;  // every object is visible in the source view
  std::size_t source_object = 0;
  Direction direction = Direction::Ego2Exo;
};

namespace detail {

inline Tensor random_orthogonal(std::size_t n, Rng& rng) {
  Tensor q({n, n});
  for (double& v : q.data()) v = rng.normal();
  // Modified Gram-Schmidt over columns.
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < j; ++k) {
      double dot = 0.0;
      for (std::size_t i = 0; i < n; ++i) dot += q(i, j) * q(i, k);
      for (std::size_t i = 0; i < n; ++i) q(i, j) -= dot * q(i, k);
    }
    double norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) norm += q(i, j) * q(i, j);
    norm = std::sqrt(norm);
    for (std::size_t i = 0; i < n; ++i) q(i, j) /= norm;
  }
  return q;
}

/// Identity on the invariant block, gain * r on the variant block.
inline ViewTransform make_view(const Tensor& basis, std::size_t invariant, const Tensor& r, double gain, double bias,
                               Rng& rng) {
  const std::size_t d = basis.rows(), var = d - invariant;
  ViewTransform v{Tensor({d, d}), std::vector<double>(d, 0.0)};
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < invariant; ++k) s += basis(i, k) * basis(j, k);
      for (std::size_t a = 0; a < var; ++a)
        for (std::size_t b = 0; b < var; ++b) s += gain * basis(i, invariant + a) * r(a, b) * basis(j, invariant + b);
      v.a(i, j) = s;
    }
  std::vector<double> beta(var);
  for (double& b : beta) b = rng.normal();
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t a = 0; a < var; ++a) v.bias[i] += bias * basis(i, invariant + a) * beta[a];
  return v;
}

inline float to_f32(double v) { return static_cast<float>(v); }

}  // namespace detail

/// View transforms shared by every pack of a dataset.
inline World make_world(const SyntheticConfig& cfg) {
  const std::size_t d = cfg.dim;
  if (cfg.identity_views) {
    Tensor eye({d, d});
    for (std::size_t i = 0; i < d; ++i) eye(i, i) = 1.0;
    return {{eye, std::vector<double>(d, 0.0)}, {eye, std::vector<double>(d, 0.0)}};
  }
  Rng rng(cfg.world_seed);
  Tensor basis = detail::random_orthogonal(d, rng);
  if (cfg.axis_aligned) {
    basis = Tensor({d, d});
    for (std::size_t i = 0; i < d; ++i) basis(i, i) = 1.0;
  }
  if (cfg.variant_dims >= d) throw ParameterError("variant_dims must be smaller than the feature dimension");
  const std::size_t invariant = d - cfg.variant_dims;
  const std::size_t var = d - invariant;
  const Tensor r_ego = detail::random_orthogonal(var, rng);
  Tensor r_exo = detail::random_orthogonal(var, rng);
  if (cfg.mirror_views) {
    r_exo = r_ego;
    for (double& v : r_exo.data()) v = -v;
  }
  World w;
  w.ego = detail::make_view(basis, invariant, r_ego, cfg.view_gain, cfg.view_bias, rng);
  w.exo = detail::make_view(basis, invariant, r_exo, cfg.view_gain, cfg.view_bias, rng);
  return w;
}

/// Kind and extent of an object, shared by both views.
struct ShapeTemplate {
  ShapeKind kind = ShapeKind::Rect;
  std::size_t width = 0, height = 0;
};

inline std::vector<ShapeTemplate> sample_templates(const SyntheticConfig& cfg, Rng& rng) {
  if (cfg.min_side < 2 || cfg.max_side < cfg.min_side) throw ParameterError("synthetic object sizes are invalid");
  std::vector<ShapeTemplate> out;
  for (std::size_t k = 0; k < cfg.objects; ++k) {
    ShapeTemplate t;
    t.kind = rng.below(2) ? ShapeKind::Ellipse : ShapeKind::Rect;
    t.width = cfg.min_side + static_cast<std::size_t>(rng.below(cfg.max_side - cfg.min_side + 1));
    t.height = cfg.min_side + static_cast<std::size_t>(rng.below(cfg.max_side - cfg.min_side + 1));
    out.push_back(t);
  }
  return out;
}

/// Places jittered copies of the templates with at least `gap` pixels of
/// clearance between bounding boxes.
inline std::vector<ShapeSpec> place_shapes(const std::vector<ShapeTemplate>& templates, std::size_t width,
                                           std::size_t height, double jitter, std::size_t gap, Rng& rng) {
  constexpr int kMaxTries = 1000;
  auto jittered = [&](std::size_t side) {
    const double f = 1.0 + jitter * rng.uniform(-1.0, 1.0);
    return std::max<std::size_t>(2, static_cast<std::size_t>(std::lround(f * static_cast<double>(side))));
  };
  constexpr int kPositionsPerShape = 50;
  for (int attempt = 0; attempt < kMaxTries; ++attempt) {
    std::vector<ShapeSpec> out;
    for (const ShapeTemplate& t : templates) {
      bool placed = false;
      for (int pos = 0; pos < kPositionsPerShape && !placed; ++pos) {
        ShapeSpec s;
        s.kind = t.kind;
        const std::size_t w = jittered(t.width), h = jittered(t.height);
        if (w + 2 > width || h + 2 > height) continue;
        s.x0 = 1 + static_cast<std::size_t>(rng.below(width - w - 1));
        s.y0 = 1 + static_cast<std::size_t>(rng.below(height - h - 1));
        s.x1 = s.x0 + w - 1;
        s.y1 = s.y0 + h - 1;
        placed = std::none_of(out.begin(), out.end(), [&](const ShapeSpec& o) {
          return s.x0 <= o.x1 + gap && o.x0 <= s.x1 + gap && s.y0 <= o.y1 + gap && o.y0 <= s.y1 + gap;
        });
        if (placed) out.push_back(s);
      }
      if (!placed) break;
    }
    if (out.size() == templates.size()) return out;
  }
  throw Error("cannot place " + std::to_string(templates.size()) + " non-overlapping shapes after " +
              std::to_string(kMaxTries) + " tries; use fewer objects or a larger grid");
}

/// Draws one scene: identities, shapes in both views, the source object
/// and its visibility in the destination.
inline SceneSpec sample_scene(const SyntheticConfig& cfg, const World& world, Rng& rng) {
  if (cfg.objects < 2) throw ParameterError("synthetic scenes need at least 2 objects");
  SceneSpec s;
  s.objects = cfg.objects;
  s.dim = cfg.dim;
  s.src_height = cfg.src_height;
  s.src_width = cfg.src_width;
  s.dst_height = cfg.dst_height;
  s.dst_width = cfg.dst_width;
  s.direction = cfg.direction;
  const bool ego_source = cfg.direction == Direction::Ego2Exo;
  s.source_view = ego_source ? world.ego : world.exo;
  s.dest_view = ego_source ? world.exo : world.ego;
  s.noise = cfg.noise;
  s.distractor_parts = cfg.distractor_parts;
  s.part_min = cfg.part_min;
  s.part_max = cfg.part_max;
  for (std::size_t k = 0; k < cfg.objects; ++k) {
    std::vector<double> z(cfg.dim);
    for (double& v : z) v = rng.normal();
    s.identities.push_back(std::move(z));
  }
  const auto templates = sample_templates(cfg, rng);
  s.source_shapes =
      place_shapes(templates, cfg.src_width * kMaskScale, cfg.src_height * kMaskScale, cfg.size_jitter, cfg.min_gap, rng);
  s.dest_shapes =
      place_shapes(templates, cfg.dst_width * kMaskScale, cfg.dst_height * kMaskScale, cfg.size_jitter, cfg.min_gap, rng);
  s.source_object = static_cast<std::size_t>(rng.below(cfg.objects));
  s.visible_dest.assign(cfg.objects, true);
  if (cfg.invisible_prob > 0.0 && rng.uniform() < cfg.invisible_prob) s.visible_dest[s.source_object] = false;
  return s;
}

namespace detail {

/// Feature map for one view; a feature pixel belongs to an object when at
/// least half of its mask-grid block lies inside the object's shape.
inline Tensor render_view(const SceneSpec& s, const ViewTransform& view, const std::vector<ShapeSpec>& shapes,
                          const std::vector<bool>& visible, std::size_t height, std::size_t width, Rng& rng) {
  const std::size_t d = s.dim;
  std::vector<std::vector<double>> appearance;
  for (const auto& z : s.identities) {
    std::vector<double> a(view.bias);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) a[i] += view.a(i, j) * z[j];
    appearance.push_back(std::move(a));
  }
  std::vector<double> data(height * width * d);
  for (std::size_t y = 0; y < height; ++y)
    for (std::size_t x = 0; x < width; ++x) {
      std::optional<std::size_t> owner;
      for (std::size_t k = 0; k < shapes.size() && !owner; ++k) {
        if (!visible[k]) continue;
        std::size_t inside = 0;
        for (std::size_t dy = 0; dy < kMaskScale; ++dy)
          for (std::size_t dx = 0; dx < kMaskScale; ++dx)
            inside += shapes[k].contains(x * kMaskScale + dx, y * kMaskScale + dy);
        if (2 * inside >= kMaskScale * kMaskScale) owner = k;
      }
      double* px = &data[(y * width + x) * d];
      for (std::size_t c = 0; c < d; ++c) {
        const double base = owner ? appearance[*owner][c] : 0.0;
        px[c] = static_cast<double>(to_f32(base + s.noise * rng.normal()));
      }
    }
  return Tensor({height, width, d}, std::move(data));
}

}  // namespace detail

/// Per-candidate bookkeeping of a generated pack.
struct CandidateOrigin {
  std::size_t object = 0;
  bool whole = true;
};

struct GeneratedPack {
  FeaturePack pack;
  std::vector<CandidateOrigin> origins;
};

/// Renders a scene into a pack. Candidates are every visible destination
/// shape plus `distractor_parts` partial masks per object, shuffled.
inline GeneratedPack generate_pack(const SceneSpec& s, Rng& rng) {
  const std::size_t sw = s.src_width * kMaskScale, sh = s.src_height * kMaskScale;
  const std::size_t dw = s.dst_width * kMaskScale, dh = s.dst_height * kMaskScale;
  GeneratedPack g;
  FeaturePack& p = g.pack;
  p.direction = s.direction;
  const std::vector<bool> all_visible(s.objects, true);
  p.source_features = detail::render_view(s, s.source_view, s.source_shapes, all_visible, s.src_height, s.src_width, rng);
  p.dest_features = detail::render_view(s, s.dest_view, s.dest_shapes, s.visible_dest, s.dst_height, s.dst_width, rng);
  p.source_mask = MaskBitmap::encode(s.source_shapes[s.source_object].rasterize(sw, sh));

  std::vector<std::pair<MaskBitmap, CandidateOrigin>> cands;
  for (std::size_t k = 0; k < s.objects; ++k) {
    if (!s.visible_dest[k]) continue;
    const ShapeSpec& shape = s.dest_shapes[k];
    const BinaryGrid whole = shape.rasterize(dw, dh);
    const std::size_t whole_count = whole.count();
    cands.emplace_back(MaskBitmap::encode(whole), CandidateOrigin{k, true});
    for (std::size_t part = 0; part < s.distractor_parts; ++part) {
      for (int attempt = 0; attempt < 20; ++attempt) {
        const std::size_t sw_ = shape.x1 - shape.x0 + 1, sh_ = shape.y1 - shape.y0 + 1;
        auto side = [&](std::size_t extent) {
          const double f = rng.uniform(s.part_min, s.part_max);
          return std::clamp<std::size_t>(static_cast<std::size_t>(std::lround(f * static_cast<double>(extent))), 2,
                                         extent);
        };
        const std::size_t pw = side(sw_), ph = side(sh_);
        const std::size_t px0 = shape.x0 + static_cast<std::size_t>(rng.below(sw_ - pw + 1));
        const std::size_t py0 = shape.y0 + static_cast<std::size_t>(rng.below(sh_ - ph + 1));
        BinaryGrid g2(dw, dh);
        for (std::size_t y = py0; y < py0 + ph; ++y)
          for (std::size_t x = px0; x < px0 + pw; ++x)
            if (whole.at(x, y)) g2.set(x, y);
        const std::size_t n = g2.count();
        if (n >= 4 && n < whole_count) {
          cands.emplace_back(MaskBitmap::encode(g2), CandidateOrigin{k, false});
          break;
        }
      }
    }
  }
  std::vector<std::size_t> order(cands.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  for (auto i : order) {
    if (cands[i].second.whole && cands[i].second.object == s.source_object) p.gt_index = p.candidates.size();
    p.candidates.push_back(cands[i].first);
    g.origins.push_back(cands[i].second);
  }
  p.visible = s.visible_dest[s.source_object];
  if (p.visible) p.gt_mask = MaskBitmap::encode(s.dest_shapes[s.source_object].rasterize(dw, dh));
  validate_pack(p);
  return g;
}

/// Ground truth from construction: the candidate whose mask is the source
/// object's destination shape, or nullopt when that object is not visible.
inline std::optional<std::size_t> oracle_match(const FeaturePack& pack, const SceneSpec& s) {
  if (!s.visible_dest.at(s.source_object)) return std::nullopt;
  const MaskBitmap target = MaskBitmap::encode(
      s.dest_shapes[s.source_object].rasterize(s.dst_width * kMaskScale, s.dst_height * kMaskScale));
  for (std::size_t i = 0; i < pack.candidates.size(); ++i)
    if (pack.candidates[i] == target) return i;
  return std::nullopt;
}

// --- JSON sidecar --------------------------------------------------------

inline nlohmann::ordered_json to_json(const ShapeSpec& s) {
  return {{"kind", s.kind == ShapeKind::Rect ? "rect" : "ellipse"}, {"x0", s.x0}, {"y0", s.y0}, {"x1", s.x1}, {"y1", s.y1}};
}

inline ShapeSpec shape_from_json(const nlohmann::ordered_json& j) {
  ShapeSpec s;
  s.kind = j.at("kind").get<std::string>() == "rect" ? ShapeKind::Rect : ShapeKind::Ellipse;
  s.x0 = j.at("x0");
  s.y0 = j.at("y0");
  s.x1 = j.at("x1");
  s.y1 = j.at("y1");
  return s;
}

inline nlohmann::ordered_json to_json(const ViewTransform& v) { return {{"a", v.a.vec()}, {"bias", v.bias}}; }

inline ViewTransform view_from_json(const nlohmann::ordered_json& j, std::size_t d) {
  return {Tensor({d, d}, j.at("a").get<std::vector<double>>()), j.at("bias").get<std::vector<double>>()};
}

/// Scene geometry and identities (view transforms live at dataset level).
inline nlohmann::ordered_json to_json(const SceneSpec& s) {
  nlohmann::ordered_json src = nlohmann::ordered_json::array(), dst = nlohmann::ordered_json::array();
  for (const auto& sh : s.source_shapes) src.push_back(to_json(sh));
  for (const auto& sh : s.dest_shapes) dst.push_back(to_json(sh));
  std::vector<int> vis;
  for (bool b : s.visible_dest) vis.push_back(b ? 1 : 0);
  return {{"objects", s.objects},       {"dim", s.dim},
          {"source_grid", {s.src_height, s.src_width}},
          {"dest_grid", {s.dst_height, s.dst_width}},
          {"noise", s.noise},           {"distractor_parts", s.distractor_parts},
          {"part_fraction", {s.part_min, s.part_max}},
          {"direction", to_string(s.direction)},
          {"identities", s.identities}, {"source_shapes", src},
          {"dest_shapes", dst},         {"visible_dest", vis},
          {"source_object", s.source_object}};
}

inline SceneSpec scene_from_json(const nlohmann::ordered_json& j, const World& world) {
  SceneSpec s;
  s.objects = j.at("objects");
  s.dim = j.at("dim");
  s.src_height = j.at("source_grid").at(0);
  s.src_width = j.at("source_grid").at(1);
  s.dst_height = j.at("dest_grid").at(0);
  s.dst_width = j.at("dest_grid").at(1);
  s.noise = j.at("noise");
  s.distractor_parts = j.at("distractor_parts");
  s.part_min = j.at("part_fraction").at(0);
  s.part_max = j.at("part_fraction").at(1);
  s.direction = j.at("direction").get<std::string>() == "Ego2Exo" ? Direction::Ego2Exo : Direction::Exo2Ego;
  s.source_view = s.direction == Direction::Ego2Exo ? world.ego : world.exo;
  s.dest_view = s.direction == Direction::Ego2Exo ? world.exo : world.ego;
  s.identities = j.at("identities").get<std::vector<std::vector<double>>>();
  for (const auto& sh : j.at("source_shapes")) s.source_shapes.push_back(shape_from_json(sh));
  for (const auto& sh : j.at("dest_shapes")) s.dest_shapes.push_back(shape_from_json(sh));
  for (int v : j.at("visible_dest").get<std::vector<int>>()) s.visible_dest.push_back(v != 0);
  s.source_object = j.at("source_object");
  return s;
}

struct SyntheticDataset {
  std::vector<FeaturePack> train;
  std::vector<FeaturePack> eval;
  std::vector<SceneSpec> train_scenes;
  std::vector<SceneSpec> eval_scenes;
  World world;
};

/// Generates cfg.packs training packs and cfg.eval_packs evaluation packs in
/// one world. Pack i (counting train first) is drawn from Rng(seed ^ i).
inline SyntheticDataset generate_dataset(const SyntheticConfig& cfg) {
  SyntheticDataset ds;
  ds.world = make_world(cfg);
  for (std::size_t i = 0; i < cfg.packs + cfg.eval_packs; ++i) {
    Rng rng(cfg.seed ^ static_cast<std::uint64_t>(i));
    SceneSpec scene = sample_scene(cfg, ds.world, rng);
    FeaturePack pack = generate_pack(scene, rng).pack;
    if (i < cfg.packs) {
      ds.train.push_back(std::move(pack));
      ds.train_scenes.push_back(std::move(scene));
    } else {
      ds.eval.push_back(std::move(pack));
      ds.eval_scenes.push_back(std::move(scene));
    }
  }
  return ds;
}

/// Writes packs, manifest.txt (and manifest_eval.txt when eval packs are
/// requested), and a spec.json sidecar for oracle checks.
inline void write_dataset(const SyntheticDataset& ds, const SyntheticConfig& cfg, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  using J = nlohmann::ordered_json;
  J packs = J::array();
  auto emit = [&](const std::vector<FeaturePack>& set, const std::vector<SceneSpec>& scenes, const std::string& prefix,
                  const std::string& manifest) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < set.size(); ++i) {
      char name[64];
      std::snprintf(name, sizeof(name), "%s_%05zu.ommp", prefix.c_str(), i);
      save_pack(set[i], dir / name);
      names.emplace_back(name);
      J rec = to_json(scenes[i]);
      rec["file"] = name;
      rec["gt_index"] = set[i].gt_index ? J(*set[i].gt_index) : J(nullptr);
      rec["visible"] = set[i].visible;
      packs.push_back(std::move(rec));
    }
    write_manifest(dir / manifest, names);
  };
  emit(ds.train, ds.train_scenes, "pack", "manifest.txt");
  if (!ds.eval.empty()) emit(ds.eval, ds.eval_scenes, "eval", "manifest_eval.txt");

  J spec{{"objects", cfg.objects},
         {"dim", cfg.dim},
         {"noise", cfg.noise},
         {"distractor_parts", cfg.distractor_parts},
         {"seed", cfg.seed},
         {"world_seed", cfg.world_seed},
         {"view_gain", cfg.view_gain},
         {"view_bias", cfg.view_bias},
         {"variant_dims", cfg.variant_dims},
         {"mirror_views", cfg.mirror_views},
         {"axis_aligned", cfg.axis_aligned},
         {"invisible_prob", cfg.invisible_prob},
         {"identity_views", cfg.identity_views},
         {"world", {{"ego", to_json(ds.world.ego)}, {"exo", to_json(ds.world.exo)}}},
         {"packs", std::move(packs)}};
  std::ofstream out(dir / "spec.json");
  out << spec.dump(1) << '\n';
}

}  // namespace omama
