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

// Hard-negative mining over the Delaunay graph of candidate centroids, and
// the batch-filling policy used to build each contrastive batch.

#include <algorithm>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "omama/delaunay.hpp"
#include "omama/error.hpp"
#include "omama/mask.hpp"
#include "omama/rng.hpp"

namespace omama {

inline constexpr double kCoincidentEpsilon = 1e-6;

/// Mean foreground pixel coordinate; pixel centres sit on integer coordinates.
inline Point2 mask_centroid(const BinaryGrid& g) {
  double sx = 0.0, sy = 0.0;
  std::size_t n = 0;
  for (std::size_t y = 0; y < g.height; ++y)
    for (std::size_t x = 0; x < g.width; ++x)
      if (g.at(x, y)) {
        sx += static_cast<double>(x);
        sy += static_cast<double>(y);
        ++n;
      }
  if (n == 0) throw EmptyMaskError("centroid of an empty mask");
  return {sx / static_cast<double>(n), sy / static_cast<double>(n)};
}

inline Point2 mask_centroid(const MaskBitmap& m) { return mask_centroid(m.decode()); }

class AdjacencyGraph {
 public:
  AdjacencyGraph() = default;
  explicit AdjacencyGraph(std::size_t n) : n_(n), adj_(n * n, 0) {}

  std::size_t size() const { return n_; }
  bool connected(std::size_t i, std::size_t j) const { return adj_[i * n_ + j] != 0; }

  void connect(std::size_t i, std::size_t j) {
    if (i == j) return;
    adj_[i * n_ + j] = adj_[j * n_ + i] = 1;
  }

  std::vector<std::size_t> neighbors(std::size_t i) const {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < n_; ++j)
      if (connected(i, j)) out.push_back(j);
    return out;
  }

  std::set<std::pair<std::size_t, std::size_t>> edges() const {
    std::set<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = i + 1; j < n_; ++j)
        if (connected(i, j)) out.emplace(i, j);
    return out;
  }

  std::vector<Point2> centroids;

 private:
  std::size_t n_ = 0;
  std::vector<std::uint8_t> adj_;
};

/// Delaunay adjacency over centroids. Coincident points are nudged by
/// (i * eps, i * eps) for their index i; fewer than 3 points, or an
/// all-collinear set, falls back to the complete graph.
inline AdjacencyGraph delaunay_adjacency(std::vector<Point2> pts) {
  const std::size_t n = pts.size();
  AdjacencyGraph g(n);
  for (std::size_t i = 1; i < n; ++i) {
    for (bool moved = true; moved;) {
      moved = false;
      for (std::size_t j = 0; j < i; ++j)
        if (pts[i] == pts[j]) {
          pts[i].x += static_cast<double>(i) * kCoincidentEpsilon;
          pts[i].y += static_cast<double>(i) * kCoincidentEpsilon;
          moved = true;
        }
    }
  }
  g.centroids = pts;
  const auto tris = delaunay_triangles(pts);
  if (tris.empty()) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) g.connect(i, j);
    return g;
  }
  for (const auto& t : tris) {
    g.connect(t[0], t[1]);
    g.connect(t[1], t[2]);
    g.connect(t[2], t[0]);
  }
  return g;
}

/// Nodes at graph distance 1 or 2 from `node`, excluding the node itself.
inline std::set<std::size_t> hard_negative_set(const AdjacencyGraph& g, std::size_t node) {
  if (node >= g.size()) {
    throw ParameterError("hard_negative_set: node " + std::to_string(node) + " out of range for " +
                         std::to_string(g.size()) + " nodes");
  }
  std::set<std::size_t> out;
  for (auto j : g.neighbors(node)) {
    out.insert(j);
    for (auto k : g.neighbors(j)) out.insert(k);
  }
  out.erase(node);
  return out;
}

enum class Provenance : std::uint8_t { Adjacent, RandomFill, Duplicate };

inline const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::Adjacent: return "adjacent";
    case Provenance::RandomFill: return "random_fill";
    case Provenance::Duplicate: return "duplicate";
  }
  return "?";
}

struct NegativeBatch {
  std::size_t positive_index = 0;
  std::vector<std::size_t> negative_indices;
  std::vector<Provenance> provenance;
};

/// Fills batch - 1 negatives for candidate `gt`.
///
/// Hard negatives (gt removed) come first: all of them in ascending order
/// when they fit, otherwise a uniform random subset. Remaining slots take
/// random non-hard candidates, and if the image still has too few objects,
/// the chosen negatives are repeated in selection order.
inline NegativeBatch build_negative_batch(std::size_t candidates, std::size_t gt, const std::set<std::size_t>& hard,
                                          std::size_t batch, Rng& rng) {
  if (candidates == 0 || gt >= candidates) throw ParameterError("build_negative_batch: gt out of range");
  if (batch < 2) throw ParameterError("build_negative_batch: batch must be >= 2");
  if (candidates == 1) throw SampleError("no negatives: the image holds a single candidate");
  for (auto h : hard)
    if (h >= candidates) throw ParameterError("build_negative_batch: hard negative index out of range");

  const std::size_t need = batch - 1;
  std::vector<std::size_t> pool(hard.begin(), hard.end());
  std::erase(pool, gt);

  NegativeBatch out;
  out.positive_index = gt;
  if (pool.size() > need) {
    // Partial Fisher-Yates: the first `need` slots become the sample.
    for (std::size_t i = 0; i < need; ++i) {
      const auto j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
      std::swap(pool[i], pool[j]);
    }
    pool.resize(need);
  }
  for (auto i : pool) {
    out.negative_indices.push_back(i);
    out.provenance.push_back(Provenance::Adjacent);
  }

  if (out.negative_indices.size() < need) {
    std::vector<std::size_t> rest;
    for (std::size_t i = 0; i < candidates; ++i)
      if (i != gt && !hard.contains(i)) rest.push_back(i);
    rng.shuffle(rest);
    for (std::size_t i = 0; i < rest.size() && out.negative_indices.size() < need; ++i) {
      out.negative_indices.push_back(rest[i]);
      out.provenance.push_back(Provenance::RandomFill);
    }
  }

  const std::size_t selected = out.negative_indices.size();
  for (std::size_t k = 0; out.negative_indices.size() < need; ++k) {
    out.negative_indices.push_back(out.negative_indices[k % selected]);
    out.provenance.push_back(Provenance::Duplicate);
  }
  return out;
}

}  // namespace omama
