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

// Segmentation metrics for a predicted mask against ground truth.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "omama/error.hpp"
#include "omama/mask.hpp"
#include "omama/mining.hpp"

namespace omama {

inline constexpr double kDefaultContourTolerance = 0.0075;

inline void require_same_grid(const BinaryGrid& a, const BinaryGrid& b, const char* what) {
  if (a.width != b.width || a.height != b.height) {
    throw ParameterError(std::string(what) + ": masks are " + std::to_string(a.width) + "x" +
                         std::to_string(a.height) + " and " + std::to_string(b.width) + "x" + std::to_string(b.height));
  }
}

/// Pixel-centre diagonal, so single pixels in opposite corners are exactly
/// one diagonal apart.
inline double grid_diagonal(std::size_t width, std::size_t height) {
  return std::hypot(static_cast<double>(width > 0 ? width - 1 : 0), static_cast<double>(height > 0 ? height - 1 : 0));
}

/// |a & b| / |a | b|; two empty masks score 1.
inline double iou(const BinaryGrid& a, const BinaryGrid& b) {
  require_same_grid(a, b, "iou");
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    inter += a.cells[i] & b.cells[i];
    uni += a.cells[i] | b.cells[i];
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

inline double iou(const MaskBitmap& a, const MaskBitmap& b) { return iou(a.decode(), b.decode()); }

/// Centroid distance over the image diagonal; nullopt if either mask is
/// empty (the sample is left out of the Loc.E average).
inline std::optional<double> location_error(const BinaryGrid& pred, const BinaryGrid& gt) {
  require_same_grid(pred, gt, "location_error");
  if (pred.count() == 0 || gt.count() == 0) return std::nullopt;
  const Point2 a = mask_centroid(pred), b = mask_centroid(gt);
  const double diag = grid_diagonal(gt.width, gt.height);
  if (diag == 0.0) return 0.0;
  return std::hypot(a.x - b.x, a.y - b.y) / diag;
}

inline std::optional<double> location_error(const MaskBitmap& pred, const MaskBitmap& gt) {
  return location_error(pred.decode(), gt.decode());
}

/// Foreground pixels with a 4-neighbour in the background or on the image edge.
inline BinaryGrid boundary(const BinaryGrid& g) {
  BinaryGrid out(g.width, g.height);
  for (std::size_t y = 0; y < g.height; ++y)
    for (std::size_t x = 0; x < g.width; ++x) {
      if (!g.at(x, y)) continue;
      const bool edge = x == 0 || y == 0 || x + 1 == g.width || y + 1 == g.height;
      if (edge || !g.at(x - 1, y) || !g.at(x + 1, y) || !g.at(x, y - 1) || !g.at(x, y + 1)) out.set(x, y);
    }
  return out;
}

namespace detail {

/// Fraction of `from` boundary pixels within `tol` (Euclidean) of a `to` pixel.
inline double matched_fraction(const BinaryGrid& from, const BinaryGrid& to, double tol) {
  const auto r = static_cast<long>(std::floor(tol));
  const double tol2 = tol * tol;
  std::size_t total = 0, hit = 0;
  const auto w = static_cast<long>(from.width), h = static_cast<long>(from.height);
  for (long y = 0; y < h; ++y)
    for (long x = 0; x < w; ++x) {
      if (!from.at(static_cast<std::size_t>(x), static_cast<std::size_t>(y))) continue;
      ++total;
      bool found = false;
      for (long dy = -r; dy <= r && !found; ++dy)
        for (long dx = -r; dx <= r && !found; ++dx) {
          const long xx = x + dx, yy = y + dy;
          if (xx < 0 || yy < 0 || xx >= w || yy >= h) continue;
          if (static_cast<double>(dx * dx + dy * dy) > tol2) continue;
          found = to.at(static_cast<std::size_t>(xx), static_cast<std::size_t>(yy));
        }
      hit += found;
    }
  return total == 0 ? 0.0 : static_cast<double>(hit) / static_cast<double>(total);
}

}  // namespace detail

/// Boundary F-measure with a match tolerance of tol_frac * diagonal pixels.
inline double contour_accuracy(const BinaryGrid& pred, const BinaryGrid& gt,
                               double tol_frac = kDefaultContourTolerance) {
  require_same_grid(pred, gt, "contour_accuracy");
  const BinaryGrid bp = boundary(pred), bg = boundary(gt);
  const std::size_t np = bp.count(), ng = bg.count();
  if (np == 0 && ng == 0) return 1.0;
  if (np == 0 || ng == 0) return 0.0;
  const double tol = tol_frac * grid_diagonal(gt.width, gt.height);
  const double precision = detail::matched_fraction(bp, bg, tol);
  const double recall = detail::matched_fraction(bg, bp, tol);
  return precision + recall == 0.0 ? 0.0 : 2.0 * precision * recall / (precision + recall);
}

inline double contour_accuracy(const MaskBitmap& pred, const MaskBitmap& gt,
                               double tol_frac = kDefaultContourTolerance) {
  return contour_accuracy(pred.decode(), gt.decode(), tol_frac);
}

}  // namespace omama
