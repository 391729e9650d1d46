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

// Mask-context encoder: object and context descriptors by average pooling
// a 4x bilinearly upsampled feature map over a mask and over the mask's
// extended bounding box.

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "omama/error.hpp"
#include "omama/mask.hpp"
#include "omama/ops.hpp"
#include "omama/pack.hpp"
#include "omama/tensor.hpp"

namespace omama {

inline constexpr int kUpsampleFactor = 4;
inline constexpr double kDefaultContextMargin = 0.5;

/// Inclusive pixel bounds on the upsampled grid.
struct BBox {
  std::size_t x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  std::size_t width() const { return x1 - x0 + 1; }
  std::size_t height() const { return y1 - y0 + 1; }
  friend bool operator==(const BBox&, const BBox&) = default;
};

struct MaskDescriptor {
  std::vector<double> object;
  std::vector<double> context;
  std::optional<std::vector<double>> cross_view;
};

/// Nearest-neighbour resample of a mask to a (width x height) grid using
/// pixel centres; identity when the sizes already agree.
inline BinaryGrid resample_mask(const BinaryGrid& m, std::size_t width, std::size_t height) {
  if (m.width == width && m.height == height) return m;
  BinaryGrid out(width, height);
  for (std::size_t y = 0; y < height; ++y) {
    const auto sy = std::min(m.height - 1, static_cast<std::size_t>((static_cast<double>(y) + 0.5) *
                                                                     static_cast<double>(m.height) /
                                                                     static_cast<double>(height)));
    for (std::size_t x = 0; x < width; ++x) {
      const auto sx = std::min(m.width - 1, static_cast<std::size_t>((static_cast<double>(x) + 0.5) *
                                                                      static_cast<double>(m.width) /
                                                                      static_cast<double>(width)));
      out.set(x, y, m.at(sx, sy));
    }
  }
  return out;
}

/// Tight bounding box of the foreground, or nullopt for an empty grid.
inline std::optional<BBox> tight_bbox(const BinaryGrid& g) {
  std::optional<BBox> box;
  for (std::size_t y = 0; y < g.height; ++y)
    for (std::size_t x = 0; x < g.width; ++x) {
      if (!g.at(x, y)) continue;
      if (!box) {
        box = BBox{x, y, x, y};
      } else {
        box->x0 = std::min(box->x0, x);
        box->x1 = std::max(box->x1, x);
        box->y0 = std::min(box->y0, y);
        box->y1 = std::max(box->y1, y);
      }
    }
  return box;
}

/// Pads a box by round(margin * max side) pixels on every side and clamps it
/// to a width x height image.
inline BBox extend_bbox(const BBox& b, double margin, std::size_t width, std::size_t height) {
  if (!(margin >= 0.0)) throw ParameterError("context margin must be >= 0");
  const auto side = static_cast<double>(std::max(b.width(), b.height()));
  const auto pad = static_cast<std::size_t>(std::lround(margin * side));
  return BBox{b.x0 > pad ? b.x0 - pad : 0, b.y0 > pad ? b.y0 - pad : 0, std::min(width - 1, b.x1 + pad),
              std::min(height - 1, b.y1 + pad)};
}

/// Upsampled feature map of one view, shared by every mask pooled from it.
class PooledView {
 public:
  explicit PooledView(const Tensor& features, int factor = kUpsampleFactor)
      : up_(ops::bilinear_upsample(features, factor)) {}

  std::size_t width() const { return up_.dim(1); }
  std::size_t height() const { return up_.dim(0); }
  std::size_t dim() const { return up_.dim(2); }
  const Tensor& upsampled() const { return up_; }

  /// Mask on this view's grid (resampled if needed); throws on empty.
  BinaryGrid project(const MaskBitmap& mask) const {
    BinaryGrid g = resample_mask(mask.decode(), width(), height());
    if (g.count() == 0) throw EmptyMaskError("mask is empty on the upsampled grid");
    return g;
  }

  /// Mean feature over foreground pixels, accumulated in row-major order.
  std::vector<double> pool_mask(const BinaryGrid& g) const {
    std::vector<double> acc(dim(), 0.0);
    std::size_t n = 0;
    for (std::size_t y = 0; y < height(); ++y)
      for (std::size_t x = 0; x < width(); ++x) {
        if (!g.at(x, y)) continue;
        for (std::size_t c = 0; c < dim(); ++c) acc[c] += up_(y, x, c);
        ++n;
      }
    if (n == 0) throw EmptyMaskError("cannot pool an empty mask");
    for (double& v : acc) v /= static_cast<double>(n);
    return acc;
  }

  /// Mean feature over every pixel inside an inclusive box.
  std::vector<double> pool_box(const BBox& b) const {
    std::vector<double> acc(dim(), 0.0);
    for (std::size_t y = b.y0; y <= b.y1; ++y)
      for (std::size_t x = b.x0; x <= b.x1; ++x)
        for (std::size_t c = 0; c < dim(); ++c) acc[c] += up_(y, x, c);
    const auto n = static_cast<double>(b.width() * b.height());
    for (double& v : acc) v /= n;
    return acc;
  }

  BBox context_box(const BinaryGrid& g, double margin) const {
    const auto box = tight_bbox(g);
    if (!box) throw EmptyMaskError("cannot box an empty mask");
    return extend_bbox(*box, margin, width(), height());
  }

  MaskDescriptor describe(const MaskBitmap& mask, double margin) const {
    const BinaryGrid g = project(mask);
    return MaskDescriptor{pool_mask(g), pool_box(context_box(g, margin)), std::nullopt};
  }

 private:
  Tensor up_;
};

/// Object descriptor o = mean of the upsampled features under the mask.
inline std::vector<double> object_descriptor(const MaskBitmap& mask, const Tensor& features) {
  const PooledView view(features);
  return view.pool_mask(view.project(mask));
}

/// Context descriptor c = mean of the upsampled features over the mask's
/// extended bounding box.
inline std::vector<double> context_descriptor(const MaskBitmap& mask, const Tensor& features, double margin) {
  const PooledView view(features);
  const BinaryGrid g = view.project(mask);
  return view.pool_box(view.context_box(g, margin));
}

struct EncodedSample {
  MaskDescriptor source;
  std::vector<MaskDescriptor> candidates;
  std::vector<std::size_t> kept_indices;  // into pack.candidates
};

/// Describes the source mask and every candidate. Candidates that vanish on
/// the upsampled grid are dropped; an empty source mask is a SampleError.
inline EncodedSample encode_all(const FeaturePack& pack, double margin) {
  const PooledView src(pack.source_features);
  const PooledView dst(pack.dest_features);
  EncodedSample out;
  try {
    out.source = src.describe(pack.source_mask, margin);
  } catch (const EmptyMaskError&) {
    throw SampleError("source mask is empty");
  }
  for (std::size_t i = 0; i < pack.candidates.size(); ++i) {
    try {
      out.candidates.push_back(dst.describe(pack.candidates[i], margin));
      out.kept_indices.push_back(i);
    } catch (const EmptyMaskError&) {
      // dropped
    }
  }
  return out;
}

}  // namespace omama
