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

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "omama/error.hpp"

namespace omama {

/// Decoded binary mask, row-major, one byte per pixel (0 or 1).
struct BinaryGrid {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> cells;

  BinaryGrid() = default;
  BinaryGrid(std::size_t w, std::size_t h) : width(w), height(h), cells(w * h, 0) {}

  bool at(std::size_t x, std::size_t y) const { return cells[y * width + x] != 0; }
  void set(std::size_t x, std::size_t y, bool v = true) { cells[y * width + x] = v ? 1 : 0; }

  std::size_t count() const {
    std::size_t n = 0;
    for (auto c : cells) n += c;
    return n;
  }

  friend bool operator==(const BinaryGrid&, const BinaryGrid&) = default;
};

/// Run-length encoded binary mask.
///
/// Each row is encoded on its own as alternating background/foreground run
/// lengths, always starting with a background run (which is 0 when the row
/// starts in the foreground). Every run after the first is positive, so the
/// encoding of a grid is unique; runs of a row sum exactly to the width.
class MaskBitmap {
 public:
  MaskBitmap() = default;

  /// Validates the runs; throws CorruptionError on any inconsistency.
  MaskBitmap(std::size_t width, std::size_t height, std::vector<std::uint32_t> runs)
      : width_(width), height_(height), runs_(std::move(runs)) {
    validate();
  }

  static MaskBitmap encode(const BinaryGrid& g) {
    std::vector<std::uint32_t> runs;
    for (std::size_t y = 0; y < g.height; ++y) {
      bool fg = false;
      std::uint32_t run = 0;
      for (std::size_t x = 0; x < g.width; ++x) {
        if (g.at(x, y) == fg) {
          ++run;
        } else {
          runs.push_back(run);
          fg = !fg;
          run = 1;
        }
      }
      runs.push_back(run);
    }
    MaskBitmap m;
    m.width_ = g.width;
    m.height_ = g.height;
    m.runs_ = std::move(runs);
    return m;
  }

  /// An all-background mask.
  static MaskBitmap empty(std::size_t width, std::size_t height) { return encode(BinaryGrid(width, height)); }

  BinaryGrid decode() const {
    BinaryGrid g(width_, height_);
    std::size_t r = 0;
    for (std::size_t y = 0; y < height_; ++y) {
      std::size_t x = 0;
      bool fg = false;
      while (x < width_) {
        const std::uint32_t len = runs_[r++];
        if (fg)
          for (std::uint32_t k = 0; k < len; ++k) g.set(x + k, y);
        x += len;
        fg = !fg;
      }
      if (width_ == 0) ++r;
    }
    return g;
  }

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  const std::vector<std::uint32_t>& runs() const { return runs_; }

  std::size_t count() const {
    std::size_t n = 0, r = 0;
    for (std::size_t y = 0; y < height_; ++y) {
      std::size_t x = 0;
      bool fg = false;
      while (x < width_) {
        if (fg) n += runs_[r];
        x += runs_[r++];
        fg = !fg;
      }
      if (width_ == 0) ++r;
    }
    return n;
  }

  bool is_empty() const { return count() == 0; }

  friend bool operator==(const MaskBitmap&, const MaskBitmap&) = default;

 private:
  void validate() const {
    std::size_t r = 0;
    for (std::size_t y = 0; y < height_; ++y) {
      std::size_t x = 0;
      bool first = true;
      do {
        if (r >= runs_.size()) {
          throw CorruptionError("mask runs exhausted at row " + std::to_string(y) + " of " +
                                std::to_string(height_));
        }
        const std::uint32_t len = runs_[r++];
        if (len == 0 && !first) {
          throw CorruptionError("zero-length run inside row " + std::to_string(y));
        }
        x += len;
        first = false;
        if (x > width_) {
          throw CorruptionError("mask row " + std::to_string(y) + " runs sum past width " +
                                std::to_string(width_));
        }
      } while (x < width_);
    }
    if (r != runs_.size()) {
      throw CorruptionError("mask has " + std::to_string(runs_.size() - r) + " trailing runs");
    }
  }

  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<std::uint32_t> runs_;
};

}  // namespace omama
