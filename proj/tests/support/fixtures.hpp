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

// Hand-built packs and byte-level corruptions of them.

#include <cstring>
#include <functional>
#include <string>
#include <vector>

#include "omama/omama.hpp"
#include "support/oracles.hpp"

namespace omama::testing {

/// 2x2 views, d = 2, three candidates, gt at 1.
inline FeaturePack small_pack() {
  FeaturePack p;
  p.source_features = Tensor({2, 2, 2}, {0, 1, 2, 3, 4, 5, 6, 7});
  p.dest_features = Tensor({2, 2, 2}, {7, 6, 5, 4, 3, 2, 1, 0});
  p.source_mask = MaskBitmap::encode(rect_grid(8, 8, 1, 1, 3, 3));
  p.candidates = {MaskBitmap::encode(rect_grid(8, 8, 0, 0, 2, 2)), MaskBitmap::encode(rect_grid(8, 8, 4, 4, 7, 7)),
                  MaskBitmap::encode(rect_grid(8, 8, 0, 5, 2, 7))};
  p.gt_index = 1;
  p.visible = true;
  return p;
}

/// A small synthetic world that trains in well under a second.
inline SyntheticConfig tiny_synthetic(std::size_t packs, std::uint64_t seed = 0) {
  SyntheticConfig c;
  c.packs = packs;
  c.objects = 4;
  c.dim = 6;
  c.distractor_parts = 1;
  c.src_height = c.src_width = c.dst_height = c.dst_width = 12;
  c.min_side = 8;
  c.max_side = 12;
  c.min_gap = 4;
  c.variant_dims = 2;
  c.seed = seed;
  c.world_seed = seed;
  return c;
}

/// Model and optimizer settings sized for tiny_synthetic.
inline RunConfig tiny_run(std::size_t steps, std::uint64_t seed = 0) {
  RunConfig r;
  r.mining.batch_size = 4;
  r.mining.seed = seed;
  r.train.seed = seed;
  r.train.steps = steps;
  r.head.hidden = 32;
  r.head.d_f = 16;
  r.attn.max_tokens = 256;
  return r;
}

enum class ErrorKind { Format, Length, Corruption, Validation };

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::Format: return "FormatError";
    case ErrorKind::Length: return "LengthError";
    case ErrorKind::Corruption: return "CorruptionError";
    case ErrorKind::Validation: return "ValidationError";
  }
  return "?";
}

struct CorruptCase {
  std::string name;
  std::vector<std::uint8_t> bytes;
  ErrorKind expected;
};

inline constexpr std::size_t kPackHeaderBytes = 20;

inline void put_u32(std::vector<std::uint8_t>& b, std::size_t at, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b[at + i] = static_cast<std::uint8_t>(v >> (8 * i));
}

/// Every malformed input the reader must reject, with the expected class.
inline std::vector<CorruptCase> corruption_cases() {
  const FeaturePack p = small_pack();
  const auto good = encode_pack(p);
  const std::size_t features = 4 * (p.source_features.size() + p.dest_features.size());
  const std::size_t source_rle = kPackHeaderBytes + features;
  std::vector<CorruptCase> out;

  auto bad_magic = good;
  std::memcpy(bad_magic.data(), "XXXX", 4);
  out.push_back({"bad magic", bad_magic, ErrorKind::Format});
  out.push_back({"short magic", {'O', 'M'}, ErrorKind::Format});

  auto version = good;
  version[4] = 9;
  out.push_back({"unknown version", version, ErrorKind::Format});

  auto direction = good;
  direction[6] = 5;
  out.push_back({"unknown direction", direction, ErrorKind::Format});

  auto flags = good;
  flags[kPackHeaderBytes - 1] |= 0x80;
  out.push_back({"unknown flag bits", flags, ErrorKind::Format});

  out.push_back({"truncated header", {good.begin(), good.begin() + 12}, ErrorKind::Length});
  out.push_back({"truncated features", {good.begin(), good.begin() + kPackHeaderBytes + 10}, ErrorKind::Length});
  out.push_back({"truncated masks", {good.begin(), good.end() - 3}, ErrorKind::Length});

  auto runs = good;
  put_u32(runs, source_rle + 4, 9);  // first row now longer than the 8-pixel width
  out.push_back({"rle row overflows width", runs, ErrorKind::Corruption});

  auto short_row = good;
  put_u32(short_row, source_rle + 4 + 8, 0);  // row 1 is [1, 3, 4]; zero its foreground run
  out.push_back({"rle zero interior run", short_row, ErrorKind::Corruption});

  auto nan = good;
  put_u32(nan, kPackHeaderBytes, 0x7fc00000u);
  out.push_back({"non-finite feature", nan, ErrorKind::Corruption});

  auto trailing = good;
  trailing.push_back(0);
  out.push_back({"trailing byte", trailing, ErrorKind::Corruption});

  auto invisible = good;
  invisible[kPackHeaderBytes - 1] &= static_cast<std::uint8_t>(~1u);
  out.push_back({"invisible with gt_index", invisible, ErrorKind::Validation});

  auto gt_range = good;
  gt_range[gt_range.size() - 2] = 7;
  out.push_back({"gt_index out of range", gt_range, ErrorKind::Validation});
  return out;
}

/// Runs `fn`, returning the error class it raised, or nullopt.
inline std::optional<ErrorKind> raised(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const FormatError&) {
    return ErrorKind::Format;
  } catch (const LengthError&) {
    return ErrorKind::Length;
  } catch (const CorruptionError&) {
    return ErrorKind::Corruption;
  } catch (const ValidationError&) {
    return ErrorKind::Validation;
  }
  return std::nullopt;
}

}  // namespace omama::testing
