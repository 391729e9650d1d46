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

// Feature pack container (.ommp): one source/destination sample.
//
// Layout, all integers little-endian:
//   "OMMP" | version u16 | direction u8 | d u16 | H_s W_s H_d W_d u16 |
//   N u16 | flags u8 | source features f32[H_s*W_s*d] |
//   dest features f32[H_d*W_d*d] | source mask RLE | N candidate RLEs |
//   [gt_index u16] | [gt_mask RLE]
// An RLE block is a u32 run count followed by that many u32 runs.
// flags: bit0 visible, bit1 gt_index present, bit2 gt_mask present.
// Masks live on the engine's working grid, kMaskScale times the feature
// grid in each direction.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "omama/error.hpp"
#include "omama/mask.hpp"
#include "omama/tensor.hpp"

namespace omama {

inline constexpr std::uint16_t kPackVersion = 1;
inline constexpr std::size_t kMaskScale = 4;

enum class Direction : std::uint8_t { Ego2Exo = 0, Exo2Ego = 1 };

inline const char* to_string(Direction d) { return d == Direction::Ego2Exo ? "Ego2Exo" : "Exo2Ego"; }

struct FeaturePack {
  std::uint16_t version = kPackVersion;
  Direction direction = Direction::Ego2Exo;
  Tensor source_features;  // H_s x W_s x d
  Tensor dest_features;    // H_d x W_d x d
  MaskBitmap source_mask;
  std::vector<MaskBitmap> candidates;
  std::optional<std::size_t> gt_index;
  std::optional<MaskBitmap> gt_mask;
  bool visible = true;

  std::size_t dim() const { return source_features.rank() == 3 ? source_features.dim(2) : 0; }

  friend bool operator==(const FeaturePack&, const FeaturePack&) = default;
};

/// Throws ValidationError when a pack invariant does not hold.
inline void validate_pack(const FeaturePack& p) {
  auto fail = [](const std::string& m) { throw ValidationError("invalid pack: " + m); };
  if (p.version != kPackVersion) fail("unsupported version " + std::to_string(p.version));
  if (p.source_features.rank() != 3 || p.dest_features.rank() != 3) fail("feature maps must be H x W x d");
  if (p.source_features.dim(2) != p.dest_features.dim(2)) fail("source and destination feature widths differ");
  for (const Tensor* t : {&p.source_features, &p.dest_features}) {
    for (std::size_t i = 0; i < 3; ++i)
      if (t->dim(i) == 0 || t->dim(i) > 0xFFFF) fail("feature dimension out of u16 range");
    if (!t->all_finite()) fail("feature map holds non-finite values");
  }
  if (p.candidates.size() > 0xFFFF) fail("too many candidates");
  const std::size_t sw = p.source_features.dim(1) * kMaskScale, sh = p.source_features.dim(0) * kMaskScale;
  const std::size_t dw = p.dest_features.dim(1) * kMaskScale, dh = p.dest_features.dim(0) * kMaskScale;
  if (p.source_mask.width() != sw || p.source_mask.height() != sh) fail("source mask grid does not match source view");
  for (const auto& c : p.candidates)
    if (c.width() != dw || c.height() != dh) fail("candidate mask grid does not match destination view");
  if (p.gt_mask && (p.gt_mask->width() != dw || p.gt_mask->height() != dh))
    fail("gt mask grid does not match destination view");
  if (p.gt_index && *p.gt_index >= p.candidates.size()) fail("gt_index out of range");
  if (!p.visible && (p.gt_index || p.gt_mask)) fail("invisible sample carries ground truth");
}

namespace detail {

class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u16(std::uint16_t v) {
    for (int i = 0; i < 2; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void bytes(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }
  std::vector<std::uint8_t>& buffer() { return buf_; }

 private:
  std::vector<std::uint8_t> buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

  void need(std::size_t n) const {
    if (pos_ + n > data_.size()) {
      throw LengthError("truncated input: expected at least " + std::to_string(pos_ + n) + " bytes, got " +
                        std::to_string(data_.size()));
    }
  }
  std::uint8_t u8() {
    need(1);
    return data_[pos_++];
  }
  std::uint16_t u16() {
    need(2);
    std::uint16_t v = static_cast<std::uint16_t>(data_[pos_] | (data_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(data_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

inline void write_rle(ByteWriter& w, const MaskBitmap& m) {
  w.u32(static_cast<std::uint32_t>(m.runs().size()));
  for (auto r : m.runs()) w.u32(r);
}

inline MaskBitmap read_rle(ByteReader& r, std::size_t width, std::size_t height) {
  const std::uint32_t count = r.u32();
  r.need(std::size_t{count} * 4);
  std::vector<std::uint32_t> runs(count);
  for (auto& v : runs) v = r.u32();
  return MaskBitmap(width, height, std::move(runs));
}

inline Tensor read_features(ByteReader& r, std::size_t h, std::size_t w, std::size_t d) {
  const std::size_t n = h * w * d;
  r.need(n * 4);
  std::vector<double> data(n);
  for (auto& v : data) {
    v = static_cast<double>(r.f32());
    if (!std::isfinite(v)) throw CorruptionError("feature map holds a non-finite value");
  }
  return Tensor({h, w, d}, std::move(data));
}

}  // namespace detail

/// Serializes a pack. Validation runs before anything is produced.
inline std::vector<std::uint8_t> encode_pack(const FeaturePack& p) {
  validate_pack(p);
  detail::ByteWriter w;
  w.bytes("OMMP");
  w.u16(p.version);
  w.u8(static_cast<std::uint8_t>(p.direction));
  w.u16(static_cast<std::uint16_t>(p.dim()));
  w.u16(static_cast<std::uint16_t>(p.source_features.dim(0)));
  w.u16(static_cast<std::uint16_t>(p.source_features.dim(1)));
  w.u16(static_cast<std::uint16_t>(p.dest_features.dim(0)));
  w.u16(static_cast<std::uint16_t>(p.dest_features.dim(1)));
  w.u16(static_cast<std::uint16_t>(p.candidates.size()));
  std::uint8_t flags = 0;
  if (p.visible) flags |= 1;
  if (p.gt_index) flags |= 2;
  if (p.gt_mask) flags |= 4;
  w.u8(flags);
  for (double v : p.source_features.data()) w.f32(static_cast<float>(v));
  for (double v : p.dest_features.data()) w.f32(static_cast<float>(v));
  detail::write_rle(w, p.source_mask);
  for (const auto& c : p.candidates) detail::write_rle(w, c);
  if (p.gt_index) w.u16(static_cast<std::uint16_t>(*p.gt_index));
  if (p.gt_mask) detail::write_rle(w, *p.gt_mask);
  return std::move(w.buffer());
}

inline std::size_t write_pack(const FeaturePack& p, std::ostream& sink) {
  const auto bytes = encode_pack(p);
  sink.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!sink) throw Error("write_pack: stream write failed");
  return bytes.size();
}

inline FeaturePack decode_pack(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes);
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "OMMP", 4) != 0) throw FormatError("not a feature pack: bad magic");
  r.str(4);
  FeaturePack p;
  p.version = r.u16();
  if (p.version != kPackVersion) throw FormatError("unsupported pack version " + std::to_string(p.version));
  const std::uint8_t dir = r.u8();
  if (dir > 1) throw FormatError("unknown direction code " + std::to_string(dir));
  p.direction = static_cast<Direction>(dir);
  const std::size_t d = r.u16();
  const std::size_t hs = r.u16(), ws = r.u16(), hd = r.u16(), wd = r.u16();
  const std::size_t n = r.u16();
  const std::uint8_t flags = r.u8();
  if (flags & ~std::uint8_t{7}) throw FormatError("unknown flag bits set");
  if (d == 0 || hs == 0 || ws == 0 || hd == 0 || wd == 0) throw FormatError("zero feature dimension in header");
  p.visible = flags & 1;
  p.source_features = detail::read_features(r, hs, ws, d);
  p.dest_features = detail::read_features(r, hd, wd, d);
  p.source_mask = detail::read_rle(r, ws * kMaskScale, hs * kMaskScale);
  p.candidates.reserve(n);
  for (std::size_t i = 0; i < n; ++i) p.candidates.push_back(detail::read_rle(r, wd * kMaskScale, hd * kMaskScale));
  if (flags & 2) p.gt_index = r.u16();
  if (flags & 4) p.gt_mask = detail::read_rle(r, wd * kMaskScale, hd * kMaskScale);
  if (r.remaining() != 0) throw CorruptionError(std::to_string(r.remaining()) + " trailing bytes after pack");
  validate_pack(p);
  return p;
}

inline FeaturePack read_pack(std::istream& source) {
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(source)), std::istreambuf_iterator<char>());
  return decode_pack(bytes);
}

inline FeaturePack load_pack(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open pack " + path.string());
  return read_pack(in);
}

inline std::size_t save_pack(const FeaturePack& p, const std::filesystem::path& path) {
  const auto bytes = encode_pack(p);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  return bytes.size();
}

/// Reads a manifest: one relative pack path per line, resolved against the
/// manifest's directory. Blank lines are skipped.
inline std::vector<std::filesystem::path> read_manifest(const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw Error("cannot open manifest " + manifest.string());
  std::vector<std::filesystem::path> out;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line.empty()) continue;
    out.push_back(manifest.parent_path() / line);
  }
  return out;
}

inline void write_manifest(const std::filesystem::path& manifest, const std::vector<std::string>& entries) {
  std::ofstream out(manifest);
  if (!out) throw Error("cannot create " + manifest.string());
  for (const auto& e : entries) out << e << '\n';
}

}  // namespace omama
