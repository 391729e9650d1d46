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

// Training checkpoint (.ommc). Layout, little-endian:
//
//   "OMMC" | version u16 | step u64 | config_hash u64 |
//   config_len u32 | config JSON (UTF-8) |
//   d d_k max_tokens hidden d_f : u32 each |
//   tensor_count u32 | per tensor: name_len u16, name, rank u8,
//                                  dims u32[rank], values f64[] |
//   adam_t u64 | adam_skipped u64 | per tensor: m f64[], v f64[] |
//   rng_seed u64 | rng_counter u64 | epoch_seen u64 | epoch_skipped u64
//
// Values are stored as raw IEEE-754 doubles, so a reload is bit-exact.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "omama/config.hpp"
#include "omama/error.hpp"
#include "omama/model.hpp"
#include "omama/pack.hpp"

namespace omama {

inline constexpr std::uint16_t kCheckpointVersion = 1;

struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::uint64_t t = 0;
  std::uint64_t skipped = 0;
};

struct Checkpoint {
  std::uint64_t step = 0;
  RunConfig config;
  ModelParams params;
  AdamState adam;
  // Batch sampling draws from Rng(rng_seed ^ sample_index); rng_counter is
  // the next sample index.
  std::uint64_t rng_seed = 0;
  std::uint64_t rng_counter = 0;
  std::uint64_t epoch_seen = 0;
  std::uint64_t epoch_skipped = 0;
};

inline std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& c) {
  detail::ByteWriter w;
  w.bytes("OMMC");
  w.u16(kCheckpointVersion);
  w.u64(c.step);
  w.u64(c.config.hash());
  const std::string cfg = c.config.to_json().dump();
  w.u32(static_cast<std::uint32_t>(cfg.size()));
  w.bytes(cfg);
  const auto& dims = c.params.dims;
  for (auto v : {dims.d, dims.d_k, dims.max_tokens, dims.hidden, dims.d_f}) w.u32(static_cast<std::uint32_t>(v));

  std::uint32_t count = 0;
  c.params.for_each([&](const std::string&, const Tensor&) { ++count; });
  w.u32(count);
  c.params.for_each([&](const std::string& name, const Tensor& t) {
    w.u16(static_cast<std::uint16_t>(name.size()));
    w.bytes(name);
    w.u8(static_cast<std::uint8_t>(t.rank()));
    for (auto d : t.shape()) w.u32(static_cast<std::uint32_t>(d));
    for (double v : t.data()) w.f64(v);
  });
  w.u64(c.adam.t);
  w.u64(c.adam.skipped);
  std::size_t i = 0;
  c.params.for_each([&](const std::string& name, const Tensor& t) {
    const bool have = i < c.adam.m.size();
    for (const auto* src : {have ? &c.adam.m[i] : nullptr, have ? &c.adam.v[i] : nullptr}) {
      if (src && src->size() != t.size()) throw ValidationError("optimizer moment shape differs for " + name);
      for (std::size_t k = 0; k < t.size(); ++k) w.f64(src ? (*src)[k] : 0.0);
    }
    ++i;
  });
  w.u64(c.rng_seed);
  w.u64(c.rng_counter);
  w.u64(c.epoch_seen);
  w.u64(c.epoch_skipped);
  return std::move(w.buffer());
}

inline Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes);
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "OMMC", 4) != 0) throw FormatError("not a checkpoint: bad magic");
  r.str(4);
  const auto version = r.u16();
  if (version != kCheckpointVersion) throw FormatError("unsupported checkpoint version " + std::to_string(version));
  Checkpoint c;
  c.step = r.u64();
  const std::uint64_t hash = r.u64();
  const std::string cfg = r.str(r.u32());
  auto j = RunConfig::Json::parse(cfg, nullptr, false);
  if (j.is_discarded()) throw CorruptionError("checkpoint config is not valid JSON");
  c.config = RunConfig::from_json(j);
  if (c.config.hash() != hash) throw CorruptionError("checkpoint config hash mismatch");
  auto& dims = c.params.dims;
  dims.d = r.u32();
  dims.d_k = r.u32();
  dims.max_tokens = r.u32();
  dims.hidden = r.u32();
  dims.d_f = r.u32();

  std::vector<std::string> expected;
  c.params.for_each([&](const std::string& name, Tensor&) { expected.push_back(name); });
  if (r.u32() != expected.size()) throw CorruptionError("checkpoint tensor count mismatch");
  std::size_t idx = 0;
  c.params.for_each([&](const std::string& name, Tensor& t) {
    const std::string got = r.str(r.u16());
    if (got != name) throw CorruptionError("checkpoint tensor " + std::to_string(idx) + " is '" + got + "', expected '" + name + "'");
    Shape shape(r.u8());
    for (auto& d : shape) d = r.u32();
    r.need(shape_size(shape) * 8);
    std::vector<double> data(shape_size(shape));
    for (auto& v : data) v = r.f64();
    t = Tensor(std::move(shape), std::move(data));
    ++idx;
  });
  c.adam.t = r.u64();
  c.adam.skipped = r.u64();
  c.params.for_each([&](const std::string&, const Tensor& t) {
    for (auto* dst : {&c.adam.m, &c.adam.v}) {
      r.need(t.size() * 8);
      std::vector<double> data(t.size());
      for (auto& v : data) v = r.f64();
      dst->emplace_back(t.shape(), std::move(data));
    }
  });
  c.rng_seed = r.u64();
  c.rng_counter = r.u64();
  c.epoch_seen = r.u64();
  c.epoch_skipped = r.u64();
  if (r.remaining() != 0) throw CorruptionError("trailing bytes after checkpoint");
  return c;
}

inline void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path) {
  const auto bytes = encode_checkpoint(c);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace omama
