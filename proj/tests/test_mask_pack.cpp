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


#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "support/fixtures.hpp"

namespace {

using namespace omama;
using namespace omama::testing;

TEST(MaskBitmap, EmptyDecodesToBackground) {
  const BinaryGrid g = MaskBitmap::empty(5, 3).decode();
  EXPECT_EQ(g.count(), 0u);
  EXPECT_EQ(g.width, 5u);
}

TEST(MaskBitmap, FullRowsDecodeToForeground) {
  const MaskBitmap m(4, 2, {0, 4, 0, 4});
  EXPECT_EQ(m.decode().count(), 8u);
  EXPECT_EQ(MaskBitmap::encode(m.decode()), m);
}

TEST(MaskBitmap, RowSumMismatchIsCorruption) {
  EXPECT_THROW(MaskBitmap(4, 1, {1, 2}), CorruptionError);
  EXPECT_THROW(MaskBitmap(4, 1, {2, 3}), CorruptionError);
  EXPECT_THROW(MaskBitmap(4, 1, {4, 0}), CorruptionError);
  EXPECT_THROW(MaskBitmap(4, 2, {4}), CorruptionError);
}

TEST(MaskBitmap, RandomGridsRoundTrip) {
  Rng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const BinaryGrid g = random_grid(1 + rng.below(20), 1 + rng.below(20), rng, rng.uniform());
    const MaskBitmap m = MaskBitmap::encode(g);
    EXPECT_EQ(m.decode(), g);
    EXPECT_EQ(m.count(), g.count());
    EXPECT_EQ(MaskBitmap(g.width, g.height, m.runs()), m);
  }
}

TEST(Pack, MinimalPackRoundTrips) {
  const FeaturePack p = small_pack();
  std::stringstream s;
  const std::size_t n = write_pack(p, s);
  EXPECT_EQ(n, s.str().size());
  EXPECT_EQ(read_pack(s), p);
}

TEST(Pack, HundredRandomPacksAreByteStable) {
  Rng rng(1234);
  for (int i = 0; i < 100; ++i) {
    const FeaturePack p = random_pack(rng);
    const auto bytes = encode_pack(p);
    const FeaturePack q = decode_pack(bytes);
    EXPECT_EQ(q, p) << "pack " << i;
    EXPECT_EQ(encode_pack(q), bytes) << "pack " << i;
  }
}

TEST(Pack, InvisibleWithGroundTruthRejectedBeforeWriting) {
  FeaturePack p = small_pack();
  p.visible = false;
  std::stringstream s;
  EXPECT_THROW(write_pack(p, s), ValidationError);
  EXPECT_TRUE(s.str().empty());
}

TEST(Pack, MismatchedMaskGridRejected) {
  FeaturePack p = small_pack();
  p.candidates[0] = MaskBitmap::empty(7, 8);
  EXPECT_THROW(encode_pack(p), ValidationError);
}

TEST(Pack, TruncationNamesByteCounts) {
  const auto good = encode_pack(small_pack());
  const std::vector<std::uint8_t> cut(good.begin(), good.begin() + 30);
  try {
    decode_pack(cut);
    FAIL() << "no error";
  } catch (const LengthError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("got 30"), std::string::npos) << msg;
    EXPECT_NE(msg.find("expected at least"), std::string::npos) << msg;
  }
}

class Corruption : public ::testing::TestWithParam<CorruptCase> {};

TEST_P(Corruption, RejectedWithExpectedClass) {
  const auto& c = GetParam();
  const auto got = raised([&] { decode_pack(c.bytes); });
  ASSERT_TRUE(got.has_value()) << c.name << " was accepted";
  EXPECT_EQ(to_string(*got), std::string(to_string(c.expected))) << c.name;
}

INSTANTIATE_TEST_SUITE_P(Fixtures, Corruption, ::testing::ValuesIn(corruption_cases()), [](const auto& info) {
  std::string n = info.param.name;
  for (char& ch : n)
    if (!std::isalnum(static_cast<unsigned char>(ch))) ch = '_';
  return n;
});

TEST(Manifest, ResolvesRelativeToItsDirectory) {
  const auto dir = std::filesystem::temp_directory_path() / "omama_manifest_test";
  std::filesystem::create_directories(dir);
  save_pack(small_pack(), dir / "a.ommp");
  write_manifest(dir / "manifest.txt", {"a.ommp", "", "a.ommp"});
  const auto files = read_manifest(dir / "manifest.txt");
  ASSERT_EQ(files.size(), 2u);
  EXPECT_EQ(files[0], dir / "a.ommp");
  EXPECT_EQ(load_pack(files[1]), small_pack());
  std::filesystem::remove_all(dir);
}

}  // namespace
