// Copyright 2026 The scene-robust Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <set>
#include <string>

#include "scene_robust/corruption/engine.hpp"

namespace scene_robust {
namespace {

TEST(Philox, KnownAnswerZeroKeyZeroCounter) {
  // Random123 reference vector for philox4x32-10.
  const auto out = Philox::round10({0, 0, 0, 0}, {0, 0});
  EXPECT_EQ(out[0], 0x6627e8d5u);
  EXPECT_EQ(out[1], 0xe169c58du);
  EXPECT_EQ(out[2], 0xbc57ac4cu);
  EXPECT_EQ(out[3], 0x9b00dbd8u);
}

TEST(Philox, KnownAnswerAllOnes) {
  const auto out = Philox::round10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
  EXPECT_EQ(out[0], 0x408f276du);
  EXPECT_EQ(out[1], 0x41c83b0eu);
  EXPECT_EQ(out[2], 0xa20bc7c6u);
  EXPECT_EQ(out[3], 0x6d5451fdu);
}

TEST(Philox, StreamsAreIndependentOfDrawInterleaving) {
  Philox a(42), b(43);
  std::vector<std::uint32_t> a_alone;
  {
    Philox x(42);
    for (int i = 0; i < 16; ++i) a_alone.push_back(x());
  }
  for (int i = 0; i < 16; ++i) {
    EXPECT_EQ(a(), a_alone[static_cast<std::size_t>(i)]);
    b();
  }
}

TEST(Philox, UniformInUnitInterval) {
  Philox r(7);
  double sum = 0;
  for (int i = 0; i < 100000; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / 100000, 0.5, 0.005);
}

TEST(DeriveSeed, PureFunction) {
  const SeverityLevel l3(3);
  EXPECT_EQ(derive_seed(11, "img1", CorruptionKind::fog, l3), derive_seed(11, "img1", CorruptionKind::fog, l3));
}

TEST(DeriveSeed, LevelAndImageChangeTheSeed) {
  const std::uint64_t s = 1234;
  EXPECT_NE(derive_seed(s, "img1", CorruptionKind::gaussian_noise, SeverityLevel(1)),
            derive_seed(s, "img1", CorruptionKind::gaussian_noise, SeverityLevel(2)));
  EXPECT_NE(derive_seed(s, "img1", CorruptionKind::snow, SeverityLevel(4)),
            derive_seed(s, "img2", CorruptionKind::snow, SeverityLevel(4)));
  EXPECT_NE(derive_seed(s, "img1", CorruptionKind::snow, SeverityLevel(4)),
            derive_seed(s + 1, "img1", CorruptionKind::snow, SeverityLevel(4)));
}

TEST(DeriveSeed, NoCollisionsOverBenchmarkSizedWorkload) {
  // 2000 images x 75 subsets; at 2^-32 per pair the expected number of
  // collisions on 64-bit outputs is ~1e-9 * pairs, i.e. none.
  std::set<std::uint64_t> seen;
  std::size_t n = 0;
  for (int i = 0; i < 2000; ++i)
    for (auto k : kAllCorruptions)
      for (int l = 1; l <= 5; ++l) {
        seen.insert(derive_seed(0, "img" + std::to_string(i), k, SeverityLevel(l)));
        ++n;
      }
  EXPECT_EQ(seen.size(), n);
}

TEST(DeriveSeed, IdConcatenationIsUnambiguous) {
  EXPECT_NE(SeedHasher().add("ab").add("c").value(), SeedHasher().add("a").add("bc").value());
}

}  // namespace
}  // namespace scene_robust
