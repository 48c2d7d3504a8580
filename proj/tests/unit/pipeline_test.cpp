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

#include <cmath>
#include <filesystem>
#include <map>
#include <numbers>

#include <gtest/gtest.h>

#include "scene_robust/fixtures/mini_places.hpp"
#include "scene_robust/fusion/handcrafted.hpp"
#include "scene_robust/pipeline/caption_graphs.hpp"
#include "temp_dir.hpp"
#include "test_images.hpp"

namespace scene_robust {
namespace {

namespace fs = std::filesystem;
const std::string kFixture = SCENE_ROBUST_FIXTURE_DIR "/mini_places";

const ClassMap& places() {
  static const ClassMap m = ClassMap::load(default_class_map_path());
  return m;
}

/// Gray sinusoid varying along x (vertical stripes) or y. The period stays
/// above two pixels at the coarsest (quarter) scale.
ImageBuffer stripes(bool vertical, int side = 64, double period = 16) {
  ImageBuffer img("s", side, side);
  for (int y = 0; y < side; ++y)
    for (int x = 0; x < side; ++x) {
      const double t = vertical ? x : y;
      const auto v = static_cast<std::uint8_t>(std::lround(128 + 60 * std::sin(2 * std::numbers::pi * t / period)));
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = v;
    }
  return img;
}

// Offsets of the feature blocks.
constexpr int kRgb = 0, kOrient = 48, kGrid = 96, kMoments = 112, kMagnitude = 118;

TEST(Handcrafted, LayoutOnUniformImage) {
  const auto f = handcrafted_features(testing::uniform_image("u", 40, 40, 100));
  ASSERT_EQ(f.size(), kLowLevelDim);
  // All pixels fall in bin 100/16 = 6 of each channel; scaled so a uniform
  // histogram is all ones, a single full bin holds 16.
  for (int c = 0; c < 3; ++c)
    for (int b = 0; b < 16; ++b) EXPECT_FLOAT_EQ(f[static_cast<std::size_t>(kRgb + 16 * c + b)], b == 6 ? 16.f : 0.f);
  for (int i = kOrient; i < kGrid; ++i) EXPECT_EQ(f[static_cast<std::size_t>(i)], 0.f) << i;  // no gradients
  for (int i = kGrid; i < kMoments; ++i) EXPECT_NEAR(f[static_cast<std::size_t>(i)], 100 / 255.0, 1e-6);
  for (int c = 0; c < 3; ++c) {
    EXPECT_NEAR(f[static_cast<std::size_t>(kMoments + 2 * c)], 100 / 255.0, 1e-6);
    EXPECT_NEAR(f[static_cast<std::size_t>(kMoments + 2 * c + 1)], 0.0, 1e-6);
  }
  EXPECT_FLOAT_EQ(f[kMagnitude], 10.f);  // every magnitude in the first bin
}

TEST(Handcrafted, OrientationSeparatesStripeDirection) {
  const auto v = handcrafted_features(stripes(true));
  const auto h = handcrafted_features(stripes(false));
  // Vertical stripes: gradients along x, angle 0 -> bins 0 and 15.
  // Horizontal stripes: gradients along y, angle pi/2 -> bin 8.
  for (int scale = 0; scale < 3; ++scale) {
    const auto at = [&](const std::vector<float>& f, int b) { return f[static_cast<std::size_t>(kOrient + 16 * scale + b)]; };
    EXPECT_NEAR(at(v, 0) + at(v, 15), 16.f, 1e-3) << scale;
    EXPECT_NEAR(at(h, 8), 16.f, 1e-3) << scale;
  }
  EXPECT_EQ(handcrafted_features(stripes(true)), v);
}

TEST(Handcrafted, RejectsTinyImages) {
  EXPECT_THROW(handcrafted_features(testing::uniform_image("t", 31, 64, 0)), InputError);
}

TEST(MiniPlaces, CommittedFixtureMatchesGenerator) {
  testing::TempDir dir;
  mini_places::generate(dir.str(), places(), 0);
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir.path())) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), dir.path());
    ASSERT_TRUE(fs::exists(fs::path(kFixture) / rel)) << rel;
    EXPECT_EQ(read_file_bytes(e.path().string()), read_file_bytes((fs::path(kFixture) / rel).string())) << rel;
    ++files;
  }
  EXPECT_EQ(files, 8u * mini_places::kImagesPerClass + 4);
}

TEST(MiniPlaces, ShapeOfTheFixture) {
  const auto m = DatasetManifest::load(kFixture + "/manifest.jsonl");
  EXPECT_EQ(m.records.size(), 320u);
  EXPECT_EQ(m.split(Split::test).size(), 80u);
  EXPECT_EQ(m.split(Split::val).size(), 40u);
  EXPECT_EQ(m.split(Split::train).size(), 200u);
  const auto captions = load_captions(kFixture + "/captions.jsonl");
  EXPECT_EQ(captions.size(), 320u);
  std::map<std::string, int> label_of;
  for (const auto& r : m.records) label_of[r.image_id] = r.label_id;
  int empty = 0;
  for (const auto& c : captions) {
    EXPECT_EQ(c.label_id, label_of.at(c.image_id)) << c.image_id;
    empty += preprocess_caption(c.caption).empty();
  }
  EXPECT_EQ(empty, 8);
  const auto features = load_features(kFixture + "/features.p148feat");
  EXPECT_EQ(features.vectors.size(), 320u);
}

TEST(MiniPlaces, CaptionsIdentifyOnlyThePair) {
  // Both members of a pair draw from the same object list.
  for (const auto& spec : mini_places::classes()) {
    const auto& objs = mini_places::pair_objects()[static_cast<std::size_t>(spec.pair)];
    for (int k = 1; k < mini_places::kImagesPerClass; ++k) {
      int hits = 0;
      for (const auto& w : preprocess_caption(mini_places::caption(spec, k, 0)))
        hits += std::find(objs.begin(), objs.end(), w) != objs.end();
      EXPECT_GE(hits, 1) << spec.name << " " << k;
    }
  }
}

class Graphs : public ::testing::Test {
 protected:
  Graphs()
      : captions_(load_captions(kFixture + "/captions.jsonl")),
        ctx_(places(), mine_cooccurrence(captions_), EmbeddingTable::load(kFixture + "/embeddings.txt", 3)) {}
  std::vector<CaptionRecord> captions_;
  GraphContext ctx_;
};

TEST_F(Graphs, EmptyCaptionHasNoGraph) {
  EXPECT_FALSE(ctx_.build("a man and a woman"));
  const auto g = ctx_.build("a stove next to the sink");
  ASSERT_TRUE(g);
  EXPECT_EQ(g->num_nodes, 2 + kPlacesClasses);
  EXPECT_NO_THROW(g->validate());
}

TEST_F(Graphs, MatchesDirectConstruction) {
  const auto table = EmbeddingTable::load(kFixture + "/embeddings.txt", 3);
  const auto words = preprocess_caption("a bed beside a lamp");
  const auto direct = build_graph(words, ctx_.stats(), table, scene_node_features(places().names(), table));
  EXPECT_EQ(*ctx_.build("a bed beside a lamp"), direct.graph);
}

TEST_F(Graphs, CaptionGraphsIndexById) {
  const auto cg = CaptionGraphs::build(captions_, ctx_);
  EXPECT_EQ(cg.graphs.size(), 312u);
  EXPECT_EQ(cg.empty.size(), 8u);
  EXPECT_TRUE(cg.has_caption("kitchen_img00"));
  EXPECT_EQ(cg.find("kitchen_img00"), nullptr);
  EXPECT_NE(cg.find("kitchen_img01"), nullptr);
  EXPECT_FALSE(cg.has_caption("nope"));
  EXPECT_EQ(cg.labels.at("bedroom_img03"), 28);
  auto dup = captions_;
  dup.push_back(dup.front());
  EXPECT_THROW(CaptionGraphs::build(dup, ctx_), FormatError);
}

TEST(GraphContext, SceneCountMustMatchClassMap) {
  CooccurrenceCounter counter(3, 4);
  counter.add({"stove"}, 1);
  EXPECT_THROW(GraphContext(places(), counter.finalize(), EmbeddingTable(0)), InputError);
}

}  // namespace
}  // namespace scene_robust
