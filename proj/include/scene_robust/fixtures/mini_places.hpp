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

#pragma once

#include <array>
#include <cmath>
#include <filesystem>
#include <map>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include "scene_robust/caption/embeddings.hpp"
#include "scene_robust/caption/preprocess.hpp"
#include "scene_robust/caption/records.hpp"
#include "scene_robust/core/binary_io.hpp"
#include "scene_robust/core/rng.hpp"
#include "scene_robust/dataset/class_map.hpp"
#include "scene_robust/dataset/manifest.hpp"
#include "scene_robust/fusion/features.hpp"
#include "scene_robust/fusion/handcrafted.hpp"
#include "scene_robust/image/codec.hpp"

/// Synthetic 8-class "mini-places" fixture: four pairs of related indoor
/// scenes. Captions identify the pair only; stripe orientation in the image
/// identifies the member of the pair. Neither stream alone can exceed 50%
/// top-1, while both together separate all eight classes.
namespace scene_robust::mini_places {

inline constexpr int kImagesPerClass = 40;
inline constexpr int kSide = 64;

struct ClassSpec {
  std::string name;
  int pair;
  bool vertical;  // stripe orientation
};

inline const std::vector<ClassSpec>& classes() {
  static const std::vector<ClassSpec> specs = {
      {"kitchen", 0, false},   {"restaurant_kitchen", 0, true}, {"bedroom", 1, false}, {"hotel_room", 1, true},
      {"classroom", 2, false}, {"lecture_room", 2, true},       {"office", 3, false},  {"home_office", 3, true},
  };
  return specs;
}

inline const std::array<std::vector<std::string>, 4>& pair_objects() {
  static const std::array<std::vector<std::string>, 4> objects = {{
      {"stove", "sink", "oven", "counter", "pan", "refrigerator", "cabinet", "kettle"},
      {"bed", "pillow", "lamp", "blanket", "nightstand", "dresser", "curtain", "mattress"},
      {"chalkboard", "desk", "projector", "podium", "notebook", "bench", "screen", "textbook"},
      {"computer", "monitor", "keyboard", "printer", "bookshelf", "stapler", "laptop", "mouse"},
  }};
  return objects;
}

inline std::string image_stem(int k) { return (k < 10 ? "img0" : "img") + std::to_string(k); }
inline std::string image_id(const std::string& cls, int k) { return cls + "_" + image_stem(k); }

/// Background, soft stripes at a jittered angle, then a few flat discs.
inline ImageBuffer draw_image(const ClassSpec& spec, int k, std::uint64_t seed) {
  Philox rng(SeedHasher(seed).add("image").add(spec.name).add(static_cast<std::uint64_t>(k)).value());
  ImageBuffer img(image_id(spec.name, k), kSide, kSide);
  double bg[3], tint[3];
  for (int c = 0; c < 3; ++c) {
    bg[c] = rng.uniform(70, 185);
    tint[c] = rng.uniform(0.6, 1.0);
  }
  const double base = spec.vertical ? 0.0 : std::numbers::pi / 2;
  const double angle = base + rng.uniform(-0.2, 0.2);
  const double period = rng.uniform(6, 10), phase = rng.uniform(0, 2 * std::numbers::pi);
  const double amp = rng.uniform(35, 55);
  const double ca = std::cos(angle), sa = std::sin(angle);
  for (int y = 0; y < kSide; ++y)
    for (int x = 0; x < kSide; ++x) {
      const double s = std::sin(2 * std::numbers::pi * (x * ca + y * sa) / period + phase);
      for (int c = 0; c < 3; ++c)
        img.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::lround(bg[c] + amp * tint[c] * s), 0L, 255L));
    }
  const int discs = 2 + static_cast<int>(rng.next_u64() % 3);
  for (int d = 0; d < discs; ++d) {
    const double cx = rng.uniform(0, kSide), cy = rng.uniform(0, kSide), r = rng.uniform(3, 8);
    std::uint8_t col[3];
    for (auto& v : col) v = static_cast<std::uint8_t>(rng.uniform(20, 235));
    for (int y = 0; y < kSide; ++y)
      for (int x = 0; x < kSide; ++x)
        if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r)
          for (int c = 0; c < 3; ++c) img.at(x, y, c) = col[c];
  }
  return img;
}

/// Image 0 of every class has a caption that preprocesses to nothing.
inline std::string caption(const ClassSpec& spec, int k, std::uint64_t seed) {
  if (k == 0) return "a man and a woman";
  Philox rng(SeedHasher(seed).add("caption").add(spec.name).add(static_cast<std::uint64_t>(k)).value());
  const auto& objs = pair_objects()[static_cast<std::size_t>(spec.pair)];
  static const std::vector<std::string> adjectives = {"bright", "small", "large", "clean", "quiet", "old"};
  auto pick = [&](const std::vector<std::string>& v) { return v[rng.next_u64() % v.size()]; };
  const std::string a = pick(objs), b = pick(objs), c = pick(objs), adj = pick(adjectives);
  switch (rng.next_u64() % 4) {
    case 0: return "a " + adj + " room with a " + a + " and a " + b;
    case 1: return "a " + a + " next to the " + b + " near a window";
    case 2: return "a woman standing by a " + a + " with a " + b + " and a " + c;
    default: return "the " + adj + " " + a + " beside a " + b + " on the floor";
  }
}

/// Seeded 50-d vectors for every token the captions and class names use.
inline std::string embeddings_text(const std::vector<CaptionRecord>& captions, std::uint64_t seed) {
  std::set<std::string> vocab;
  for (const auto& r : captions)
    for (auto& w : preprocess_caption(r.caption)) vocab.insert(w);
  for (const auto& spec : classes()) {
    std::string tok;
    for (char ch : spec.name + "_") {
      if (ch == '_') {
        vocab.insert(tok);
        tok.clear();
      } else {
        tok += ch;
      }
    }
  }
  std::string out;
  char buf[32];
  for (const auto& w : vocab) {
    Philox rng(SeedHasher(seed).add("embedding").add(w).value());
    out += w;
    for (std::size_t d = 0; d < kEmbeddingDim; ++d) {
      std::snprintf(buf, sizeof buf, " %.5f", rng.uniform(-1, 1));
      out += buf;
    }
    out += "\n";
  }
  return out;
}

struct Fixture {
  std::vector<CaptionRecord> captions;
  DatasetManifest manifest;
};

/// Writes images/<class>/imgNN.png, captions.jsonl, embeddings.txt,
/// manifest.jsonl and features.p148feat (handcrafted, every image) under
/// `root`. Output depends only on `seed`.
inline Fixture generate(const std::string& root, const ClassMap& places, std::uint64_t seed = 0) {
  namespace fs = std::filesystem;
  Fixture fx;
  FeatureMap features;
  features.source = kHandcraftedSource;
  for (const auto& spec : classes()) {
    const auto label = places.find(spec.name);
    if (!label) throw ContractError("class map lacks mini-places class " + spec.name);
    const fs::path dir = fs::path(root) / "images" / spec.name;
    fs::create_directories(dir);
    for (int k = 0; k < kImagesPerClass; ++k) {
      const auto img = draw_image(spec, k, seed);
      write_file_atomic((dir / (image_stem(k) + ".png")).string(), codec::encode_png(img));
      features.vectors[img.image_id()] = handcrafted_features(img);
      fx.captions.push_back({img.image_id(), caption(spec, k, seed), *label});
    }
  }
  std::sort(fx.captions.begin(), fx.captions.end(),
            [](const auto& a, const auto& b) { return a.image_id < b.image_id; });
  write_file_atomic((fs::path(root) / "captions.jsonl").string(), format_captions(fx.captions));
  write_file_atomic((fs::path(root) / "embeddings.txt").string(), embeddings_text(fx.captions, seed));
  SplitRules rules;
  rules.seed = seed;
  fx.manifest = build_manifest((fs::path(root) / "images").string(), places, rules, "mini-places").manifest;
  fx.manifest.save((fs::path(root) / "manifest.jsonl").string());
  save_features((fs::path(root) / "features.p148feat").string(), features);
  return fx;
}

}  // namespace scene_robust::mini_places
