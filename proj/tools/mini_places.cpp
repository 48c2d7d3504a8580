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

// Regenerates the committed mini-places fixture and computes handcrafted
// feature files for benchmark trees.

#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "scene_robust/dataset/manifest.hpp"
#include "scene_robust/fixtures/mini_places.hpp"

namespace fs = std::filesystem;
using namespace scene_robust;

int main(int argc, char** argv) {
  CLI::App app{"mini-places fixture tool"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("generate", "write images, captions, embeddings, manifest and features");
  std::string out;
  std::string class_map = default_class_map_path();
  std::uint64_t seed = 0;
  gen->add_option("--out", out, "output directory")->required();
  gen->add_option("--class-map", class_map, "148-class CSV")->capture_default_str();
  gen->add_option("--seed", seed, "fixture seed")->capture_default_str();

  auto* feat = app.add_subcommand("features", "handcrafted features for every record of a manifest");
  std::string manifest_path, image_root, feat_out;
  feat->add_option("--manifest", manifest_path, "manifest JSONL")->required();
  feat->add_option("--images", image_root, "image root (default: manifest directory)");
  feat->add_option("--out", feat_out, "output .p148feat")->required();

  CLI11_PARSE(app, argc, argv);
  try {
    if (*gen) {
      const auto fx = mini_places::generate(out, ClassMap::load(class_map), seed);
      std::cout << "wrote " << fx.manifest.records.size() << " images to " << out << "\n";
    } else {
      const auto m = DatasetManifest::load(manifest_path);
      if (image_root.empty()) image_root = fs::path(manifest_path).parent_path().string();
      FeatureMap map;
      map.source = kHandcraftedSource;
      for (const auto& r : m.records) {
        const auto img = codec::read_image((fs::path(image_root) / r.relative_path).string(), r.image_id);
        if (!map.vectors.emplace(r.image_id, handcrafted_features(img)).second)
          throw FormatError("image_id " + r.image_id + " appears twice; pass a single-subset manifest");
      }
      save_features(feat_out, map);
      std::cout << "wrote " << map.vectors.size() << " vectors to " << feat_out << "\n";
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
