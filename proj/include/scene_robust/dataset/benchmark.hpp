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

#include <atomic>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "scene_robust/core/parallel.hpp"
#include "scene_robust/corruption/engine.hpp"
#include "scene_robust/dataset/manifest.hpp"

namespace scene_robust {

inline constexpr int kBenchmarkSubsets = static_cast<int>(kNumCorruptions) * kNumSeverities + 1;

struct BenchmarkOptions {
  std::uint64_t global_seed = 0;
  int jobs = 1;
  bool resume = true;  // keep outputs that already exist (writes are atomic)
};

struct BenchmarkResult {
  DatasetManifest manifest;
  std::size_t written = 0;
  std::size_t skipped = 0;
};

inline std::string clean_file_name(std::string_view image_id) { return std::string(image_id) + "__clean.png"; }

/// Relative output path of one benchmark entry.
inline std::string benchmark_path(const ManifestRecord& source, const std::optional<CorruptionTag>& tag) {
  if (!tag) return "clean/" + clean_file_name(source.image_id);
  return std::string(to_string(tag->kind)) + "/s" + std::to_string(tag->level) + "/" +
         corrupted_file_name(source.image_id, tag->kind, SeverityLevel(tag->level));
}

/// Writes the clean copy and all 75 corrupted versions of every test image
/// under `out_root`, plus `manifest.jsonl` and `run.json`. Output bytes depend
/// only on the inputs and the global seed, never on `jobs` or on resumption.
inline BenchmarkResult generate_corrupted_benchmark(const DatasetManifest& source, const std::string& image_root,
                                                    const SeverityParams& params, const std::string& out_root,
                                                    const BenchmarkOptions& opt) {
  namespace fs = std::filesystem;
  if (opt.jobs < 1) throw ConfigError("jobs must be >= 1");
  const auto tests = source.split(Split::test);
  if (tests.empty()) throw InputError("manifest has no test split records");

  std::vector<std::optional<CorruptionTag>> subsets{std::nullopt};
  for (auto k : kAllCorruptions)
    for (int s = 1; s <= kNumSeverities; ++s) subsets.push_back(CorruptionTag{k, s});

  std::error_code ec;
  for (const auto& tag : subsets) {
    const auto dir = fs::path(out_root) / fs::path(benchmark_path(tests.front(), tag)).parent_path();
    fs::create_directories(dir, ec);
    if (ec) throw InputError("cannot create " + dir.string() + ": " + ec.message());
  }

  std::atomic<std::size_t> written{0}, skipped{0};
  parallel_for(tests.size(), opt.jobs, [&](std::size_t i) {
    const auto& rec = tests[i];
    std::optional<ImageBuffer> image;
    for (const auto& tag : subsets) {
      const auto out = (fs::path(out_root) / benchmark_path(rec, tag)).string();
      if (opt.resume && fs::exists(out)) {
        ++skipped;
        continue;
      }
      if (!image) image = codec::read_image((fs::path(image_root) / rec.relative_path).string(), rec.image_id);
      const auto bytes =
          tag ? corrupt_to_file_bytes(*image, tag->kind, SeverityLevel(tag->level),
                                      derive_seed(opt.global_seed, rec.image_id, tag->kind, SeverityLevel(tag->level)),
                                      params)
              : codec::encode_png(*image);
      write_file_atomic(out, bytes);
      ++written;
    }
  });

  BenchmarkResult result;
  result.written = written;
  result.skipped = skipped;
  result.manifest.source = source.source + "+corrupted";
  result.manifest.seed = opt.global_seed;
  for (const auto& tag : subsets)
    for (const auto& rec : tests) {
      ManifestRecord r = rec;
      r.relative_path = benchmark_path(rec, tag);
      r.corruption = tag;
      result.manifest.records.push_back(std::move(r));
    }
  result.manifest.save((fs::path(out_root) / "manifest.jsonl").string());
  const std::string source_text = source.to_jsonl();
  const nlohmann::json run{{"global_seed", opt.global_seed},
                           {"severity_config", params.hash()},
                           {"source_manifest", content_hash(std::span(
                                                   reinterpret_cast<const std::uint8_t*>(source_text.data()),
                                                   source_text.size()))},
                           {"subsets", kBenchmarkSubsets},
                           {"test_images", tests.size()},
                           {"entries", result.manifest.records.size()}};
  write_file_atomic((fs::path(out_root) / "run.json").string(), run.dump(2) + "\n");
  return result;
}

}  // namespace scene_robust
