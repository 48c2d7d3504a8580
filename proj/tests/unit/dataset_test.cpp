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

#include <filesystem>
#include <map>

#include <gtest/gtest.h>
#include <zlib.h>

#include "scene_robust/dataset/benchmark.hpp"
#include "scene_robust/dataset/class_map.hpp"
#include "scene_robust/dataset/manifest.hpp"
#include "scene_robust/image/codec.hpp"
#include "temp_dir.hpp"
#include "test_images.hpp"

namespace scene_robust {
namespace {

namespace fs = std::filesystem;
using testing::TempDir;

const ClassMap& places() {
  static const ClassMap m = ClassMap::load(default_class_map_path());
  return m;
}

const SeverityParams& params() {
  static const SeverityParams p = SeverityParams::load(SCENE_ROBUST_DATA_DIR "/severity.cfg");
  return p;
}

void write_png(const fs::path& p, const ImageBuffer& img) {
  fs::create_directories(p.parent_path());
  write_file_atomic(p.string(), codec::encode_png(img));
}

/// root/<class>/img<k>.png for each class.
void populate(const TempDir& dir, const std::vector<std::string>& classes, int per_class, int side = 40) {
  std::uint64_t seed = 1;
  for (const auto& c : classes)
    for (int k = 0; k < per_class; ++k)
      write_png(dir.path() / "images" / c / ("img" + std::to_string(k) + ".png"),
                testing::synthetic_image(c + std::to_string(k), side, side, seed++));
}

std::map<std::string, std::vector<std::uint8_t>> snapshot(const fs::path& root) {
  std::map<std::string, std::vector<std::uint8_t>> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = read_file_bytes(e.path().string());
  return out;
}

TEST(ClassMap, ShippedListHas148UniqueClasses) {
  EXPECT_EQ(places().size(), kPlacesClasses);
  EXPECT_EQ(places().find("kitchen"), 91);
  EXPECT_EQ(places().name(28), "bedroom");
  EXPECT_FALSE(places().find("beach"));
  EXPECT_EQ(ClassMap::parse(places().to_csv()).names(), places().names());
}

TEST(ClassMap, RejectsMalformedLists) {
  EXPECT_THROW(ClassMap::parse("id,name\n0,a\n", "x", 1), FormatError);
  EXPECT_THROW(ClassMap::parse("label_id,class_name\n1,a\n", "x", 1), FormatError);
  EXPECT_THROW(ClassMap::parse("label_id,class_name\n0,a\n1,a\n", "x", 2), FormatError);
  EXPECT_THROW(ClassMap::parse("label_id,class_name\n0,a\n", "x", 2), FormatError);
  EXPECT_THROW(ClassMap::parse("label_id,class_name\nzero,a\n", "x", 1), FormatError);
  EXPECT_NO_THROW(ClassMap::parse("label_id,class_name\r\n0,a\r\n", "x", 1));
  EXPECT_THROW(places().name(148), ContractError);
}

TEST(Manifest, BuildsOneRecordPerImage) {
  TempDir dir;
  populate(dir, {"kitchen", "bedroom"}, 3);
  const auto m = build_manifest(dir.str("images"), places(), {}).manifest;
  ASSERT_EQ(m.records.size(), 6u);
  EXPECT_EQ(m.records.front().relative_path, "bedroom/img0.png");
  EXPECT_EQ(m.records.front().image_id, "bedroom_img0");
  EXPECT_EQ(m.records.front().label_id, 28);
  // 3 images: round(0.75) = 1 test, round(0.375) = 0 val.
  EXPECT_EQ(m.split(Split::test).size(), 2u);
  EXPECT_EQ(m.split(Split::val).size(), 0u);
  EXPECT_EQ(m.split(Split::train).size(), 4u);
}

TEST(Manifest, RebuildIsByteIdentical) {
  TempDir dir;
  populate(dir, {"kitchen", "bedroom", "office"}, 8, 32);
  SplitRules rules;
  rules.seed = 7;
  const auto a = build_manifest(dir.str("images"), places(), rules).manifest.to_jsonl();
  const auto b = build_manifest(dir.str("images"), places(), rules).manifest.to_jsonl();
  EXPECT_EQ(a, b);
  rules.seed = 8;
  EXPECT_NE(a, build_manifest(dir.str("images"), places(), rules).manifest.to_jsonl());
}

TEST(Manifest, SplitSizesFollowFractions) {
  TempDir dir;
  populate(dir, {"kitchen"}, 40, 32);
  const auto m = build_manifest(dir.str("images"), places(), {}).manifest;
  EXPECT_EQ(m.split(Split::test).size(), 10u);
  EXPECT_EQ(m.split(Split::val).size(), 5u);
  EXPECT_EQ(m.split(Split::train).size(), 25u);
}

TEST(Manifest, UnknownDirectoryStrictVsLenient) {
  TempDir dir;
  populate(dir, {"kitchen", "not_a_scene"}, 2, 32);
  try {
    build_manifest(dir.str("images"), places(), {});
    FAIL() << "expected InputError";
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("not_a_scene"), std::string::npos);
  }
  SplitRules lenient;
  lenient.strict = false;
  const auto b = build_manifest(dir.str("images"), places(), lenient);
  EXPECT_EQ(b.unknown_directories, std::vector<std::string>{"not_a_scene"});
  EXPECT_EQ(b.manifest.records.size(), 2u);
}

TEST(Manifest, JsonlRoundTripAndGzip) {
  DatasetManifest m;
  m.source = "unit";
  m.seed = 3;
  m.records.push_back({"a", "clean/a__clean.png", 4, Split::test, std::nullopt});
  m.records.push_back({"a", "fog/s2/a__fog__s2.png", 4, Split::test, CorruptionTag{CorruptionKind::fog, 2}});
  const auto text = m.to_jsonl();
  EXPECT_EQ(DatasetManifest::parse(text), m);

  TempDir dir;
  const auto gz = dir.str("m.jsonl.gz");
  gzFile f = gzopen(gz.c_str(), "wb");
  ASSERT_TRUE(f);
  gzwrite(f, text.data(), static_cast<unsigned>(text.size()));
  gzclose(f);
  EXPECT_EQ(DatasetManifest::load(gz), m);
  m.save(dir.str("m.jsonl"));
  EXPECT_EQ(DatasetManifest::load(dir.str("m.jsonl")), m);
}

TEST(Manifest, RejectsBadInput) {
  EXPECT_THROW(DatasetManifest::parse(""), FormatError);
  EXPECT_THROW(DatasetManifest::parse("{\"image_id\":\"a\"}\n"), FormatError);
  const std::string header = "{\"format\":\"scene-robust-manifest\",\"version\":1,\"source\":\"s\",\"seed\":0}\n";
  EXPECT_THROW(DatasetManifest::parse(header + "{\"image_id\":\"a\"}\n"), FormatError);
  EXPECT_THROW(DatasetManifest::parse(header + "not json\n"), FormatError);
  const std::string rec = R"({"image_id":"a","relative_path":"p","label_id":1,"split":"test","corruption":)";
  EXPECT_THROW(DatasetManifest::parse(header + rec + R"({"kind":"smoke","level":1}})" + "\n"), FormatError);
  EXPECT_THROW(DatasetManifest::parse(header + rec + R"({"kind":"fog","level":6}})" + "\n"), FormatError);
  auto dup = DatasetManifest::parse(header + rec + "null}\n" + rec + "null}\n");
  EXPECT_THROW(dup.validate(places()), FormatError);
}

class Benchmark : public ::testing::Test {
 protected:
  void SetUp() override {
    populate(dir_, {"kitchen", "bedroom"}, 2, 32);
    source_ = build_manifest(dir_.str("images"), places(), {}).manifest;
  }
  BenchmarkResult run(const std::string& out, int jobs, std::uint64_t seed = 11, bool resume = true) {
    BenchmarkOptions opt;
    opt.global_seed = seed;
    opt.jobs = jobs;
    opt.resume = resume;
    return generate_corrupted_benchmark(source_, dir_.str("images"), params(), dir_.str(out), opt);
  }
  TempDir dir_;
  DatasetManifest source_;
};

TEST_F(Benchmark, WritesAllSubsetsForEveryTestImage) {
  ASSERT_EQ(source_.split(Split::test).size(), 2u);
  const auto r = run("out", 1);
  EXPECT_EQ(r.manifest.records.size(), 2u * kBenchmarkSubsets);
  EXPECT_EQ(r.written, 2u * kBenchmarkSubsets);
  for (const auto& rec : r.manifest.records) EXPECT_TRUE(fs::exists(dir_.path() / "out" / rec.relative_path)) << rec.relative_path;
  EXPECT_EQ(DatasetManifest::load(dir_.str("out/manifest.jsonl")), r.manifest);
  const auto run_json = nlohmann::json::parse(read_file_text(dir_.str("out/run.json")));
  EXPECT_EQ(run_json.at("entries"), 152);
  EXPECT_FALSE(run_json.contains("jobs"));
  const auto id = source_.split(Split::test).front().image_id;
  EXPECT_TRUE(fs::exists(dir_.path() / "out" / "jpeg" / "s3" / (id + "__jpeg__s3.jpg")));
  EXPECT_TRUE(fs::exists(dir_.path() / "out" / "clean" / (id + "__clean.png")));
}

TEST_F(Benchmark, OutputIndependentOfJobsAndResume) {
  run("a", 1);
  run("b", 4);
  const auto a = snapshot(dir_.path() / "a");
  EXPECT_EQ(a, snapshot(dir_.path() / "b"));

  // Drop a third of the files and resume.
  int k = 0;
  for (const auto& [rel, bytes] : a)
    if (rel.find('/') != std::string::npos && k++ % 3 == 0) fs::remove(dir_.path() / "b" / rel);
  const auto r = run("b", 2);
  EXPECT_GT(r.skipped, 0u);
  EXPECT_GT(r.written, 0u);
  EXPECT_EQ(r.written + r.skipped, 2u * kBenchmarkSubsets);
  EXPECT_EQ(a, snapshot(dir_.path() / "b"));
}

TEST_F(Benchmark, SeedChangesCorruptedBytesOnly) {
  run("a", 1, 11);
  run("b", 1, 12);
  const auto a = snapshot(dir_.path() / "a"), b = snapshot(dir_.path() / "b");
  const auto id = source_.split(Split::test).front().image_id;
  EXPECT_EQ(a.at("clean/" + id + "__clean.png"), b.at("clean/" + id + "__clean.png"));
  EXPECT_NE(a.at("gaussian_noise/s3/" + id + "__gaussian_noise__s3.png"),
            b.at("gaussian_noise/s3/" + id + "__gaussian_noise__s3.png"));
}

TEST_F(Benchmark, RejectsBadOptions) {
  EXPECT_THROW(run("x", 0), ConfigError);
  DatasetManifest empty = source_;
  for (auto& r : empty.records) r.split = Split::train;
  EXPECT_THROW(generate_corrupted_benchmark(empty, dir_.str("images"), params(), dir_.str("y"), {}), InputError);
}

}  // namespace
}  // namespace scene_robust
