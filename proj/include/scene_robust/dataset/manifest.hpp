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

#include <algorithm>
#include <cctype>
#include <numeric>
#include <filesystem>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>
#include <zlib.h>

#include "scene_robust/core/binary_io.hpp"
#include "scene_robust/core/rng.hpp"
#include "scene_robust/corruption/kinds.hpp"
#include "scene_robust/dataset/class_map.hpp"

namespace scene_robust {

enum class Split { train, val, test };

inline std::string_view to_string(Split s) {
  return s == Split::train ? "train" : s == Split::val ? "val" : "test";
}

inline Split parse_split(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "val") return Split::val;
  if (s == "test") return Split::test;
  throw FormatError("unknown split '" + s + "'");
}

struct CorruptionTag {
  CorruptionKind kind;
  int level;
  friend bool operator==(const CorruptionTag&, const CorruptionTag&) = default;
};

struct ManifestRecord {
  std::string image_id;
  std::string relative_path;
  int label_id = 0;
  Split split = Split::train;
  std::optional<CorruptionTag> corruption;

  friend bool operator==(const ManifestRecord&, const ManifestRecord&) = default;

  /// "clean" or "<kind>/s<level>".
  std::string subset() const {
    return corruption ? std::string(to_string(corruption->kind)) + "/s" + std::to_string(corruption->level) : "clean";
  }
};

struct DatasetManifest {
  std::string source;
  std::uint64_t seed = 0;
  std::vector<ManifestRecord> records;

  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;

  std::vector<ManifestRecord> split(Split s) const {
    std::vector<ManifestRecord> out;
    for (const auto& r : records)
      if (r.split == s) out.push_back(r);
    return out;
  }

  /// Unique ids per (corruption, level) slice; labels valid in `classes`.
  void validate(const ClassMap& classes, const std::string& what = "manifest") const {
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& r : records) {
      if (!seen.emplace(r.subset(), r.image_id).second)
        throw FormatError(what + ": duplicate image_id " + r.image_id + " in subset " + r.subset());
      if (r.label_id < 0 || r.label_id >= classes.size())
        throw FormatError(what + ": image " + r.image_id + " has label_id " + std::to_string(r.label_id) +
                          " outside the class map");
    }
  }

  std::string to_jsonl() const {
    std::string out = nlohmann::json{{"format", "scene-robust-manifest"}, {"version", 1}, {"source", source}, {"seed", seed}}.dump() + "\n";
    for (const auto& r : records) {
      nlohmann::json j{{"image_id", r.image_id}, {"relative_path", r.relative_path}, {"label_id", r.label_id},
                       {"split", std::string(to_string(r.split))}};
      j["corruption"] = r.corruption ? nlohmann::json{{"kind", std::string(to_string(r.corruption->kind))},
                                                      {"level", r.corruption->level}}
                                     : nlohmann::json(nullptr);
      out += j.dump() + "\n";
    }
    return out;
  }

  static DatasetManifest parse(const std::string& text, const std::string& what = "manifest") {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    DatasetManifest m;
    bool header = false;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      const std::string where = what + ":" + std::to_string(lineno);
      try {
        const auto j = nlohmann::json::parse(line);
        if (!header) {
          if (j.value("format", "") != "scene-robust-manifest") throw FormatError(where + ": missing manifest header");
          if (j.at("version").get<int>() != 1) throw FormatError(where + ": unsupported manifest version");
          m.source = j.at("source").get<std::string>();
          m.seed = j.at("seed").get<std::uint64_t>();
          header = true;
          continue;
        }
        ManifestRecord r;
        r.image_id = j.at("image_id").get<std::string>();
        r.relative_path = j.at("relative_path").get<std::string>();
        r.label_id = j.at("label_id").get<int>();
        r.split = parse_split(j.at("split").get<std::string>());
        if (j.contains("corruption") && !j.at("corruption").is_null()) {
          const auto& c = j.at("corruption");
          const auto kind = parse_corruption(c.at("kind").get<std::string>());
          if (!kind) throw FormatError(where + ": unknown corruption '" + c.at("kind").get<std::string>() + "'");
          const int level = c.at("level").get<int>();
          if (level < 1 || level > kNumSeverities) throw FormatError(where + ": severity level must be 1..5");
          r.corruption = CorruptionTag{*kind, level};
        }
        m.records.push_back(std::move(r));
      } catch (const nlohmann::json::exception& e) {
        throw FormatError(where + ": " + e.what());
      } catch (const FormatError& e) {
        const std::string msg = e.what();
        throw FormatError(msg.rfind(what, 0) == 0 ? msg : where + ": " + msg);
      }
    }
    if (!header) throw FormatError(what + ": empty manifest");
    return m;
  }

  /// Reads plain or gzip-compressed JSON-lines.
  static DatasetManifest load(const std::string& path) { return parse(read_maybe_gzip(path), path); }

  void save(const std::string& path) const { write_file_atomic(path, to_jsonl()); }

  static std::string read_maybe_gzip(const std::string& path) {
    const auto bytes = read_file_bytes(path);
    if (bytes.size() < 2 || bytes[0] != 0x1f || bytes[1] != 0x8b) return {bytes.begin(), bytes.end()};
    gzFile f = gzopen(path.c_str(), "rb");
    if (!f) throw InputError("cannot open " + path);
    std::string out;
    char buf[1 << 15];
    int n = 0;
    while ((n = gzread(f, buf, sizeof buf)) > 0) out.append(buf, static_cast<std::size_t>(n));
    int err = 0;
    const char* msg = gzerror(f, &err);
    const std::string reason = msg ? msg : "";
    gzclose(f);
    if (n < 0 || (err != Z_OK && err != Z_STREAM_END)) throw FormatError(path + ": corrupt gzip stream: " + reason);
    return out;
  }
};

struct SplitRules {
  double val_fraction = 0.125;
  double test_fraction = 0.25;
  std::uint64_t seed = 0;
  bool strict = true;  // unknown class directories are an error
};

struct ManifestBuild {
  DatasetManifest manifest;
  std::vector<std::string> unknown_directories;  // non-strict mode only
};

inline bool is_image_file(const std::filesystem::path& p) {
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

/// Scans `<root>/<class_name>/<file>`. Within each class the files are
/// ordered by name, shuffled with a per-class stream, and cut into test, val
/// and train by rounded fractions. Records are sorted by relative path.
inline ManifestBuild build_manifest(const std::string& image_root, const ClassMap& classes, const SplitRules& rules,
                                    const std::string& source = "local") {
  namespace fs = std::filesystem;
  if (rules.val_fraction < 0 || rules.test_fraction < 0 || rules.val_fraction + rules.test_fraction > 1)
    throw ConfigError("split fractions must be non-negative and sum to at most 1");
  if (!fs::is_directory(image_root)) throw InputError("image root " + image_root + " is not a directory");
  ManifestBuild out;
  out.manifest.source = source;
  out.manifest.seed = rules.seed;
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(image_root))
    if (e.is_directory()) dirs.push_back(e.path());
  std::sort(dirs.begin(), dirs.end());
  for (const auto& dir : dirs) {
    const std::string cls = dir.filename().string();
    const auto label = classes.find(cls);
    if (!label) {
      if (rules.strict) throw InputError("directory '" + cls + "' is not a class in the class map");
      out.unknown_directories.push_back(cls);
      continue;
    }
    std::vector<std::string> files;
    for (const auto& e : fs::directory_iterator(dir))
      if (e.is_regular_file() && is_image_file(e.path())) files.push_back(e.path().filename().string());
    std::sort(files.begin(), files.end());
    std::vector<std::size_t> order(files.size());
    std::iota(order.begin(), order.end(), 0);
    Philox rng(SeedHasher(rules.seed).add("split").add(cls).value());
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.next_u64() % i]);
    const auto n = static_cast<double>(files.size());
    const auto n_test = static_cast<std::size_t>(std::llround(n * rules.test_fraction));
    const auto n_val = static_cast<std::size_t>(std::llround(n * rules.val_fraction));
    for (std::size_t k = 0; k < order.size(); ++k) {
      const auto& file = files[order[k]];
      ManifestRecord r;
      r.image_id = cls + "_" + fs::path(file).stem().string();
      r.relative_path = cls + "/" + file;
      r.label_id = *label;
      r.split = k < n_test ? Split::test : k < n_test + n_val ? Split::val : Split::train;
      out.manifest.records.push_back(std::move(r));
    }
  }
  if (out.manifest.records.empty()) throw InputError("no images found under " + image_root);
  std::sort(out.manifest.records.begin(), out.manifest.records.end(),
            [](const auto& a, const auto& b) { return a.relative_path < b.relative_path; });
  out.manifest.validate(classes);
  return out;
}

}  // namespace scene_robust
