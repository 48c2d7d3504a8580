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

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "scene_robust/core/binary_io.hpp"
#include "scene_robust/core/error.hpp"

namespace scene_robust {

/// One caption line: {"image_id": ..., "caption": ..., "label_id": ...?}.
struct CaptionRecord {
  std::string image_id;
  std::string caption;
  std::optional<int> label_id;

  friend bool operator==(const CaptionRecord&, const CaptionRecord&) = default;
};

inline constexpr int kNumScenes = 148;

inline std::vector<CaptionRecord> parse_captions(const std::string& text, const std::string& source = "captions",
                                                 int num_classes = kNumScenes) {
  std::vector<CaptionRecord> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = source + ":" + std::to_string(lineno);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(where + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("image_id") || !j["image_id"].is_string() || !j.contains("caption") ||
        !j["caption"].is_string())
      throw FormatError(where + ": expected {image_id: string, caption: string, label_id?: int}");
    CaptionRecord r{j["image_id"].get<std::string>(), j["caption"].get<std::string>(), std::nullopt};
    if (r.caption.empty()) throw FormatError(where + ": empty caption");
    if (j.contains("label_id") && !j["label_id"].is_null()) {
      if (!j["label_id"].is_number_integer()) throw FormatError(where + ": label_id must be an integer");
      const int label = j["label_id"].get<int>();
      if (label < 0 || label >= num_classes)
        throw FormatError(where + ": label_id " + std::to_string(label) + " outside [0, " +
                          std::to_string(num_classes - 1) + "]");
      r.label_id = label;
    }
    out.push_back(std::move(r));
  }
  return out;
}

inline std::vector<CaptionRecord> load_captions(const std::string& path, int num_classes = kNumScenes) {
  return parse_captions(read_file_text(path), path, num_classes);
}

inline std::string format_captions(const std::vector<CaptionRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    nlohmann::json j = {{"image_id", r.image_id}, {"caption", r.caption}};
    if (r.label_id) j["label_id"] = *r.label_id;
    out += j.dump() + "\n";
  }
  return out;
}

}  // namespace scene_robust
