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

#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "scene_robust/core/binary_io.hpp"
#include "scene_robust/core/error.hpp"

namespace scene_robust {

inline constexpr int kPlacesClasses = 148;

/// Ordered (label_id, class_name) list; ids are contiguous from 0.
class ClassMap {
 public:
  ClassMap() = default;
  explicit ClassMap(std::vector<std::string> names, std::size_t required = kPlacesClasses) : names_(std::move(names)) {
    if (required && names_.size() != required)
      throw FormatError("class map has " + std::to_string(names_.size()) + " entries, expected " +
                        std::to_string(required));
    for (std::size_t i = 0; i < names_.size(); ++i) {
      if (names_[i].empty()) throw FormatError("class map entry " + std::to_string(i) + " has an empty name");
      if (!index_.emplace(names_[i], static_cast<int>(i)).second)
        throw FormatError("class map has duplicate name '" + names_[i] + "'");
    }
  }

  /// CSV `label_id,class_name` with a header row.
  static ClassMap parse(const std::string& text, const std::string& what = "class map",
                        std::size_t required = kPlacesClasses) {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    std::vector<std::string> names;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (lineno == 1) {
        if (line != "label_id,class_name") throw FormatError(what + ": header must be 'label_id,class_name'");
        continue;
      }
      if (line.empty()) continue;
      const auto comma = line.find(',');
      if (comma == std::string::npos) throw FormatError(what + ":" + std::to_string(lineno) + ": expected two fields");
      int id = -1;
      try {
        std::size_t used = 0;
        id = std::stoi(line.substr(0, comma), &used);
        if (used != comma) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw FormatError(what + ":" + std::to_string(lineno) + ": bad label_id");
      }
      if (id != static_cast<int>(names.size()))
        throw FormatError(what + ":" + std::to_string(lineno) + ": label_id " + std::to_string(id) + " out of order, expected " +
                          std::to_string(names.size()));
      names.push_back(line.substr(comma + 1));
    }
    if (lineno == 0) throw FormatError(what + ": empty file");
    try {
      return ClassMap(std::move(names), required);
    } catch (const FormatError& e) {
      throw FormatError(what + ": " + e.what());
    }
  }

  static ClassMap load(const std::string& path, std::size_t required = kPlacesClasses) {
    return parse(read_file_text(path), path, required);
  }

  std::string to_csv() const {
    std::string out = "label_id,class_name\n";
    for (std::size_t i = 0; i < names_.size(); ++i) out += std::to_string(i) + "," + names_[i] + "\n";
    return out;
  }

  int size() const { return static_cast<int>(names_.size()); }
  const std::string& name(int id) const {
    if (id < 0 || id >= size()) throw ContractError("label_id " + std::to_string(id) + " out of range");
    return names_[static_cast<std::size_t>(id)];
  }
  std::optional<int> find(const std::string& name) const {
    auto it = index_.find(name);
    return it == index_.end() ? std::nullopt : std::optional<int>(it->second);
  }
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::vector<std::string> names_;
  std::map<std::string, int> index_;
};

inline std::string default_class_map_path() { return SCENE_ROBUST_DATA_DIR "/places148_classes.csv"; }

}  // namespace scene_robust
