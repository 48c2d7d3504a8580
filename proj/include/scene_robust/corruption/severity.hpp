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
#include <charconv>
#include <cmath>
#include <algorithm>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "scene_robust/core/binary_io.hpp"
#include "scene_robust/core/error.hpp"
#include "scene_robust/corruption/kinds.hpp"

namespace scene_robust {

/// Named scalar parameters for one (kind, level) row.
class SeverityRow {
 public:
  SeverityRow() = default;
  explicit SeverityRow(std::map<std::string, double> values) : values_(std::move(values)) {}

  double get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("severity row lacks field '" + key + "'");
    return it->second;
  }
  bool has(const std::string& key) const { return values_.contains(key); }
  const std::map<std::string, double>& values() const { return values_; }

 private:
  std::map<std::string, double> values_;
};

/// Fields each kind must define, plus the field whose monotone direction
/// across levels encodes "more severe".
struct KindSchema {
  std::vector<std::string> fields;
  std::string strength_field;
  int direction;  // +1 non-decreasing, -1 non-increasing
};

inline const KindSchema& schema_for(CorruptionKind k) {
  static const std::array<KindSchema, kNumCorruptions> table = {{
      {{"sigma"}, "sigma", +1},
      {{"photons"}, "photons", -1},
      {{"amount"}, "amount", +1},
      {{"radius", "alias_sigma"}, "radius", +1},
      {{"sigma", "max_delta", "iterations"}, "sigma", +1},
      {{"radius", "sigma"}, "sigma", +1},
      {{"max_zoom", "step"}, "max_zoom", +1},
      {{"loc", "scale", "zoom", "threshold", "radius", "sigma", "blend"}, "loc", +1},
      {{"image_weight", "frost_weight"}, "frost_weight", +1},
      {{"strength", "decay"}, "strength", +1},
      {{"delta"}, "delta", +1},
      {{"factor"}, "factor", -1},
      {{"alpha", "sigma", "affine"}, "alpha", +1},
      {{"factor"}, "factor", -1},
      {{"quality"}, "quality", -1},
  }};
  return table[index_of(k)];
}

/// The 75-row severity table. Text format, one row per line:
///
///     <kind> <level> <field>=<value> [<field>=<value> ...]
///
/// `#` starts a comment; a `version <n>` line is required first.
class SeverityParams {
 public:
  static constexpr int kFormatVersion = 1;

  static SeverityParams parse(const std::string& text) {
    SeverityParams p;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    bool have_version = false;
    while (std::getline(in, line)) {
      ++lineno;
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      std::istringstream ls(line);
      std::string head;
      if (!(ls >> head)) continue;
      const std::string where = "severity config line " + std::to_string(lineno);
      if (head == "version") {
        int v = 0;
        if (!(ls >> v) || v != kFormatVersion)
          throw ConfigError(where + ": unsupported version");
        have_version = true;
        continue;
      }
      if (!have_version) throw ConfigError(where + ": missing 'version' line");
      auto kind = parse_corruption(head);
      if (!kind) throw ConfigError(where + ": unknown corruption '" + head + "'");
      int level = 0;
      if (!(ls >> level) || level < 1 || level > kNumSeverities)
        throw ConfigError(where + ": bad severity level");
      std::map<std::string, double> values;
      std::string kv;
      while (ls >> kv) {
        auto eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError(where + ": expected field=value, got '" + kv + "'");
        double v = 0;
        const char* b = kv.data() + eq + 1;
        const char* e = kv.data() + kv.size();
        auto [ptr, ec] = std::from_chars(b, e, v);
        if (ec != std::errc() || ptr != e || !std::isfinite(v))
          throw ConfigError(where + ": bad number in '" + kv + "'");
        values[kv.substr(0, eq)] = v;
      }
      auto& slot = p.rows_[index_of(*kind)][static_cast<std::size_t>(level - 1)];
      if (slot) throw ConfigError(where + ": duplicate row for " + head + " " + std::to_string(level));
      slot = SeverityRow(std::move(values));
    }
    p.validate();
    p.hash_ = content_hash(std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
    return p;
  }

  static SeverityParams load(const std::string& path) { return parse(read_file_text(path)); }

  const SeverityRow& row(CorruptionKind kind, SeverityLevel level) const {
    const auto& slot = rows_[index_of(kind)][static_cast<std::size_t>(level.value() - 1)];
    if (!slot)
      throw ConfigError("missing severity row for " + std::string(to_string(kind)) + " level " +
                        std::to_string(level.value()));
    return *slot;
  }

  /// Drops a row; only useful for exercising the missing-row path.
  void erase(CorruptionKind kind, SeverityLevel level) {
    rows_[index_of(kind)][static_cast<std::size_t>(level.value() - 1)].reset();
  }

  const std::string& hash() const { return hash_; }

 private:
  void validate() const {
    for (auto kind : kAllCorruptions) {
      const auto& schema = schema_for(kind);
      const std::string name(to_string(kind));
      double prev = 0;
      for (int lv = 1; lv <= kNumSeverities; ++lv) {
        const auto& slot = rows_[index_of(kind)][static_cast<std::size_t>(lv - 1)];
        if (!slot)
          throw ConfigError("severity config lacks row " + name + " " + std::to_string(lv));
        for (const auto& f : schema.fields)
          if (!slot->has(f))
            throw ConfigError("severity row " + name + " " + std::to_string(lv) + " lacks '" + f + "'");
        for (const auto& [k, v] : slot->values())
          if (std::find(schema.fields.begin(), schema.fields.end(), k) == schema.fields.end())
            throw ConfigError("severity row " + name + " " + std::to_string(lv) + " has unknown field '" + k + "'");
        const double s = slot->get(schema.strength_field);
        if (lv > 1 && (s - prev) * schema.direction < 0)
          throw ConfigError("severity config: " + name + "." + schema.strength_field +
                            " is not monotone in level");
        prev = s;
      }
    }
  }

  std::array<std::array<std::optional<SeverityRow>, kNumSeverities>, kNumCorruptions> rows_{};
  std::string hash_;
};

}  // namespace scene_robust
