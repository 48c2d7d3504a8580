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
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "scene_robust/core/binary_io.hpp"
#include "scene_robust/core/error.hpp"
#include "scene_robust/corruption/kinds.hpp"

namespace scene_robust {

using ErrorRow = std::array<double, kNumSeverities>;

/// Top-1 error rates of one model: clean and per (corruption, severity).
struct ErrorTable {
  std::string model;
  double clean_error = 0;
  std::array<ErrorRow, kNumCorruptions> grid{};

  const ErrorRow& row(CorruptionKind c) const { return grid[index_of(c)]; }
  ErrorRow& row(CorruptionKind c) { return grid[index_of(c)]; }

  void validate(const std::string& what = "error table") const {
    auto check = [&](double e, const std::string& where) {
      if (!(e >= 0 && e <= 1)) throw FormatError(what + ": " + where + " error " + std::to_string(e) + " outside [0, 1]");
    };
    check(clean_error, "clean");
    for (std::size_t c = 0; c < kNumCorruptions; ++c)
      for (int s = 0; s < kNumSeverities; ++s)
        check(grid[c][static_cast<std::size_t>(s)], std::string(kCorruptionNames[c]) + " s" + std::to_string(s + 1));
  }

  nlohmann::json to_json() const {
    nlohmann::json g = nlohmann::json::object();
    for (std::size_t c = 0; c < kNumCorruptions; ++c) g[std::string(kCorruptionNames[c])] = grid[c];
    return {{"model", model}, {"clean_error", clean_error}, {"grid", g}};
  }

  static ErrorTable from_json(const nlohmann::json& j, const std::string& what = "error table") {
    ErrorTable t;
    try {
      t.model = j.at("model").get<std::string>();
      t.clean_error = j.at("clean_error").get<double>();
      const auto& g = j.at("grid");
      for (const auto& [key, _] : g.items())
        if (!parse_corruption(key)) throw FormatError(what + ": unknown corruption '" + key + "'");
      for (std::size_t c = 0; c < kNumCorruptions; ++c) {
        const std::string name(kCorruptionNames[c]);
        if (!g.contains(name)) throw FormatError(what + ": grid lacks corruption '" + name + "'");
        const auto& row = g.at(name);
        if (!row.is_array() || row.size() != kNumSeverities)
          throw FormatError(what + ": '" + name + "' needs exactly 5 severity errors");
        for (int s = 0; s < kNumSeverities; ++s) t.grid[c][static_cast<std::size_t>(s)] = row.at(static_cast<std::size_t>(s)).get<double>();
      }
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(what + ": " + e.what());
    }
    t.validate(what);
    return t;
  }

  static ErrorTable load(const std::string& path) {
    try {
      return from_json(nlohmann::json::parse(read_file_text(path)), path);
    } catch (const nlohmann::json::parse_error& e) {
      throw FormatError(path + ": " + e.what());
    }
  }
};

/// CE_c = 100 * sum_s E_model / sum_s E_base.
inline double corruption_error(const ErrorTable& model, const ErrorTable& baseline, CorruptionKind c) {
  const auto& m = model.row(c);
  const auto& b = baseline.row(c);
  const double num = std::accumulate(m.begin(), m.end(), 0.0);
  const double den = std::accumulate(b.begin(), b.end(), 0.0);
  if (den == 0)
    throw UndefinedMetricError("CE undefined for " + std::string(to_string(c)) + ": baseline errors sum to zero");
  return 100.0 * (num / den);  // ratio first: identical tables give exactly 100
}

/// RCE_c = 100 * sum_s (E_model - E_model_clean) / sum_s (E_base - E_base_clean).
inline double relative_corruption_error(const ErrorTable& model, const ErrorTable& baseline, CorruptionKind c) {
  double num = 0, den = 0;
  for (int s = 0; s < kNumSeverities; ++s) {
    num += model.row(c)[static_cast<std::size_t>(s)] - model.clean_error;
    den += baseline.row(c)[static_cast<std::size_t>(s)] - baseline.clean_error;
  }
  if (den == 0)
    throw UndefinedMetricError("RCE undefined for " + std::string(to_string(c)) +
                               ": baseline corrupted errors equal its clean error");
  return 100.0 * (num / den);  // ratio first: identical tables give exactly 100
}

inline double mean_over_corruptions(std::span<const double> values, const char* what) {
  if (values.size() != kNumCorruptions)
    throw ContractError(std::string(what) + " needs exactly 15 per-corruption values, got " + std::to_string(values.size()));
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(kNumCorruptions);
}

inline double mean_ce(std::span<const double> ce) { return mean_over_corruptions(ce, "mCE"); }
inline double mean_rce(std::span<const double> rce) { return mean_over_corruptions(rce, "mRCE"); }

/// Formats `x` to one decimal with round-half-even applied to its shortest
/// decimal representation, so 0.25 -> "0.2", 0.35 -> "0.4", 62.45 -> "62.4".
inline std::string format_1dp(double x) {
  if (!std::isfinite(x)) return std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
  char buf[400];
  const auto res = std::to_chars(buf, buf + sizeof buf, std::abs(x), std::chars_format::fixed);
  const std::string s(buf, res.ptr);
  const auto dot = s.find('.');
  const std::string ip = s.substr(0, dot);
  const std::string fp = dot == std::string::npos ? "" : s.substr(dot + 1);
  std::string digits = ip + (fp.empty() ? '0' : fp[0]);
  if (fp.size() > 1) {
    const std::string rest = fp.substr(1);
    const bool above_half = rest[0] > '5' || (rest[0] == '5' && rest.find_first_not_of('0', 1) != std::string::npos);
    const bool tie = rest[0] == '5' && !above_half;
    if (above_half || (tie && (digits.back() - '0') % 2 == 1)) {
      int i = static_cast<int>(digits.size()) - 1;
      while (i >= 0 && digits[static_cast<std::size_t>(i)] == '9') digits[static_cast<std::size_t>(i--)] = '0';
      if (i < 0) digits.insert(digits.begin(), '1');
      else ++digits[static_cast<std::size_t>(i)];
    }
  }
  std::string out = digits.substr(0, digits.size() - 1) + "." + digits.back();
  if (x < 0 && out.find_first_not_of("0.") != std::string::npos) out.insert(out.begin(), '-');
  return out;
}

inline double round_1dp(double x) { return std::stod(format_1dp(x)); }

}  // namespace scene_robust
