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
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "scene_robust/metrics/precision_recall.hpp"
#include "scene_robust/metrics/robustness.hpp"
#include "scene_robust/metrics/topk.hpp"

namespace scene_robust {

struct AccuracyCell {
  double top1 = 0, top3 = 0, top5 = 0;  // fractions
  int samples = 0;

  static AccuracyCell from_ranked(const std::vector<std::vector<int>>& ranked, const std::vector<int>& labels) {
    return {topk_accuracy(ranked, labels, 1), topk_accuracy(ranked, labels, 3), topk_accuracy(ranked, labels, 5),
            static_cast<int>(labels.size())};
  }
  nlohmann::json to_json() const { return {{"top1", top1}, {"top3", top3}, {"top5", top5}, {"samples", samples}}; }
};

struct AccuracyGrid {
  AccuracyCell clean;
  std::array<std::array<AccuracyCell, kNumSeverities>, kNumCorruptions> cells{};

  AccuracyCell& at(CorruptionKind c, int level) { return cells[index_of(c)][static_cast<std::size_t>(level - 1)]; }
  const AccuracyCell& at(CorruptionKind c, int level) const {
    return cells[index_of(c)][static_cast<std::size_t>(level - 1)];
  }

  /// Top-1 error table (E = 1 - top1).
  ErrorTable errors(const std::string& model) const {
    ErrorTable t;
    t.model = model;
    t.clean_error = 1 - clean.top1;
    for (std::size_t c = 0; c < kNumCorruptions; ++c)
      for (std::size_t s = 0; s < kNumSeverities; ++s) t.grid[c][s] = 1 - cells[c][s].top1;
    return t;
  }
};

struct RobustnessScores {
  std::string baseline;
  std::array<double, kNumCorruptions> ce{}, rce{};
  double mce = 0, mrce = 0;

  static RobustnessScores compute(const ErrorTable& model, const ErrorTable& baseline) {
    RobustnessScores r;
    r.baseline = baseline.model;
    for (std::size_t c = 0; c < kNumCorruptions; ++c) {
      r.ce[c] = corruption_error(model, baseline, kAllCorruptions[c]);
      r.rce[c] = relative_corruption_error(model, baseline, kAllCorruptions[c]);
    }
    r.mce = mean_ce(r.ce);
    r.mrce = mean_rce(r.rce);
    return r;
  }
};

struct EvalReport {
  std::string model;
  AccuracyGrid accuracy;
  std::optional<RobustnessScores> robustness;
  std::optional<PrSummary> pr;  // on the clean subset
  nlohmann::json provenance = nlohmann::json::object();

  /// Canonical JSON: keys sorted, full-precision numbers, plus a `display`
  /// block holding the one-decimal percentages used in tables.
  nlohmann::json to_json() const {
    nlohmann::json j;
    j["model"] = model;
    j["provenance"] = provenance;
    nlohmann::json grid = nlohmann::json::object();
    for (std::size_t c = 0; c < kNumCorruptions; ++c) {
      nlohmann::json row = nlohmann::json::array();
      for (const auto& cell : accuracy.cells[c]) row.push_back(cell.to_json());
      grid[std::string(kCorruptionNames[c])] = row;
    }
    j["accuracy"] = {{"clean", accuracy.clean.to_json()}, {"corrupted", grid}};
    nlohmann::json display;
    display["clean_top1"] = format_1dp(100 * accuracy.clean.top1);
    if (robustness) {
      nlohmann::json ce = nlohmann::json::object(), rce = nlohmann::json::object();
      nlohmann::json dce = nlohmann::json::object(), drce = nlohmann::json::object();
      for (std::size_t c = 0; c < kNumCorruptions; ++c) {
        const std::string name(kCorruptionNames[c]);
        ce[name] = robustness->ce[c];
        rce[name] = robustness->rce[c];
        dce[name] = format_1dp(robustness->ce[c]);
        drce[name] = format_1dp(robustness->rce[c]);
      }
      j["robustness"] = {{"baseline", robustness->baseline}, {"ce", ce}, {"rce", rce},
                         {"mce", robustness->mce}, {"mrce", robustness->mrce}};
      display["ce"] = dce;
      display["rce"] = drce;
      display["mce"] = format_1dp(robustness->mce);
      display["mrce"] = format_1dp(robustness->mrce);
    }
    if (pr) {
      nlohmann::json per = nlohmann::json::object();
      for (const auto& c : pr->classes) per[std::to_string(c.class_id)] = {{"ap", c.average_precision}, {"positives", c.positives}};
      j["precision_recall"] = {{"macro_ap", pr->macro_ap}, {"classes", per}, {"excluded_classes", pr->excluded}};
      display["macro_ap"] = format_1dp(100 * pr->macro_ap);
    }
    j["display"] = display;
    return j;
  }

  /// Long-table layout: one block per metric, rows = severity, columns =
  /// corruption; percentages to one decimal.
  std::string accuracy_csv() const {
    std::ostringstream out;
    out << "metric,severity";
    for (auto name : kCorruptionNames) out << ',' << name;
    out << ",avg\n";
    for (int m = 0; m < 3; ++m) {
      const char* metric = m == 0 ? "top1" : m == 1 ? "top3" : "top5";
      auto pick = [m](const AccuracyCell& c) { return m == 0 ? c.top1 : m == 1 ? c.top3 : c.top5; };
      out << metric << ",clean";
      for (std::size_t c = 0; c < kNumCorruptions; ++c) out << ',' << format_1dp(100 * pick(accuracy.clean));
      out << ',' << format_1dp(100 * pick(accuracy.clean)) << '\n';
      for (std::size_t s = 0; s < kNumSeverities; ++s) {
        out << metric << ',' << s + 1;
        double sum = 0;
        for (std::size_t c = 0; c < kNumCorruptions; ++c) {
          const double v = pick(accuracy.cells[c][s]);
          sum += v;
          out << ',' << format_1dp(100 * v);
        }
        out << ',' << format_1dp(100 * sum / kNumCorruptions) << '\n';
      }
    }
    return out.str();
  }

  std::string pr_csv() const {
    std::ostringstream out;
    out << "class_id,threshold,precision,recall\n";
    out.precision(17);
    if (pr)
      for (const auto& c : pr->classes)
        for (const auto& p : c.points) out << c.class_id << ',' << p.threshold << ',' << p.precision << ',' << p.recall << '\n';
    return out.str();
  }
};

/// Markdown summary of several EvalReport JSON documents, one row each.
inline std::string comparison_markdown(const std::vector<nlohmann::json>& reports) {
  std::ostringstream out;
  out << "| model | clean top-1 | corrupted top-1 | mCE | mRCE | macro-AP |\n";
  out << "|---|---:|---:|---:|---:|---:|\n";
  for (const auto& r : reports) {
    try {
      const auto& disp = r.at("display");
      double sum = 0;
      int n = 0;
      for (const auto& [kind, row] : r.at("accuracy").at("corrupted").items())
        for (const auto& cell : row) {
          sum += cell.at("top1").get<double>();
          ++n;
        }
      if (n != static_cast<int>(kNumCorruptions * kNumSeverities))
        throw FormatError("report for " + r.value("model", "?") + " has " + std::to_string(n) + " corrupted cells");
      auto field = [&](const char* k) { return disp.contains(k) ? disp.at(k).get<std::string>() : std::string("-"); };
      out << "| " << r.at("model").get<std::string>() << " | " << field("clean_top1") << " | "
          << format_1dp(100 * sum / n) << " | " << field("mce") << " | " << field("mrce") << " | "
          << field("macro_ap") << " |\n";
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("malformed evaluation report: ") + e.what());
    }
  }
  return out.str();
}

}  // namespace scene_robust
