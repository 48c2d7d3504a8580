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
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "scene_robust/core/error.hpp"
#include "scene_robust/nn/tensor.hpp"

namespace scene_robust {

struct PrPoint {
  double threshold;
  double precision;
  double recall;
};

struct ClassPr {
  int class_id = 0;
  int positives = 0;
  double average_precision = 0;
  std::vector<PrPoint> points;  // one per distinct score, descending threshold
};

struct PrSummary {
  std::vector<ClassPr> classes;
  std::vector<int> excluded;  // classes without positives
  double macro_ap = 0;
};

/// One-vs-rest precision/recall for one class. Samples with equal scores are
/// one threshold. AP = sum over thresholds of (R_k - R_{k-1}) * P_k.
inline ClassPr class_pr(std::span<const double> scores, std::span<const int> is_positive, int class_id = 0) {
  if (scores.size() != is_positive.size()) throw ContractError("class_pr: scores and labels differ in length");
  ClassPr out;
  out.class_id = class_id;
  for (double s : scores)
    if (!std::isfinite(s)) throw ContractError("class_pr: non-finite score");
  out.positives = static_cast<int>(std::count_if(is_positive.begin(), is_positive.end(), [](int p) { return p != 0; }));
  if (out.positives == 0) throw UndefinedMetricError("class " + std::to_string(class_id) + " has no positives");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  int tp = 0, fp = 0;
  double prev_recall = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double t = scores[order[i]];
    for (; i < order.size() && scores[order[i]] == t; ++i) (is_positive[order[i]] ? tp : fp)++;
    const double precision = static_cast<double>(tp) / (tp + fp);
    const double recall = static_cast<double>(tp) / out.positives;
    out.average_precision += (recall - prev_recall) * precision;
    prev_recall = recall;
    out.points.push_back({t, precision, recall});
  }
  return out;
}

/// Per-class curves over a score matrix (rows = samples, cols = classes) and
/// the macro average of AP over classes that have positives.
inline PrSummary pr_curve(const nn::Matrix<double>& scores, std::span<const int> labels) {
  if (scores.rows != static_cast<int>(labels.size())) throw ContractError("pr_curve: scores and labels differ in length");
  PrSummary out;
  std::vector<double> col(static_cast<std::size_t>(scores.rows));
  std::vector<int> pos(static_cast<std::size_t>(scores.rows));
  for (int c = 0; c < scores.cols; ++c) {
    for (int i = 0; i < scores.rows; ++i) {
      col[static_cast<std::size_t>(i)] = scores(i, c);
      pos[static_cast<std::size_t>(i)] = labels[static_cast<std::size_t>(i)] == c;
    }
    if (std::find(pos.begin(), pos.end(), 1) == pos.end()) {
      out.excluded.push_back(c);
      continue;
    }
    out.classes.push_back(class_pr(col, pos, c));
  }
  if (out.classes.empty()) throw UndefinedMetricError("macro-AP undefined: no class has a positive sample");
  for (const auto& c : out.classes) out.macro_ap += c.average_precision;
  out.macro_ap /= static_cast<double>(out.classes.size());
  return out;
}

}  // namespace scene_robust
