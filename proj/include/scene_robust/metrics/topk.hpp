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
#include <numeric>
#include <span>
#include <vector>

#include "scene_robust/core/error.hpp"

namespace scene_robust {

struct RankedClass {
  int class_id;
  double score;
};

/// Top-k classes by descending score; equal scores rank the smaller class id
/// first so accuracy numbers are reproducible.
inline std::vector<RankedClass> rank_top_k(std::span<const double> scores, int k) {
  const int n = static_cast<int>(scores.size());
  if (k < 1 || k > n) throw ContractError("k=" + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");
  std::vector<int> ids(static_cast<std::size_t>(n));
  std::iota(ids.begin(), ids.end(), 0);
  auto better = [&](int a, int b) {
    const double sa = scores[static_cast<std::size_t>(a)], sb = scores[static_cast<std::size_t>(b)];
    return sa != sb ? sa > sb : a < b;
  };
  std::partial_sort(ids.begin(), ids.begin() + k, ids.end(), better);
  std::vector<RankedClass> out;
  out.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) out.push_back({ids[static_cast<std::size_t>(i)], scores[static_cast<std::size_t>(ids[static_cast<std::size_t>(i)])]});
  return out;
}

/// Fraction of samples whose label is among the first k entries of its
/// ranked list.
inline double topk_accuracy(const std::vector<std::vector<int>>& ranked, const std::vector<int>& labels, int k) {
  if (ranked.size() != labels.size())
    throw ContractError("topk_accuracy: " + std::to_string(ranked.size()) + " predictions vs " +
                        std::to_string(labels.size()) + " labels");
  if (k < 1) throw ContractError("topk_accuracy: k must be >= 1");
  if (ranked.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    const auto& r = ranked[i];
    const auto end = r.begin() + std::min<std::ptrdiff_t>(k, static_cast<std::ptrdiff_t>(r.size()));
    hits += std::find(r.begin(), end, labels[i]) != end;
  }
  return static_cast<double>(hits) / static_cast<double>(ranked.size());
}

/// Full ranking (all classes) of each score row.
inline std::vector<std::vector<int>> rank_all(const std::vector<std::vector<double>>& score_rows) {
  std::vector<std::vector<int>> out;
  out.reserve(score_rows.size());
  for (const auto& row : score_rows) {
    std::vector<int> ids;
    for (const auto& rc : rank_top_k(row, static_cast<int>(row.size()))) ids.push_back(rc.class_id);
    out.push_back(std::move(ids));
  }
  return out;
}

}  // namespace scene_robust
