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

#include <cstdint>
#include <string>
#include <unordered_set>
#include <vector>

#include "scene_robust/caption/cooccurrence.hpp"
#include "scene_robust/caption/embeddings.hpp"
#include "scene_robust/core/error.hpp"

namespace scene_robust {

struct Edge {
  int src;
  int dst;
  double weight;

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Node features (num_nodes x feature_dim, row-major) plus weighted directed
/// edges; the input format of the GIN encoder.
struct Graph {
  int num_nodes = 0;
  int feature_dim = 0;
  std::vector<double> features;
  std::vector<Edge> edges;

  double feature(int node, int d) const { return features[static_cast<std::size_t>(node) * feature_dim + d]; }

  void validate() const {
    if (num_nodes <= 0) throw ContractError("graph has no nodes");
    if (features.size() != static_cast<std::size_t>(num_nodes) * feature_dim)
      throw ContractError("graph feature matrix does not match num_nodes x feature_dim");
    for (const auto& e : edges)
      if (e.src < 0 || e.dst < 0 || e.src >= num_nodes || e.dst >= num_nodes)
        throw ContractError("edge index out of range");
  }

  friend bool operator==(const Graph&, const Graph&) = default;
};

/// Per-caption graph: distinct valid words first (first-occurrence order),
/// then one node per scene class. Every word node has an edge to every scene
/// node weighted by P(scene | word).
struct KnowledgeGraph {
  std::vector<std::string> words;
  int num_scenes = 0;
  Graph graph;

  int num_word_nodes() const { return static_cast<int>(words.size()); }

  friend bool operator==(const KnowledgeGraph&, const KnowledgeGraph&) = default;
};

/// Initial scene-node features: mean embedding of the class name's tokens
/// (split on '_', '-', '/', ' '), else the table's seeded fallback draw for
/// the full name.
inline std::vector<Embedding> scene_node_features(const std::vector<std::string>& class_names,
                                                  const EmbeddingTable& table) {
  std::vector<Embedding> out;
  out.reserve(class_names.size());
  for (const auto& name : class_names) {
    Embedding acc{};
    int hits = 0;
    std::string tok;
    auto flush = [&] {
      if (!tok.empty() && table.contains(tok)) {
        const auto v = table.lookup(tok);
        for (std::size_t d = 0; d < kEmbeddingDim; ++d) acc[d] += v[d];
        ++hits;
      }
      tok.clear();
    };
    for (char c : name) {
      if (c == '_' || c == '-' || c == '/' || c == ' ') flush();
      else tok += c;
    }
    flush();
    if (hits == 0) {
      out.push_back(table.fallback("scene:" + name));
      continue;
    }
    for (auto& x : acc) x /= hits;
    out.push_back(acc);
  }
  return out;
}

struct GraphOptions {
  /// Adds word->word edges weighted by the row-normalised M_w counts.
  bool word_word_edges = false;
};

inline KnowledgeGraph build_graph(const std::vector<std::string>& valid_words, const CoOccurrenceStats& stats,
                                  const EmbeddingTable& embeddings, const std::vector<Embedding>& scene_features,
                                  const GraphOptions& opts = {}) {
  if (valid_words.empty()) throw EmptyCaptionError("caption has no valid words");
  if (scene_features.size() != stats.num_scenes)
    throw ContractError("scene feature count " + std::to_string(scene_features.size()) +
                        " does not match statistics scene count " + std::to_string(stats.num_scenes));
  KnowledgeGraph kg;
  std::unordered_set<std::string> seen;
  for (const auto& w : valid_words)
    if (seen.insert(w).second) kg.words.push_back(w);
  const int nw = kg.num_word_nodes();
  kg.num_scenes = static_cast<int>(stats.num_scenes);
  Graph& g = kg.graph;
  g.num_nodes = nw + kg.num_scenes;
  g.feature_dim = static_cast<int>(kEmbeddingDim);
  g.features.reserve(static_cast<std::size_t>(g.num_nodes) * kEmbeddingDim);
  for (const auto& w : kg.words) {
    const auto v = embeddings.lookup(w);
    g.features.insert(g.features.end(), v.begin(), v.end());
  }
  for (const auto& v : scene_features) g.features.insert(g.features.end(), v.begin(), v.end());

  g.edges.reserve(static_cast<std::size_t>(nw) * kg.num_scenes);
  std::vector<std::optional<std::size_t>> rows;
  for (int i = 0; i < nw; ++i) {
    rows.push_back(stats.vocab.find(kg.words[static_cast<std::size_t>(i)]));
    const auto w = edge_weights(stats, rows.back());
    for (int j = 0; j < kg.num_scenes; ++j) g.edges.push_back({i, nw + j, w[static_cast<std::size_t>(j)]});
  }
  if (opts.word_word_edges) {
    const std::size_t n = stats.vocab.size();
    for (int i = 0; i < nw; ++i) {
      if (!rows[static_cast<std::size_t>(i)]) continue;
      const std::size_t ri = *rows[static_cast<std::size_t>(i)];
      std::uint64_t total = 0;
      for (std::size_t k = 0; k < n; ++k) total += stats.pair(ri, k);
      if (total == 0) continue;
      for (int j = 0; j < nw; ++j) {
        if (i == j || !rows[static_cast<std::size_t>(j)]) continue;
        const auto c = stats.pair(ri, *rows[static_cast<std::size_t>(j)]);
        if (c > 0) g.edges.push_back({i, j, static_cast<double>(c) / static_cast<double>(total)});
      }
    }
  }
  return kg;
}

}  // namespace scene_robust
