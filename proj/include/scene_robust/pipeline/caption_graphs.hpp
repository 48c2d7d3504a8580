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
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "scene_robust/caption/cooccurrence.hpp"
#include "scene_robust/caption/embeddings.hpp"
#include "scene_robust/caption/graph.hpp"
#include "scene_robust/caption/preprocess.hpp"
#include "scene_robust/caption/records.hpp"
#include "scene_robust/dataset/class_map.hpp"

namespace scene_robust {

/// Everything needed to turn a raw caption into its knowledge graph.
class GraphContext {
 public:
  GraphContext(const ClassMap& classes, CoOccurrenceStats stats, EmbeddingTable embeddings, GraphOptions opts = {},
               PreprocessOptions pre = {})
      : stats_(std::move(stats)), embeddings_(std::move(embeddings)), opts_(opts), pre_(std::move(pre)) {
    if (stats_.num_scenes != static_cast<std::size_t>(classes.size()))
      throw InputError("co-occurrence statistics have " + std::to_string(stats_.num_scenes) +
                       " scenes but the class map has " + std::to_string(classes.size()));
    scenes_ = scene_node_features(classes.names(), embeddings_);
  }

  /// Empty after preprocessing -> nullopt (callers use a zero descriptor).
  std::optional<KnowledgeGraph> build_knowledge(const std::string& caption) const {
    const auto words = preprocess_caption(caption, pre_);
    if (words.empty()) return std::nullopt;
    return build_graph(words, stats_, embeddings_, scenes_, opts_);
  }
  std::optional<Graph> build(const std::string& caption) const {
    auto kg = build_knowledge(caption);
    return kg ? std::optional<Graph>(std::move(kg->graph)) : std::nullopt;
  }

  const CoOccurrenceStats& stats() const { return stats_; }

 private:
  CoOccurrenceStats stats_;
  EmbeddingTable embeddings_;
  GraphOptions opts_;
  PreprocessOptions pre_;
  std::vector<Embedding> scenes_;
};

/// Graphs for a caption file keyed by image id; empty captions are recorded
/// in `empty` and have no graph.
struct CaptionGraphs {
  std::map<std::string, Graph> graphs;
  std::map<std::string, int> labels;  // from the caption file, when present
  std::vector<std::string> empty;

  static CaptionGraphs build(const std::vector<CaptionRecord>& records, const GraphContext& ctx) {
    CaptionGraphs out;
    for (const auto& r : records) {
      if (out.graphs.contains(r.image_id) ||
          std::find(out.empty.begin(), out.empty.end(), r.image_id) != out.empty.end())
        throw FormatError("duplicate caption for image " + r.image_id);
      if (r.label_id) out.labels[r.image_id] = *r.label_id;
      if (auto g = ctx.build(r.caption)) out.graphs.emplace(r.image_id, std::move(*g));
      else out.empty.push_back(r.image_id);
    }
    return out;
  }

  const Graph* find(const std::string& id) const {
    auto it = graphs.find(id);
    return it == graphs.end() ? nullptr : &it->second;
  }
  bool has_caption(const std::string& id) const {
    return graphs.contains(id) || std::find(empty.begin(), empty.end(), id) != empty.end();
  }
};

}  // namespace scene_robust
