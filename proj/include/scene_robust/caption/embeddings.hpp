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
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "scene_robust/core/binary_io.hpp"
#include "scene_robust/core/rng.hpp"

namespace scene_robust {

inline constexpr std::size_t kEmbeddingDim = 50;
using Embedding = std::array<double, kEmbeddingDim>;

/// Token -> 50-vector table (GloVe text layout) with a seeded fallback for
/// misses: each coordinate uniform in [-0.01, 0.01], keyed on (seed, token) so
/// the draw does not depend on lookup order.
class EmbeddingTable {
 public:
  static constexpr double kFallbackRange = 0.01;

  explicit EmbeddingTable(std::uint64_t fallback_seed = 0) : fallback_seed_(fallback_seed) {}

  static EmbeddingTable parse(const std::string& text, std::uint64_t fallback_seed = 0,
                              const std::string& source = "embeddings") {
    EmbeddingTable t(fallback_seed);
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      std::istringstream ls(line);
      std::string token;
      ls >> token;
      Embedding v{};
      std::size_t n = 0;
      std::string num;
      while (ls >> num) {
        if (n == kEmbeddingDim)
          throw FormatError(source + ":" + std::to_string(lineno) + ": more than 50 values for '" + token + "'");
        double d = 0;
        auto [p, ec] = std::from_chars(num.data(), num.data() + num.size(), d);
        if (ec != std::errc() || p != num.data() + num.size() || !std::isfinite(d))
          throw FormatError(source + ":" + std::to_string(lineno) + ": bad number '" + num + "'");
        v[n++] = d;
      }
      if (n != kEmbeddingDim)
        throw FormatError(source + ":" + std::to_string(lineno) + ": expected 50 values for '" + token + "', got " +
                          std::to_string(n));
      t.table_[token] = v;
    }
    return t;
  }

  static EmbeddingTable load(const std::string& path, std::uint64_t fallback_seed = 0) {
    return parse(read_file_text(path), fallback_seed, path);
  }

  void insert(std::string token, const Embedding& v) { table_[std::move(token)] = v; }
  bool contains(const std::string& token) const { return table_.contains(token); }
  std::size_t size() const { return table_.size(); }
  std::uint64_t fallback_seed() const { return fallback_seed_; }

  Embedding lookup(const std::string& token) const {
    if (auto it = table_.find(token); it != table_.end()) return it->second;
    return fallback(token);
  }

  Embedding fallback(const std::string& token) const {
    Philox rng(SeedHasher(fallback_seed_).add("embedding-fallback").add(token).value());
    Embedding v{};
    for (auto& x : v) x = rng.uniform(-kFallbackRange, kFallbackRange);
    return v;
  }

 private:
  std::uint64_t fallback_seed_;
  std::unordered_map<std::string, Embedding> table_;
};

}  // namespace scene_robust
