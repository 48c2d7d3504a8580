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
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "scene_robust/caption/preprocess.hpp"
#include "scene_robust/caption/records.hpp"
#include "scene_robust/core/binary_io.hpp"

namespace scene_robust {

inline constexpr int kDefaultWindow = 3;

/// Ordered list of valid words with a reverse index.
class ValidWordVocab {
 public:
  ValidWordVocab() = default;
  explicit ValidWordVocab(std::vector<std::string> words) : words_(std::move(words)) {
    for (std::size_t i = 0; i < words_.size(); ++i)
      if (!index_.emplace(words_[i], i).second) throw FormatError("duplicate vocabulary word '" + words_[i] + "'");
  }

  std::size_t size() const { return words_.size(); }
  const std::vector<std::string>& words() const { return words_; }
  const std::string& word(std::size_t i) const { return words_[i]; }
  std::optional<std::size_t> find(const std::string& w) const {
    auto it = index_.find(w);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Word x scene counts (M_y) and word x word window counts (M_w).
struct CoOccurrenceStats {
  static constexpr std::string_view kMagic = "P148COOC";
  static constexpr std::uint32_t kVersion = 1;

  ValidWordVocab vocab;
  std::size_t num_scenes = kNumScenes;
  int window = kDefaultWindow;
  std::vector<std::uint64_t> scene_counts;  // W x Y row-major
  std::vector<std::uint64_t> word_counts;   // W x W row-major, symmetric

  std::uint64_t scene(std::size_t w, std::size_t y) const { return scene_counts[w * num_scenes + y]; }
  std::uint64_t pair(std::size_t a, std::size_t b) const { return word_counts[a * vocab.size() + b]; }

  std::vector<std::uint8_t> serialize() const {
    ByteWriter out;
    out.put_bytes(kMagic);
    out.put(kVersion);
    out.put(static_cast<std::uint32_t>(window));
    out.put(static_cast<std::uint64_t>(vocab.size()));
    out.put(static_cast<std::uint64_t>(num_scenes));
    for (const auto& w : vocab.words()) {
      out.put(static_cast<std::uint32_t>(w.size()));
      out.put_bytes(w);
    }
    out.put_array(std::span<const std::uint64_t>(scene_counts));
    out.put_array(std::span<const std::uint64_t>(word_counts));
    return out.take();
  }

  static CoOccurrenceStats deserialize(std::span<const std::uint8_t> bytes, const std::string& what = "stats") {
    ByteReader in(bytes, what);
    in.expect_magic(kMagic);
    if (const auto v = in.get<std::uint32_t>(); v != kVersion)
      throw FormatError(what + ": unsupported version " + std::to_string(v));
    CoOccurrenceStats s;
    s.window = static_cast<int>(in.get<std::uint32_t>());
    const auto w = in.get<std::uint64_t>();
    s.num_scenes = in.get<std::uint64_t>();
    if (w > in.remaining() || s.num_scenes == 0 || s.num_scenes > 1'000'000)
      throw FormatError(what + ": implausible dimensions");
    std::vector<std::string> words;
    words.reserve(w);
    for (std::uint64_t i = 0; i < w; ++i) words.push_back(in.get_string(in.get<std::uint32_t>()));
    s.vocab = ValidWordVocab(std::move(words));
    if ((w * s.num_scenes + w * w) * 8 != in.remaining()) throw FormatError(what + ": count matrices truncated or padded");
    s.scene_counts.resize(w * s.num_scenes);
    s.word_counts.resize(w * w);
    in.get_array(std::span<std::uint64_t>(s.scene_counts));
    in.get_array(std::span<std::uint64_t>(s.word_counts));
    return s;
  }

  void save(const std::string& path) const { write_file_atomic(path, serialize()); }
  static CoOccurrenceStats load(const std::string& path) { return deserialize(read_file_bytes(path), path); }
};

/// Sparse accumulator; partial counters from different threads merge by
/// element-wise addition, so the result is independent of merge order.
class CooccurrenceCounter {
 public:
  CooccurrenceCounter(int window, std::size_t num_scenes = kNumScenes) : window_(window), num_scenes_(num_scenes) {
    if (window < 2) throw InputError("co-occurrence window must be >= 2, got " + std::to_string(window));
  }

  /// Counts one already-preprocessed, labeled word sequence.
  void add(const std::vector<std::string>& words, int label) {
    if (label < 0 || static_cast<std::size_t>(label) >= num_scenes_)
      throw InputError("label " + std::to_string(label) + " out of range");
    for (std::size_t i = 0; i < words.size(); ++i) {
      scene_[words[i]][static_cast<std::size_t>(label)] += 1;
      for (std::size_t j = i + 1; j < words.size() && j - i < static_cast<std::size_t>(window_); ++j) {
        pairs_[{words[i], words[j]}] += 1;
        if (words[i] != words[j]) pairs_[{words[j], words[i]}] += 1;
      }
    }
  }

  void merge(const CooccurrenceCounter& other) {
    if (other.window_ != window_ || other.num_scenes_ != num_scenes_) throw ContractError("merging incompatible counters");
    for (const auto& [w, row] : other.scene_)
      for (const auto& [y, n] : row) scene_[w][y] += n;
    for (const auto& [k, n] : other.pairs_) pairs_[k] += n;
  }

  CoOccurrenceStats finalize() const {
    std::vector<std::string> words;
    words.reserve(scene_.size());
    for (const auto& [w, row] : scene_) words.push_back(w);  // std::map: lexicographic
    CoOccurrenceStats s;
    s.vocab = ValidWordVocab(std::move(words));
    s.num_scenes = num_scenes_;
    s.window = window_;
    const std::size_t n = s.vocab.size();
    s.scene_counts.assign(n * num_scenes_, 0);
    s.word_counts.assign(n * n, 0);
    std::size_t i = 0;
    for (const auto& [w, row] : scene_) {
      for (const auto& [y, c] : row) s.scene_counts[i * num_scenes_ + y] = c;
      ++i;
    }
    for (const auto& [k, c] : pairs_) s.word_counts[*s.vocab.find(k.first) * n + *s.vocab.find(k.second)] = c;
    return s;
  }

 private:
  int window_;
  std::size_t num_scenes_;
  std::map<std::string, std::map<std::size_t, std::uint64_t>> scene_;
  std::map<std::pair<std::string, std::string>, std::uint64_t> pairs_;
};

/// Mines M_y and M_w over labeled captions. The vocabulary is the sorted union
/// of valid words.
inline CoOccurrenceStats mine_cooccurrence(const std::vector<CaptionRecord>& records, int window = kDefaultWindow,
                                           std::size_t num_scenes = kNumScenes, const PreprocessOptions& opts = {}) {
  CooccurrenceCounter counter(window, num_scenes);
  for (const auto& r : records) {
    if (!r.label_id) throw InputError("record " + r.image_id + " has no label_id; mining needs labeled captions");
    counter.add(preprocess_caption(r.caption, opts), *r.label_id);
  }
  return counter.finalize();
}

/// P(scene | word): the word's M_y row normalised over scenes. Unseen words
/// and all-zero rows get the uniform distribution.
inline std::vector<double> edge_weights(const CoOccurrenceStats& stats, std::optional<std::size_t> word) {
  const std::size_t y = stats.num_scenes;
  std::vector<double> out(y, 1.0 / static_cast<double>(y));
  if (!word) return out;
  std::uint64_t total = 0;
  for (std::size_t j = 0; j < y; ++j) total += stats.scene(*word, j);
  if (total == 0) return out;
  for (std::size_t j = 0; j < y; ++j)
    out[j] = static_cast<double>(stats.scene(*word, j)) / static_cast<double>(total);
  return out;
}

inline std::vector<double> edge_weights(const CoOccurrenceStats& stats, const std::string& word) {
  return edge_weights(stats, stats.vocab.find(word));
}

}  // namespace scene_robust
