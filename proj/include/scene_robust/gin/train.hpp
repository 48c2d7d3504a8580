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
#include <chrono>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "scene_robust/gin/model.hpp"
#include "scene_robust/metrics/topk.hpp"

namespace scene_robust {

struct TrainConfig {
  int epochs = 15;
  int batch_size = 64;
  double learning_rate = 1e-4;
  double weight_decay = 6e-4;
  std::uint64_t seed = 0;

  void validate() const {
    if (epochs < 0) throw ConfigError("epochs must be >= 0");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (!(learning_rate > 0)) throw ConfigError("learning_rate must be > 0");
    if (weight_decay < 0) throw ConfigError("weight_decay must be >= 0");
  }

  nlohmann::json to_json() const {
    return {{"epochs", epochs}, {"batch_size", batch_size}, {"learning_rate", learning_rate},
            {"weight_decay", weight_decay}, {"seed", seed}};
  }
};

struct LabeledGraphs {
  std::vector<const Graph*> graphs;
  std::vector<int> labels;
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0;
  double val_top1 = 0, val_top3 = 0, val_top5 = 0;
  double wall_ms = 0;

  nlohmann::json to_json() const {
    return {{"epoch", epoch}, {"train_loss", train_loss}, {"val_top1", val_top1},
            {"val_top3", val_top3}, {"val_top5", val_top5}, {"wall_ms", wall_ms}};
  }
};

/// Fisher-Yates permutation of [0, n) keyed by (seed, epoch).
inline std::vector<int> epoch_permutation(int n, std::uint64_t seed, int epoch) {
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  Philox rng(SeedHasher(seed).add("shuffle").add(static_cast<std::uint64_t>(epoch)).value());
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(i + 1));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  return idx;
}

inline std::uint64_t dropout_key(std::uint64_t seed, int epoch, int step) {
  return SeedHasher(seed).add("dropout").add(static_cast<std::uint64_t>(epoch)).add(static_cast<std::uint64_t>(step)).value();
}

/// Top-k accuracies (percent) of the encoder's class logits.
inline std::array<double, 3> evaluate_topk(const GinEncoder& model, const LabeledGraphs& data, int chunk = 256) {
  if (data.graphs.empty()) return {0, 0, 0};
  std::vector<std::vector<int>> ranked;
  for (std::size_t s = 0; s < data.graphs.size(); s += static_cast<std::size_t>(chunk)) {
    const std::size_t e = std::min(data.graphs.size(), s + static_cast<std::size_t>(chunk));
    const auto [desc, logits] = model.forward_batch(std::span(data.graphs).subspan(s, e - s));
    for (int r = 0; r < logits.rows; ++r) {
      std::vector<int> ids;
      for (const auto& rc : rank_top_k(std::span<const double>(logits.row(r), static_cast<std::size_t>(logits.cols)),
                                       std::min(5, logits.cols)))
        ids.push_back(rc.class_id);
      ranked.push_back(std::move(ids));
    }
  }
  const int kmax = static_cast<int>(ranked.front().size());
  return {100.0 * topk_accuracy(ranked, data.labels, 1), 100.0 * topk_accuracy(ranked, data.labels, std::min(3, kmax)),
          100.0 * topk_accuracy(ranked, data.labels, std::min(5, kmax))};
}

/// Folds batch statistics into the running statistics:
/// running = momentum * running + (1 - momentum) * batch (unbiased variance).
inline void update_running_stats(GinEncoder& model, const std::vector<nn::Tape<double>::BatchStats>& stats, int nodes) {
  const double m = model.config().bn_momentum;
  const double unbias = nodes > 1 ? static_cast<double>(nodes) / (nodes - 1) : 1.0;
  auto& p = model.mutable_params();
  for (std::size_t b = 0; b < stats.size(); ++b) {
    auto& mean = p.at(gin_detail::block_name(static_cast<int>(b) + 1, "bn_mean"));
    auto& var = p.at(gin_detail::block_name(static_cast<int>(b) + 1, "bn_var"));
    for (std::size_t j = 0; j < mean.v.size(); ++j) {
      mean.v[j] = m * mean.v[j] + (1 - m) * stats[b].mean[j];
      var.v[j] = m * var.v[j] + (1 - m) * stats[b].var[j] * unbias;
    }
  }
}

struct TrainResult {
  GinEncoder model;
  std::vector<EpochLog> log;
};

/// Mini-batch AdamW training of the high-level encoder. Everything except
/// `wall_ms` is a pure function of the inputs and the seed.
inline TrainResult train_high_level(const GinModelConfig& model_config, const LabeledGraphs& train,
                                    const LabeledGraphs& val, const TrainConfig& tc, std::ostream* log_sink = nullptr) {
  tc.validate();
  if (train.graphs.size() != train.labels.size() || val.graphs.size() != val.labels.size())
    throw ContractError("train_high_level: graphs and labels differ in length");
  if (train.graphs.empty() && tc.epochs > 0) throw InputError("training set is empty");

  TrainResult out{GinEncoder::initialize(model_config, tc.seed), {}};
  nn::AdamW opt({tc.learning_rate, tc.weight_decay}, out.model.trainable_names());
  const int n = static_cast<int>(train.graphs.size());

  for (int epoch = 1; epoch <= tc.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto order = epoch_permutation(n, tc.seed, epoch);
    double loss_sum = 0;
    int step = 0;
    for (int s = 0; s < n; s += tc.batch_size, ++step) {
      const int e = std::min(n, s + tc.batch_size);
      std::vector<const Graph*> gs;
      std::vector<int> ys;
      int nodes = 0;
      for (int i = s; i < e; ++i) {
        gs.push_back(train.graphs[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])]);
        ys.push_back(train.labels[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])]);
        nodes += gs.back()->num_nodes;
      }
      auto lg = loss_and_grad(out.model, gs, ys, dropout_key(tc.seed, epoch, step));
      loss_sum += lg.loss * (e - s);
      opt.step(out.model.mutable_params(), lg.grads);
      update_running_stats(out.model, lg.bn_stats, nodes);
      for (const auto& [name, m] : out.model.params())
        if (!nn::all_finite(m)) throw NumericError("parameter " + name + " became non-finite in epoch " + std::to_string(epoch));
    }
    EpochLog entry;
    entry.epoch = epoch;
    entry.train_loss = loss_sum / n;
    const auto acc = evaluate_topk(out.model, val);
    entry.val_top1 = acc[0];
    entry.val_top3 = acc[1];
    entry.val_top5 = acc[2];
    entry.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    if (log_sink) *log_sink << entry.to_json().dump() << '\n';
    out.log.push_back(entry);
  }
  // Stored tensors are float; keep the in-memory model identical to a reload.
  nn::round_to_f32(out.model.mutable_params());
  return out;
}

}  // namespace scene_robust
