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
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "scene_robust/fusion/features.hpp"
#include "scene_robust/gin/train.hpp"
#include "scene_robust/metrics/topk.hpp"

namespace scene_robust {

/// z = h || l.
inline std::vector<double> fuse(std::span<const double> h, std::span<const float> l, std::size_t expected_h) {
  if (h.size() != expected_h)
    throw ContractError("descriptor has " + std::to_string(h.size()) + " values, expected " + std::to_string(expected_h));
  if (l.size() != kLowLevelDim)
    throw ContractError("low-level vector has " + std::to_string(l.size()) + " values, expected 128");
  std::vector<double> z(h.begin(), h.end());
  z.insert(z.end(), l.begin(), l.end());
  return z;
}

struct FusionConfig {
  int high_dim = 128;
  int low_dim = static_cast<int>(kLowLevelDim);
  int num_classes = 148;
  std::vector<int> hidden_layers;  // empty: one linear layer
  // Stream ablation: a disabled stream is zeroed before the head.
  bool use_high = true;
  bool use_low = true;

  void validate() const {
    if (high_dim <= 0 || low_dim <= 0 || num_classes <= 1) throw ConfigError("fusion dimensions must be positive");
    for (int w : hidden_layers)
      if (w <= 0) throw ConfigError("fusion hidden widths must be positive");
    if (!use_high && !use_low) throw ConfigError("fusion needs at least one stream");
  }
  int input_dim() const { return high_dim + low_dim; }
  int num_layers() const { return static_cast<int>(hidden_layers.size()) + 1; }

  nlohmann::json to_json() const {
    return {{"high_dim", high_dim}, {"low_dim", low_dim}, {"num_classes", num_classes},
            {"hidden_layers", hidden_layers}, {"use_high", use_high}, {"use_low", use_low}};
  }
  static FusionConfig from_json(const nlohmann::json& j) {
    try {
      FusionConfig c;
      c.high_dim = j.at("high_dim");
      c.low_dim = j.at("low_dim");
      c.num_classes = j.at("num_classes");
      c.hidden_layers = j.at("hidden_layers").get<std::vector<int>>();
      c.use_high = j.at("use_high");
      c.use_low = j.at("use_low");
      c.validate();
      return c;
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("bad fusion config: ") + e.what());
    }
  }
};

/// Fully connected head over fused vectors.
class FusionHead {
 public:
  FusionHead() = default;
  FusionHead(FusionConfig c, NamedTensors p) : config_(std::move(c)), params_(std::move(p)) { config_.validate(); }

  static FusionHead initialize(const FusionConfig& c, std::uint64_t seed) {
    c.validate();
    Philox rng(SeedHasher(seed).add("fusion-init").value());
    NamedTensors p;
    int in = c.input_dim();
    for (int k = 0; k < c.num_layers(); ++k) {
      const int out = k < static_cast<int>(c.hidden_layers.size()) ? c.hidden_layers[static_cast<std::size_t>(k)] : c.num_classes;
      const double a = 1.0 / std::sqrt(static_cast<double>(in));
      Matrix<double> w(in, out), b(1, out);
      for (double& x : w.v) x = rng.uniform(-a, a);
      for (double& x : b.v) x = rng.uniform(-a, a);
      p[layer_name(k, "w")] = std::move(w);
      p[layer_name(k, "b")] = std::move(b);
      in = out;
    }
    nn::round_to_f32(p);
    return FusionHead(c, std::move(p));
  }

  static std::string layer_name(int k, const char* field) { return "layer" + std::to_string(k) + "/" + field; }

  const FusionConfig& config() const { return config_; }
  const NamedTensors& params() const { return params_; }
  NamedTensors& mutable_params() { return params_; }

  Matrix<double> stream_mask(int rows) const {
    Matrix<double> m(rows, config_.input_dim(), 1.0);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < config_.input_dim(); ++j)
        if ((j < config_.high_dim && !config_.use_high) || (j >= config_.high_dim && !config_.use_low)) m(i, j) = 0;
    return m;
  }

  nn::Tape<double>::Var forward_on_tape(nn::Tape<double>& tape, const Matrix<double>& z,
                                        std::map<std::string, nn::Tape<double>::Var>* param_vars) const {
    if (z.cols != config_.input_dim())
      throw ContractError("fused input has " + std::to_string(z.cols) + " columns, expected " +
                          std::to_string(config_.input_dim()));
    std::map<std::string, nn::Tape<double>::Var> vars;
    for (const auto& [name, m] : params_) vars[name] = param_vars ? tape.param(m) : tape.constant(m);
    if (param_vars) *param_vars = vars;
    auto x = tape.mask(tape.constant(z), stream_mask(z.rows));
    for (int k = 0; k < config_.num_layers(); ++k) {
      x = tape.add_bias(tape.matmul(x, vars.at(layer_name(k, "w"))), vars.at(layer_name(k, "b")));
      if (k + 1 < config_.num_layers()) x = tape.relu(x);
    }
    return x;
  }

  Matrix<double> logits(const Matrix<double>& z) const {
    nn::Tape<double> tape;
    return tape.value(forward_on_tape(tape, z, nullptr));
  }

 private:
  FusionConfig config_;
  NamedTensors params_;
};

/// Frozen high-level encoder plus the trained head.
struct FusionModel {
  GinEncoder high;
  FusionHead head;

  nn::Checkpoint to_checkpoint(nlohmann::json training = nlohmann::json::object()) const {
    nn::Checkpoint c = high.to_checkpoint({}, "high/");
    c.metadata = nlohmann::json::object();
    c.metadata["kind"] = "fusion";
    c.metadata["high_config"] = high.config().to_json();
    c.metadata["fusion_config"] = head.config().to_json();
    c.metadata["config_hash"] = high.config().hash();
    c.metadata["training"] = std::move(training);
    for (const auto& [name, m] : head.params()) c.tensors["fusion/" + name] = nn::to_f32(m);
    return c;
  }

  static FusionModel from_checkpoint(const nn::Checkpoint& c) {
    if (c.metadata.value("kind", "") != "fusion") throw FormatError("checkpoint is not a fusion checkpoint");
    for (const auto& [name, _] : c.tensors)
      if (!name.starts_with("high/") && !name.starts_with("fusion/"))
        throw FormatError("checkpoint has unknown tensor '" + name + "'");
    FusionModel m;
    m.high = GinEncoder::from_checkpoint(c, "high/");
    const auto cfg = FusionConfig::from_json(c.metadata.at("fusion_config"));
    const auto expected = FusionHead::initialize(cfg, 0).params();
    NamedTensors p;
    for (const auto& [name, t] : c.tensors) {
      if (!name.starts_with("fusion/")) continue;
      const auto key = name.substr(7);
      auto it = expected.find(key);
      if (it == expected.end()) throw FormatError("checkpoint has unknown tensor '" + name + "'");
      p[key] = nn::from_f32(t, name);
      if (!p[key].same_shape(it->second))
        throw FormatError("checkpoint tensor '" + name + "' has shape " + p[key].shape_str() + ", expected " +
                          it->second.shape_str());
    }
    for (const auto& [name, _] : expected)
      if (!p.contains(name)) throw FormatError("checkpoint lacks tensor 'fusion/" + name + "'");
    m.head = FusionHead(cfg, std::move(p));
    return m;
  }
};

struct FusionTrainResult {
  FusionHead head;
  std::vector<EpochLog> log;
};

/// Trains the head on precomputed fused vectors. Rows of `z` are samples.
inline FusionTrainResult train_fusion_head(const FusionConfig& config, const Matrix<double>& z,
                                           const std::vector<int>& labels, const Matrix<double>& val_z,
                                           const std::vector<int>& val_labels, const TrainConfig& tc,
                                           std::ostream* log_sink = nullptr) {
  tc.validate();
  if (z.rows != static_cast<int>(labels.size()) || val_z.rows != static_cast<int>(val_labels.size()))
    throw ContractError("train_fusion_head: rows and labels differ in length");
  if (z.rows == 0 && tc.epochs > 0) throw InputError("fusion training set is empty");
  for (const auto* ys : {&labels, &val_labels})
    for (int y : *ys)
      if (y < 0 || y >= config.num_classes) throw ContractError("label " + std::to_string(y) + " out of range");

  FusionTrainResult out{FusionHead::initialize(config, tc.seed), {}};
  std::set<std::string> names;
  for (const auto& [n, _] : out.head.params()) names.insert(n);
  nn::AdamW opt({tc.learning_rate, tc.weight_decay}, names);
  const int n = z.rows;

  auto accuracy = [&](const Matrix<double>& zz, const std::vector<int>& ys) -> std::array<double, 3> {
    if (zz.rows == 0) return {0, 0, 0};
    const auto lg = out.head.logits(zz);
    std::vector<std::vector<int>> ranked;
    const int k = std::min(5, lg.cols);
    for (int r = 0; r < lg.rows; ++r) {
      std::vector<int> ids;
      for (const auto& rc : rank_top_k(std::span<const double>(lg.row(r), static_cast<std::size_t>(lg.cols)), k))
        ids.push_back(rc.class_id);
      ranked.push_back(std::move(ids));
    }
    return {100 * topk_accuracy(ranked, ys, 1), 100 * topk_accuracy(ranked, ys, std::min(3, k)),
            100 * topk_accuracy(ranked, ys, k)};
  };

  for (int epoch = 1; epoch <= tc.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto order = epoch_permutation(n, SeedHasher(tc.seed).add("fusion").value(), epoch);
    double loss_sum = 0;
    for (int s = 0; s < n; s += tc.batch_size) {
      const int e = std::min(n, s + tc.batch_size);
      Matrix<double> batch(e - s, z.cols);
      std::vector<int> ys;
      for (int i = s; i < e; ++i) {
        const int src = order[static_cast<std::size_t>(i)];
        std::copy(z.row(src), z.row(src) + z.cols, batch.row(i - s));
        ys.push_back(labels[static_cast<std::size_t>(src)]);
      }
      nn::Tape<double> tape;
      std::map<std::string, nn::Tape<double>::Var> vars;
      auto loss = tape.softmax_cross_entropy(out.head.forward_on_tape(tape, batch, &vars), ys);
      const double lv = tape.value(loss)(0, 0);
      if (!std::isfinite(lv)) throw NumericError("non-finite fusion loss in epoch " + std::to_string(epoch));
      loss_sum += lv * (e - s);
      tape.backward(loss);
      NamedTensors grads;
      for (const auto& [name, v] : vars) grads[name] = tape.grad(v);
      opt.step(out.head.mutable_params(), grads);
    }
    EpochLog entry;
    entry.epoch = epoch;
    entry.train_loss = loss_sum / n;
    const auto acc = accuracy(val_z, val_labels);
    entry.val_top1 = acc[0];
    entry.val_top3 = acc[1];
    entry.val_top5 = acc[2];
    entry.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    if (log_sink) *log_sink << entry.to_json().dump() << '\n';
    out.log.push_back(entry);
  }
  nn::round_to_f32(out.head.mutable_params());
  return out;
}

/// One labeled image for fusion: its caption graph and feature-file id.
struct FusionSample {
  std::string image_id;
  const Graph* graph = nullptr;  // null: empty caption
  int label = -1;
};

/// Encoder descriptors, one row per sample. Samples without a graph (empty
/// caption) get a zero descriptor.
inline Matrix<double> high_descriptors(const GinEncoder& high, std::span<const FusionSample> samples, int chunk = 256) {
  const int dh = high.config().descriptor_dim;
  Matrix<double> out(static_cast<int>(samples.size()), dh);
  for (std::size_t s = 0; s < samples.size(); s += static_cast<std::size_t>(chunk)) {
    const std::size_t e = std::min(samples.size(), s + static_cast<std::size_t>(chunk));
    std::vector<const Graph*> gs;
    std::vector<int> rows;
    for (std::size_t i = s; i < e; ++i)
      if (samples[i].graph) {
        rows.push_back(static_cast<int>(i));
        gs.push_back(samples[i].graph);
      }
    if (gs.empty()) continue;
    const auto desc = high.forward_batch(gs).first;
    for (std::size_t k = 0; k < rows.size(); ++k)
      std::copy(desc.row(static_cast<int>(k)), desc.row(static_cast<int>(k)) + dh, out.row(rows[k]));
  }
  return out;
}

/// Every id must have a feature vector; all missing ids are reported together.
inline void require_features(std::span<const FusionSample> samples, const FeatureMap& features) {
  std::vector<std::string> missing;
  for (const auto& s : samples)
    if (!features.find(s.image_id)) missing.push_back(s.image_id);
  if (missing.empty()) return;
  std::string list;
  for (std::size_t i = 0; i < missing.size() && i < 20; ++i) list += (i ? ", " : "") + missing[i];
  if (missing.size() > 20) list += ", ...";
  throw InputError(std::to_string(missing.size()) + " image(s) have no low-level feature vector: " + list);
}

/// Concatenates precomputed descriptors with each sample's low-level vector.
inline Matrix<double> fuse_rows(const Matrix<double>& descriptors, std::span<const FusionSample> samples,
                                const FeatureMap& features) {
  if (descriptors.rows != static_cast<int>(samples.size()))
    throw ContractError("fuse_rows: descriptor rows and samples differ in length");
  require_features(samples, features);
  const int dh = descriptors.cols;
  Matrix<double> z(static_cast<int>(samples.size()), dh + static_cast<int>(kLowLevelDim));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto row = fuse(std::span<const double>(descriptors.row(static_cast<int>(i)), static_cast<std::size_t>(dh)),
                          *features.find(samples[i].image_id), static_cast<std::size_t>(dh));
    std::copy(row.begin(), row.end(), z.row(static_cast<int>(i)));
  }
  return z;
}

inline Matrix<double> fused_inputs(const GinEncoder& high, std::span<const FusionSample> samples,
                                   const FeatureMap& features) {
  require_features(samples, features);
  return fuse_rows(high_descriptors(high, samples), samples, features);
}

struct FusionResult {
  FusionModel model;
  std::vector<EpochLog> log;
};

/// Second training stage: the encoder is frozen and only the head learns.
inline FusionResult train_fusion(const GinEncoder& frozen_high, std::span<const FusionSample> train,
                                 std::span<const FusionSample> val, const FeatureMap& features, FusionConfig config,
                                 const TrainConfig& tc, std::ostream* log_sink = nullptr) {
  config.high_dim = frozen_high.config().descriptor_dim;
  config.num_classes = frozen_high.config().num_classes;
  const auto z = fused_inputs(frozen_high, train, features);
  const auto vz = fused_inputs(frozen_high, val, features);
  std::vector<int> ys, vys;
  for (const auto& s : train) ys.push_back(s.label);
  for (const auto& s : val) vys.push_back(s.label);
  auto r = train_fusion_head(config, z, ys, vz, vys, tc, log_sink);
  return {{frozen_high, std::move(r.head)}, std::move(r.log)};
}

/// Head logits for each sample (rows follow `samples`).
inline Matrix<double> fusion_logits(const FusionModel& m, std::span<const FusionSample> samples, const FeatureMap& features) {
  return m.head.logits(fused_inputs(m.high, samples, features));
}

/// Top-k classes per sample, descending logit, ties by ascending class id.
inline std::vector<std::vector<RankedClass>> predict_topk(const FusionModel& m, std::span<const FusionSample> samples,
                                                          const FeatureMap& features, int k) {
  if (k < 1 || k > m.head.config().num_classes)
    throw ContractError("k must be in [1, " + std::to_string(m.head.config().num_classes) + "], got " + std::to_string(k));
  const auto lg = fusion_logits(m, samples, features);
  std::vector<std::vector<RankedClass>> out;
  for (int r = 0; r < lg.rows; ++r)
    out.push_back(rank_top_k(std::span<const double>(lg.row(r), static_cast<std::size_t>(lg.cols)), k));
  return out;
}

}  // namespace scene_robust
