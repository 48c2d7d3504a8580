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

#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "scene_robust/caption/graph.hpp"
#include "scene_robust/core/rng.hpp"
#include "scene_robust/gin/config.hpp"
#include "scene_robust/nn/checkpoint.hpp"
#include "scene_robust/nn/optimizer.hpp"
#include "scene_robust/nn/tape.hpp"

namespace scene_robust {

using nn::Matrix;
using nn::NamedTensors;

enum class Mode { train, eval };

/// Parameters of one GIN block: a two-layer perceptron followed by batch
/// normalisation. `bn_mean`/`bn_var` are running statistics.
struct GinBlockParams {
  Matrix<double> w1, b1, w2, b2, gamma, beta, bn_mean, bn_var;
  double epsilon = 0.0;
};

struct BlockOptions {
  bool use_batch_norm = true;
  Mode mode = Mode::eval;
  double bn_eps = 1e-5;
};

namespace gin_detail {

inline std::string block_name(int b, const char* field) { return "block" + std::to_string(b) + "/" + field; }
inline std::string readout_name(int i, const char* field) { return "readout" + std::to_string(i) + "/" + field; }

inline std::vector<double> row_vec(const Matrix<double>& m) { return m.v; }

/// Everything one forward pass registers on a tape.
struct ForwardVars {
  nn::Tape<double>::Var logits = -1;
  nn::Tape<double>::Var descriptor = -1;
  nn::Tape<double>::Var aux_logits = -1;
  std::vector<nn::Tape<double>::Var> hidden;  // h0..h5, node level
  std::vector<nn::Tape<double>::BatchStats> bn_stats;
};

/// One GIN block on a tape: ReLU(BN(MLP((1+eps) h_v + sum_{u->v} w_uv h_u))).
inline nn::Tape<double>::Var block_on_tape(nn::Tape<double>& tape, nn::Tape<double>::Var x, std::span<const Edge> edges,
                                           nn::Tape<double>::Var eps, nn::Tape<double>::Var w1, nn::Tape<double>::Var b1,
                                           nn::Tape<double>::Var w2, nn::Tape<double>::Var b2,
                                           nn::Tape<double>::Var gamma, nn::Tape<double>::Var beta,
                                           const GinBlockParams* running, const BlockOptions& opt,
                                           nn::Tape<double>::BatchStats* stats) {
  auto agg = tape.gin_aggregate(x, edges, eps);
  auto z = tape.add_bias(tape.matmul(tape.relu(tape.add_bias(tape.matmul(agg, w1), b1)), w2), b2);
  if (opt.use_batch_norm) {
    if (opt.mode == Mode::train) z = tape.batch_norm(z, gamma, beta, opt.bn_eps, stats);
    else z = tape.batch_norm_fixed(z, gamma, beta, running->bn_mean.v, running->bn_var.v, opt.bn_eps);
  }
  return tape.relu(z);
}

}  // namespace gin_detail

/// Inverted dropout mask: each entry is 1/(1-rate) with probability 1-rate,
/// else 0.
inline Matrix<double> dropout_mask(int rows, int cols, double rate, Philox& rng) {
  Matrix<double> m(rows, cols);
  const double keep = 1.0 - rate;
  for (double& x : m.v) x = rng.uniform() < keep ? 1.0 / keep : 0.0;
  return m;
}

/// Standalone block forward on a single node matrix.
inline Matrix<double> gin_block_forward(const Matrix<double>& node_features, std::span<const Edge> edges,
                                        const GinBlockParams& p, const BlockOptions& opt = {}) {
  if (node_features.cols != p.w1.rows)
    throw ContractError("gin_block_forward: features have " + std::to_string(node_features.cols) +
                        " columns, block expects " + std::to_string(p.w1.rows));
  for (const auto& e : edges)
    if (e.src < 0 || e.dst < 0 || e.src >= node_features.rows || e.dst >= node_features.rows)
      throw ContractError("gin_block_forward: edge index out of range");
  nn::Tape<double> t;
  auto x = t.constant(node_features);
  auto v = gin_detail::block_on_tape(t, x, edges, t.constant(Matrix<double>(1, 1, p.epsilon)), t.constant(p.w1),
                                     t.constant(p.b1), t.constant(p.w2), t.constant(p.b2), t.constant(p.gamma),
                                     t.constant(p.beta), &p, opt, nullptr);
  return t.value(v);
}

/// Output of the encoder for one graph.
struct EncoderOutput {
  std::vector<double> descriptor;            // descriptor_dim
  std::vector<double> logits;                // num_classes
  std::vector<Matrix<double>> hidden_stack;  // h0..h5, nodes x width
};

/// A batch of graphs stacked into one disjoint-union node matrix.
struct GraphBatch {
  Matrix<double> features;
  std::vector<Edge> edges;
  std::vector<int> offsets;  // graph g owns rows [offsets[g], offsets[g+1])

  static GraphBatch from(std::span<const Graph* const> graphs, int feature_dim) {
    GraphBatch b;
    int total = 0;
    b.offsets.push_back(0);
    for (const Graph* g : graphs) {
      g->validate();
      if (g->num_nodes == 0) throw ContractError("empty graph passed to the encoder");
      if (g->feature_dim != feature_dim)
        throw ContractError("graph feature_dim " + std::to_string(g->feature_dim) + " != model input_dim " +
                            std::to_string(feature_dim));
      total += g->num_nodes;
      b.offsets.push_back(total);
    }
    b.features = Matrix<double>(total, feature_dim);
    for (std::size_t k = 0; k < graphs.size(); ++k) {
      const Graph& g = *graphs[k];
      const int off = b.offsets[k];
      std::copy(g.features.begin(), g.features.end(), b.features.row(off));
      for (const auto& e : g.edges) b.edges.push_back({e.src + off, e.dst + off, e.weight});
    }
    return b;
  }
};

/// The caption-graph encoder: five GIN blocks, mean-pooled readouts of every
/// hidden representation summed into class logits, and a learned projection
/// of the pooled stack to the fusion descriptor.
class GinEncoder {
 public:
  GinEncoder() = default;
  GinEncoder(GinModelConfig config, NamedTensors params) : config_(std::move(config)), params_(std::move(params)) {
    config_.validate();
    check_names(params_);
  }

  /// Uniform fan-in initialisation, rounded to float precision.
  static GinEncoder initialize(const GinModelConfig& config, std::uint64_t seed) {
    config.validate();
    Philox rng(SeedHasher(seed).add("gin-init").value());
    NamedTensors p;
    auto uniform = [&](int rows, int cols, int fan_in) {
      Matrix<double> m(rows, cols);
      const double a = 1.0 / std::sqrt(static_cast<double>(fan_in));
      for (double& x : m.v) x = rng.uniform(-a, a);
      return m;
    };
    for (int b = 1; b <= config.num_blocks; ++b) {
      const int in = config.layer_dim(b - 1), h = config.hidden_dim;
      p[gin_detail::block_name(b, "w1")] = uniform(in, h, in);
      p[gin_detail::block_name(b, "b1")] = uniform(1, h, in);
      p[gin_detail::block_name(b, "w2")] = uniform(h, h, h);
      p[gin_detail::block_name(b, "b2")] = uniform(1, h, h);
      p[gin_detail::block_name(b, "bn_gamma")] = Matrix<double>(1, h, 1.0);
      p[gin_detail::block_name(b, "bn_beta")] = Matrix<double>(1, h, 0.0);
      p[gin_detail::block_name(b, "bn_mean")] = Matrix<double>(1, h, 0.0);
      p[gin_detail::block_name(b, "bn_var")] = Matrix<double>(1, h, 1.0);
      p[gin_detail::block_name(b, "eps")] = Matrix<double>(1, 1, config.epsilon);
    }
    for (int i = 0; i <= config.num_blocks; ++i) {
      const int d = config.layer_dim(i);
      p[gin_detail::readout_name(i, "w")] = uniform(d, config.num_classes, d);
      p[gin_detail::readout_name(i, "b")] = uniform(1, config.num_classes, d);
    }
    p["descriptor/w"] = uniform(config.pooled_dim(), config.descriptor_dim, config.pooled_dim());
    p["descriptor/b"] = uniform(1, config.descriptor_dim, config.pooled_dim());
    if (config.descriptor_head) {
      p["descriptor_head/w"] = uniform(config.descriptor_dim, config.num_classes, config.descriptor_dim);
      p["descriptor_head/b"] = uniform(1, config.num_classes, config.descriptor_dim);
    }
    nn::round_to_f32(p);
    return GinEncoder(config, std::move(p));
  }

  const GinModelConfig& config() const { return config_; }
  const NamedTensors& params() const { return params_; }
  NamedTensors& mutable_params() { return params_; }

  /// Names that receive gradient updates (running statistics never do).
  std::set<std::string> trainable_names() const {
    std::set<std::string> out;
    for (const auto& [name, _] : params_) {
      if (name.ends_with("/bn_mean") || name.ends_with("/bn_var")) continue;
      if (name.ends_with("/eps") && !config_.learn_epsilon) continue;
      out.insert(name);
    }
    return out;
  }

  GinBlockParams block(int b) const {
    auto g = [&](const char* f) { return params_.at(gin_detail::block_name(b, f)); };
    return {g("w1"), g("b1"), g("w2"), g("b2"), g("bn_gamma"), g("bn_beta"), g("bn_mean"), g("bn_var"),
            params_.at(gin_detail::block_name(b, "eps"))(0, 0)};
  }

  /// Registers the forward pass for a batch on `tape`. Parameters become tape
  /// params when `param_vars` is non-null (gradients wanted), constants
  /// otherwise. In train mode, batch statistics are used and the pooled
  /// representations are dropped out with a mask drawn from `dropout_key`.
  gin_detail::ForwardVars forward_on_tape(nn::Tape<double>& tape, const GraphBatch& batch, Mode mode,
                                          std::uint64_t dropout_key,
                                          std::map<std::string, nn::Tape<double>::Var>* param_vars) const {
    const auto trainable = trainable_names();
    std::map<std::string, nn::Tape<double>::Var> vars;
    for (const auto& [name, m] : params_)
      vars[name] = (param_vars && trainable.contains(name)) ? tape.param(m) : tape.constant(m);
    if (param_vars) *param_vars = vars;

    gin_detail::ForwardVars out;
    const BlockOptions opt{true, mode, config_.bn_eps};
    auto h = tape.constant(batch.features);
    out.hidden.push_back(h);
    for (int b = 1; b <= config_.num_blocks; ++b) {
      auto v = [&](const char* f) { return vars.at(gin_detail::block_name(b, f)); };
      const GinBlockParams running = mode == Mode::eval ? block(b) : GinBlockParams{};
      nn::Tape<double>::BatchStats stats;
      h = gin_detail::block_on_tape(tape, h, batch.edges, v("eps"), v("w1"), v("b1"), v("w2"), v("b2"),
                                    v("bn_gamma"), v("bn_beta"), &running, opt, &stats);
      out.hidden.push_back(h);
      out.bn_stats.push_back(std::move(stats));
    }

    const int graphs = static_cast<int>(batch.offsets.size()) - 1;
    Philox rng(dropout_key);
    std::vector<nn::Tape<double>::Var> pooled;
    nn::Tape<double>::Var logits = -1;
    for (int i = 0; i <= config_.num_blocks; ++i) {
      auto p = tape.segment_mean(out.hidden[static_cast<std::size_t>(i)], batch.offsets);
      if (mode == Mode::train && config_.dropout_rate > 0)
        p = tape.mask(p, dropout_mask(graphs, config_.layer_dim(i), config_.dropout_rate, rng));
      pooled.push_back(p);
      auto r = tape.add_bias(tape.matmul(p, vars.at(gin_detail::readout_name(i, "w"))),
                             vars.at(gin_detail::readout_name(i, "b")));
      logits = logits < 0 ? r : tape.add(logits, r);
    }
    out.logits = logits;
    out.descriptor = tape.add_bias(tape.matmul(tape.concat_cols(pooled), vars.at("descriptor/w")), vars.at("descriptor/b"));
    if (config_.descriptor_head)
      out.aux_logits = tape.add_bias(tape.matmul(out.descriptor, vars.at("descriptor_head/w")), vars.at("descriptor_head/b"));
    return out;
  }

  /// Eval-mode forward for one graph.
  EncoderOutput forward(const Graph& graph) const {
    const Graph* gs[] = {&graph};
    const auto batch = GraphBatch::from(gs, config_.input_dim);
    nn::Tape<double> tape;
    const auto f = forward_on_tape(tape, batch, Mode::eval, 0, nullptr);
    EncoderOutput out;
    out.descriptor = tape.value(f.descriptor).v;
    out.logits = tape.value(f.logits).v;
    for (auto h : f.hidden) out.hidden_stack.push_back(tape.value(h));
    return out;
  }

  /// Eval-mode forward for many graphs at once (row g of each matrix).
  std::pair<Matrix<double>, Matrix<double>> forward_batch(std::span<const Graph* const> graphs) const {
    const auto batch = GraphBatch::from(graphs, config_.input_dim);
    nn::Tape<double> tape;
    const auto f = forward_on_tape(tape, batch, Mode::eval, 0, nullptr);
    return {tape.value(f.descriptor), tape.value(f.logits)};
  }

  nn::Checkpoint to_checkpoint(nlohmann::json training = nlohmann::json::object(), const std::string& prefix = "") const {
    nn::Checkpoint c;
    c.metadata["kind"] = "gin_encoder";
    c.metadata["config"] = config_.to_json();
    c.metadata["config_hash"] = config_.hash();
    c.metadata["training"] = std::move(training);
    for (const auto& [name, m] : params_) c.tensors[prefix + name] = nn::to_f32(m);
    return c;
  }

  /// Loads tensors named `prefix` + parameter name; any other tensor under the
  /// prefix, or a missing one, is a FormatError.
  static GinEncoder from_checkpoint(const nn::Checkpoint& c, const std::string& prefix = "") {
    const auto& cfg_json = c.metadata.contains("high_config") ? c.metadata.at("high_config") : c.metadata.at("config");
    const auto config = GinModelConfig::from_json(cfg_json);
    NamedTensors p;
    for (const auto& [name, t] : c.tensors) {
      if (!name.starts_with(prefix)) continue;
      p[name.substr(prefix.size())] = nn::from_f32(t, name);
    }
    const auto expected = initialize_shapes(config);
    for (const auto& [name, m] : p) {
      auto it = expected.find(name);
      if (it == expected.end()) throw FormatError("checkpoint has unknown tensor '" + prefix + name + "'");
      if (!m.same_shape(it->second))
        throw FormatError("checkpoint tensor '" + prefix + name + "' has shape " + m.shape_str() + ", expected " +
                          it->second.shape_str());
    }
    for (const auto& [name, _] : expected)
      if (!p.contains(name)) throw FormatError("checkpoint lacks tensor '" + prefix + name + "'");
    return GinEncoder(config, std::move(p));
  }

 private:
  static NamedTensors initialize_shapes(const GinModelConfig& config) { return initialize(config, 0).params_; }

  void check_names(const NamedTensors& p) const {
    for (const auto& [name, m] : p)
      if (!nn::all_finite(m)) throw NumericError("parameter " + name + " is not finite");
  }

  GinModelConfig config_;
  NamedTensors params_;
};

/// Eval-mode encoder forward (dropout off, running statistics).
inline EncoderOutput encoder_forward(const KnowledgeGraph& graph, const GinEncoder& model) {
  return model.forward(graph.graph);
}

struct LossAndGrad {
  double loss = 0;
  NamedTensors grads;
  std::vector<nn::Tape<double>::BatchStats> bn_stats;
};

/// Mean cross-entropy of the summed readout logits (plus the descriptor
/// head's cross-entropy when enabled) and its gradient with respect to every
/// trainable tensor, through batch-statistics normalisation.
inline LossAndGrad loss_and_grad(const GinEncoder& model, std::span<const Graph* const> graphs,
                                 const std::vector<int>& labels, std::uint64_t dropout_key, Mode mode = Mode::train) {
  if (graphs.size() != labels.size()) throw ContractError("loss_and_grad: graphs and labels differ in length");
  for (int y : labels)
    if (y < 0 || y >= model.config().num_classes) throw ContractError("label " + std::to_string(y) + " out of range");
  const auto batch = GraphBatch::from(graphs, model.config().input_dim);
  nn::Tape<double> tape;
  std::map<std::string, nn::Tape<double>::Var> vars;
  auto f = model.forward_on_tape(tape, batch, mode, dropout_key, &vars);
  auto loss = tape.softmax_cross_entropy(f.logits, labels);
  if (model.config().descriptor_head) loss = tape.add(loss, tape.softmax_cross_entropy(f.aux_logits, labels));
  LossAndGrad out;
  out.loss = tape.value(loss)(0, 0);
  if (!std::isfinite(out.loss)) throw NumericError("non-finite training loss");
  tape.backward(loss);
  for (const auto& name : model.trainable_names()) out.grads[name] = tape.grad(vars.at(name));
  out.bn_stats = std::move(f.bn_stats);
  return out;
}

}  // namespace scene_robust
