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

#include <string>

#include <json.hpp>

#include "scene_robust/core/binary_io.hpp"
#include "scene_robust/core/error.hpp"

namespace scene_robust {

struct GinModelConfig {
  int num_blocks = 5;
  int input_dim = 50;
  int hidden_dim = 64;
  int num_classes = 148;
  int descriptor_dim = 128;
  double epsilon = 0.0;
  bool learn_epsilon = false;
  double dropout_rate = 0.5;
  double bn_momentum = 0.9;
  double bn_eps = 1e-5;
  // Auxiliary classifier on the descriptor so the projection to descriptor_dim
  // receives a training signal.
  bool descriptor_head = true;

  void validate() const {
    if (num_blocks != 5) throw ConfigError("num_blocks must be 5");
    if (input_dim <= 0 || hidden_dim <= 0 || num_classes <= 1 || descriptor_dim <= 0)
      throw ConfigError("model dimensions must be positive");
    if (dropout_rate < 0 || dropout_rate >= 1) throw ConfigError("dropout_rate must be in [0, 1)");
  }

  nlohmann::json to_json() const {
    return {{"num_blocks", num_blocks},     {"input_dim", input_dim},
            {"hidden_dim", hidden_dim},     {"num_classes", num_classes},
            {"descriptor_dim", descriptor_dim}, {"epsilon", epsilon},
            {"learn_epsilon", learn_epsilon}, {"dropout_rate", dropout_rate},
            {"bn_momentum", bn_momentum},   {"bn_eps", bn_eps},
            {"descriptor_head", descriptor_head}};
  }

  static GinModelConfig from_json(const nlohmann::json& j) {
    try {
      GinModelConfig c;
      c.num_blocks = j.at("num_blocks");
      c.input_dim = j.at("input_dim");
      c.hidden_dim = j.at("hidden_dim");
      c.num_classes = j.at("num_classes");
      c.descriptor_dim = j.at("descriptor_dim");
      c.epsilon = j.at("epsilon");
      c.learn_epsilon = j.at("learn_epsilon");
      c.dropout_rate = j.at("dropout_rate");
      c.bn_momentum = j.at("bn_momentum");
      c.bn_eps = j.at("bn_eps");
      c.descriptor_head = j.at("descriptor_head");
      c.validate();
      return c;
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("bad model config: ") + e.what());
    }
  }

  std::string hash() const {
    const std::string s = to_json().dump();
    return content_hash(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
  }

  /// Width of hidden representation i (0 = input features).
  int layer_dim(int i) const { return i == 0 ? input_dim : hidden_dim; }
  int pooled_dim() const { return input_dim + num_blocks * hidden_dim; }
};

}  // namespace scene_robust
