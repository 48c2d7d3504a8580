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
#include <map>
#include <set>
#include <string>

#include "scene_robust/nn/tensor.hpp"

namespace scene_robust::nn {

using NamedTensors = std::map<std::string, Matrix<double>>;

/// Adam with decoupled weight decay. Only tensors named in `trainable` move.
class AdamW {
 public:
  struct Options {
    double lr = 1e-4;
    double weight_decay = 6e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
  };

  AdamW(Options opt, std::set<std::string> trainable) : opt_(opt), trainable_(std::move(trainable)) {}

  void step(NamedTensors& params, const NamedTensors& grads) {
    ++t_;
    const double bc1 = 1 - std::pow(opt_.beta1, t_), bc2 = 1 - std::pow(opt_.beta2, t_);
    for (const auto& name : trainable_) {
      auto& p = params.at(name);
      const auto& g = grads.at(name);
      auto& m = m_.try_emplace(name, p.rows, p.cols).first->second;
      auto& v = v_.try_emplace(name, p.rows, p.cols).first->second;
      for (std::size_t i = 0; i < p.size(); ++i) {
        m.v[i] = opt_.beta1 * m.v[i] + (1 - opt_.beta1) * g.v[i];
        v.v[i] = opt_.beta2 * v.v[i] + (1 - opt_.beta2) * g.v[i] * g.v[i];
        const double update = (m.v[i] / bc1) / (std::sqrt(v.v[i] / bc2) + opt_.eps);
        p.v[i] -= opt_.lr * (update + opt_.weight_decay * p.v[i]);
      }
    }
  }

  long steps() const { return t_; }

 private:
  Options opt_;
  std::set<std::string> trainable_;
  NamedTensors m_, v_;
  long t_ = 0;
};

}  // namespace scene_robust::nn
