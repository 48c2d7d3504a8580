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
#include <functional>
#include <span>
#include <vector>

#include "scene_robust/caption/graph.hpp"
#include "scene_robust/nn/tensor.hpp"

// Minimal reverse-mode differentiation over matrices: exactly the operations
// the GIN encoder and fusion head need. Each op records its value and a
// closure that pushes the output gradient to its inputs.

namespace scene_robust::nn {

template <typename T>
class Tape {
 public:
  using Var = int;

  Var constant(Matrix<T> value) { return push(std::move(value), false); }
  Var param(Matrix<T> value) { return push(std::move(value), true); }

  const Matrix<T>& value(Var v) const { return nodes_[idx(v)].value; }
  const Matrix<T>& grad(Var v) const { return nodes_[idx(v)].grad; }
  std::size_t size() const { return nodes_.size(); }

  Var matmul(Var a, Var b) {
    Matrix<T> out(value(a).rows, value(b).cols);
    gemm_acc(value(a), value(b), out);
    return op(std::move(out), {a, b}, [a, b](Tape& t, const Matrix<T>& g) {
      if (t.needs(a)) gemm_nt_acc(g, t.value(b), t.grad_mut(a));
      if (t.needs(b)) gemm_tn_acc(t.value(a), g, t.grad_mut(b));
    });
  }

  /// Adds a 1 x m row to every row of an n x m matrix.
  Var add_bias(Var x, Var b) {
    const auto& xv = value(x);
    const auto& bv = value(b);
    check_shape(bv.rows == 1 && bv.cols == xv.cols, "add_bias", xv.shape_str() + " + " + bv.shape_str());
    Matrix<T> out = xv;
    for (int i = 0; i < out.rows; ++i)
      for (int j = 0; j < out.cols; ++j) out(i, j) += bv(0, j);
    return op(std::move(out), {x, b}, [x, b](Tape& t, const Matrix<T>& g) {
      if (t.needs(x)) accumulate(t.grad_mut(x), g);
      if (t.needs(b)) {
        auto& gb = t.grad_mut(b);
        for (int i = 0; i < g.rows; ++i)
          for (int j = 0; j < g.cols; ++j) gb(0, j) += g(i, j);
      }
    });
  }

  Var add(Var a, Var b) {
    check_shape(value(a).same_shape(value(b)), "add", value(a).shape_str() + " + " + value(b).shape_str());
    Matrix<T> out = value(a);
    for (std::size_t i = 0; i < out.size(); ++i) out.v[i] += value(b).v[i];
    return op(std::move(out), {a, b}, [a, b](Tape& t, const Matrix<T>& g) {
      if (t.needs(a)) accumulate(t.grad_mut(a), g);
      if (t.needs(b)) accumulate(t.grad_mut(b), g);
    });
  }

  Var relu(Var x) {
    Matrix<T> out = value(x);
    for (auto& e : out.v) e = e > T(0) ? e : T(0);
    return op(std::move(out), {x}, [x](Tape& t, const Matrix<T>& g) {
      if (!t.needs(x)) return;
      auto& gx = t.grad_mut(x);
      const auto& xv = t.value(x);
      for (std::size_t i = 0; i < g.size(); ++i)
        if (xv.v[i] > T(0)) gx.v[i] += g.v[i];
    });
  }

  /// Element-wise product with a constant mask (inverted dropout).
  Var mask(Var x, const Matrix<T>& m) {
    check_shape(value(x).same_shape(m), "mask", value(x).shape_str() + " . " + m.shape_str());
    Matrix<T> out = value(x);
    for (std::size_t i = 0; i < out.size(); ++i) out.v[i] *= m.v[i];
    return op(std::move(out), {x}, [x, m](Tape& t, const Matrix<T>& g) {
      if (!t.needs(x)) return;
      auto& gx = t.grad_mut(x);
      for (std::size_t i = 0; i < g.size(); ++i) gx.v[i] += g.v[i] * m.v[i];
    });
  }

  /// GIN neighbourhood aggregation: out_v = (1 + eps) x_v + sum_{u->v} w_uv x_u.
  /// `eps` is a 1 x 1 variable (constant or trainable).
  Var gin_aggregate(Var x, std::span<const Edge> edges, Var eps) {
    const auto& xv = value(x);
    const T e = value(eps)(0, 0);
    Matrix<T> out(xv.rows, xv.cols);
    for (std::size_t i = 0; i < out.size(); ++i) out.v[i] = (T(1) + e) * xv.v[i];
    for (const auto& ed : edges) {
      check_shape(ed.src < xv.rows && ed.dst < xv.rows && ed.src >= 0 && ed.dst >= 0, "gin_aggregate", "edge index");
      const T w = static_cast<T>(ed.weight);
      const T* s = xv.row(ed.src);
      T* d = out.row(ed.dst);
      for (int j = 0; j < xv.cols; ++j) d[j] += w * s[j];
    }
    std::vector<Edge> owned(edges.begin(), edges.end());
    return op(std::move(out), {x, eps}, [x, eps, owned = std::move(owned)](Tape& t, const Matrix<T>& g) {
      const auto& xv = t.value(x);
      if (t.needs(x)) {
        auto& gx = t.grad_mut(x);
        const T e = t.value(eps)(0, 0);
        for (std::size_t i = 0; i < g.size(); ++i) gx.v[i] += (T(1) + e) * g.v[i];
        for (const auto& ed : owned) {
          const T w = static_cast<T>(ed.weight);
          const T* gd = g.row(ed.dst);
          T* gs = gx.row(ed.src);
          for (int j = 0; j < g.cols; ++j) gs[j] += w * gd[j];
        }
      }
      if (t.needs(eps)) {
        T s = 0;
        for (std::size_t i = 0; i < g.size(); ++i) s += g.v[i] * xv.v[i];
        t.grad_mut(eps)(0, 0) += s;
      }
    });
  }

  struct BatchStats {
    std::vector<T> mean;
    std::vector<T> var;  // biased
  };

  /// Batch normalisation over rows with batch statistics; returns the
  /// statistics through `stats` for running-average updates.
  Var batch_norm(Var x, Var gamma, Var beta, T epsilon, BatchStats* stats = nullptr) {
    const auto& xv = value(x);
    const int n = xv.rows, d = xv.cols;
    check_shape(value(gamma).cols == d && value(beta).cols == d, "batch_norm", xv.shape_str());
    std::vector<T> mean(static_cast<std::size_t>(d), 0), var(static_cast<std::size_t>(d), 0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < d; ++j) mean[static_cast<std::size_t>(j)] += xv(i, j);
    for (auto& m : mean) m /= static_cast<T>(n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < d; ++j) {
        const T c = xv(i, j) - mean[static_cast<std::size_t>(j)];
        var[static_cast<std::size_t>(j)] += c * c;
      }
    for (auto& s : var) s /= static_cast<T>(n);
    std::vector<T> inv_std(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) inv_std[static_cast<std::size_t>(j)] = T(1) / std::sqrt(var[static_cast<std::size_t>(j)] + epsilon);
    Matrix<T> xhat(n, d), out(n, d);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < d; ++j) {
        xhat(i, j) = (xv(i, j) - mean[static_cast<std::size_t>(j)]) * inv_std[static_cast<std::size_t>(j)];
        out(i, j) = xhat(i, j) * value(gamma)(0, j) + value(beta)(0, j);
      }
    if (stats) *stats = {mean, var};
    return op(std::move(out), {x, gamma, beta},
              [x, gamma, beta, xhat = std::move(xhat), inv_std = std::move(inv_std)](Tape& t, const Matrix<T>& g) {
                const int n = g.rows, d = g.cols;
                std::vector<T> sum_g(static_cast<std::size_t>(d), 0), sum_gx(static_cast<std::size_t>(d), 0);
                for (int i = 0; i < n; ++i)
                  for (int j = 0; j < d; ++j) {
                    sum_g[static_cast<std::size_t>(j)] += g(i, j);
                    sum_gx[static_cast<std::size_t>(j)] += g(i, j) * xhat(i, j);
                  }
                if (t.needs(gamma))
                  for (int j = 0; j < d; ++j) t.grad_mut(gamma)(0, j) += sum_gx[static_cast<std::size_t>(j)];
                if (t.needs(beta))
                  for (int j = 0; j < d; ++j) t.grad_mut(beta)(0, j) += sum_g[static_cast<std::size_t>(j)];
                if (t.needs(x)) {
                  auto& gx = t.grad_mut(x);
                  const auto& gm = t.value(gamma);
                  for (int i = 0; i < n; ++i)
                    for (int j = 0; j < d; ++j) {
                      const auto sj = static_cast<std::size_t>(j);
                      gx(i, j) += gm(0, j) * inv_std[sj] / static_cast<T>(n) *
                                  (static_cast<T>(n) * g(i, j) - sum_g[sj] - xhat(i, j) * sum_gx[sj]);
                    }
                }
              });
  }

  /// Normalisation with fixed statistics (inference-mode batch norm).
  Var batch_norm_fixed(Var x, Var gamma, Var beta, const std::vector<T>& mean, const std::vector<T>& var, T epsilon) {
    const auto& xv = value(x);
    const int d = xv.cols;
    std::vector<T> scale(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) scale[static_cast<std::size_t>(j)] = value(gamma)(0, j) / std::sqrt(var[static_cast<std::size_t>(j)] + epsilon);
    Matrix<T> out(xv.rows, d);
    for (int i = 0; i < xv.rows; ++i)
      for (int j = 0; j < d; ++j)
        out(i, j) = (xv(i, j) - mean[static_cast<std::size_t>(j)]) * scale[static_cast<std::size_t>(j)] + value(beta)(0, j);
    return op(std::move(out), {x, gamma, beta}, [x, gamma, beta, mean, var, epsilon, scale](Tape& t, const Matrix<T>& g) {
      const auto& xv = t.value(x);
      for (int i = 0; i < g.rows; ++i)
        for (int j = 0; j < g.cols; ++j) {
          const auto sj = static_cast<std::size_t>(j);
          if (t.needs(x)) t.grad_mut(x)(i, j) += g(i, j) * scale[sj];
          if (t.needs(gamma)) t.grad_mut(gamma)(0, j) += g(i, j) * (xv(i, j) - mean[sj]) / std::sqrt(var[sj] + epsilon);
          if (t.needs(beta)) t.grad_mut(beta)(0, j) += g(i, j);
        }
    });
  }

  /// Mean of each contiguous row segment [offsets[k], offsets[k+1]).
  Var segment_mean(Var x, const std::vector<int>& offsets) {
    const auto& xv = value(x);
    const int segs = static_cast<int>(offsets.size()) - 1;
    check_shape(segs >= 1 && offsets.back() == xv.rows, "segment_mean", xv.shape_str());
    Matrix<T> out(segs, xv.cols);
    for (int s = 0; s < segs; ++s) {
      const int a = offsets[static_cast<std::size_t>(s)], b = offsets[static_cast<std::size_t>(s) + 1];
      check_shape(b > a, "segment_mean", "empty segment");
      for (int i = a; i < b; ++i)
        for (int j = 0; j < xv.cols; ++j) out(s, j) += xv(i, j);
      for (int j = 0; j < xv.cols; ++j) out(s, j) /= static_cast<T>(b - a);
    }
    return op(std::move(out), {x}, [x, offsets](Tape& t, const Matrix<T>& g) {
      if (!t.needs(x)) return;
      auto& gx = t.grad_mut(x);
      for (int s = 0; s + 1 < static_cast<int>(offsets.size()); ++s) {
        const int a = offsets[static_cast<std::size_t>(s)], b = offsets[static_cast<std::size_t>(s) + 1];
        for (int i = a; i < b; ++i)
          for (int j = 0; j < g.cols; ++j) gx(i, j) += g(s, j) / static_cast<T>(b - a);
      }
    });
  }

  Var concat_cols(const std::vector<Var>& parts) {
    const int rows = value(parts.front()).rows;
    int cols = 0;
    for (Var p : parts) {
      check_shape(value(p).rows == rows, "concat_cols", value(p).shape_str());
      cols += value(p).cols;
    }
    Matrix<T> out(rows, cols);
    int off = 0;
    for (Var p : parts) {
      const auto& pv = value(p);
      for (int i = 0; i < rows; ++i)
        for (int j = 0; j < pv.cols; ++j) out(i, off + j) = pv(i, j);
      off += pv.cols;
    }
    return op(std::move(out), parts, [parts](Tape& t, const Matrix<T>& g) {
      int off = 0;
      for (Var p : parts) {
        const int c = t.value(p).cols;
        if (t.needs(p)) {
          auto& gp = t.grad_mut(p);
          for (int i = 0; i < g.rows; ++i)
            for (int j = 0; j < c; ++j) gp(i, j) += g(i, off + j);
        }
        off += c;
      }
    });
  }

  /// Mean softmax cross-entropy of the rows of `logits` against `labels`.
  Var softmax_cross_entropy(Var logits, const std::vector<int>& labels) {
    const auto& z = value(logits);
    check_shape(static_cast<int>(labels.size()) == z.rows, "softmax_cross_entropy", z.shape_str());
    Matrix<T> probs(z.rows, z.cols);
    T loss = 0;
    for (int i = 0; i < z.rows; ++i) {
      const int y = labels[static_cast<std::size_t>(i)];
      require(y >= 0 && y < z.cols, "label out of range");
      T mx = z(i, 0);
      for (int j = 1; j < z.cols; ++j) mx = std::max(mx, z(i, j));
      T sum = 0;
      for (int j = 0; j < z.cols; ++j) sum += probs(i, j) = std::exp(z(i, j) - mx);
      for (int j = 0; j < z.cols; ++j) probs(i, j) /= sum;
      loss += std::log(sum) + mx - z(i, y);
    }
    loss /= static_cast<T>(z.rows);
    return op(Matrix<T>(1, 1, loss), {logits}, [logits, labels, probs = std::move(probs)](Tape& t, const Matrix<T>& g) {
      if (!t.needs(logits)) return;
      auto& gz = t.grad_mut(logits);
      const T s = g(0, 0) / static_cast<T>(probs.rows);
      for (int i = 0; i < probs.rows; ++i)
        for (int j = 0; j < probs.cols; ++j)
          gz(i, j) += s * (probs(i, j) - (j == labels[static_cast<std::size_t>(i)] ? T(1) : T(0)));
    });
  }

  /// out = a + w * b for a constant scalar w.
  Var axpy(Var a, T w, Var b) {
    check_shape(value(a).same_shape(value(b)), "axpy", value(a).shape_str());
    Matrix<T> out = value(a);
    for (std::size_t i = 0; i < out.size(); ++i) out.v[i] += w * value(b).v[i];
    return op(std::move(out), {a, b}, [a, b, w](Tape& t, const Matrix<T>& g) {
      if (t.needs(a)) accumulate(t.grad_mut(a), g);
      if (t.needs(b)) {
        auto& gb = t.grad_mut(b);
        for (std::size_t i = 0; i < g.size(); ++i) gb.v[i] += w * g.v[i];
      }
    });
  }

  /// Reverse sweep from a 1 x 1 output.
  void backward(Var out) {
    require(value(out).rows == 1 && value(out).cols == 1, "backward needs a scalar output");
    for (auto& n : nodes_)
      if (n.needs_grad) n.grad = Matrix<T>(n.value.rows, n.value.cols);
    nodes_[idx(out)].grad(0, 0) = T(1);
    for (int i = out; i >= 0; --i) {
      auto& n = nodes_[idx(i)];
      if (n.needs_grad && n.backward) n.backward(*this, n.grad);
    }
  }

 private:
  using Backward = std::function<void(Tape&, const Matrix<T>&)>;

  struct Node {
    Matrix<T> value;
    Matrix<T> grad;
    Backward backward;
    bool needs_grad = false;
  };

  static std::size_t idx(Var v) { return static_cast<std::size_t>(v); }
  bool needs(Var v) const { return nodes_[idx(v)].needs_grad; }
  Matrix<T>& grad_mut(Var v) { return nodes_[idx(v)].grad; }

  static void accumulate(Matrix<T>& dst, const Matrix<T>& g) {
    for (std::size_t i = 0; i < g.size(); ++i) dst.v[i] += g.v[i];
  }

  Var push(Matrix<T> value, bool needs_grad) {
    nodes_.push_back({std::move(value), {}, {}, needs_grad});
    return static_cast<Var>(nodes_.size() - 1);
  }

  Var op(Matrix<T> value, std::initializer_list<Var> inputs, Backward bw) {
    return op(std::move(value), std::vector<Var>(inputs), std::move(bw));
  }

  Var op(Matrix<T> value, const std::vector<Var>& inputs, Backward bw) {
    bool any = false;
    for (Var v : inputs) any |= needs(v);
    const Var out = push(std::move(value), any);
    if (any) nodes_.back().backward = std::move(bw);
    return out;
  }

  std::vector<Node> nodes_;
};

}  // namespace scene_robust::nn
