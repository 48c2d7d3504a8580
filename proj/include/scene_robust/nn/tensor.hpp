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
#include <span>
#include <string>
#include <vector>

#include "scene_robust/core/error.hpp"

namespace scene_robust::nn {

/// Dense row-major matrix. Vectors are 1 x n rows.
template <typename T>
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<T> v;

  Matrix() = default;
  Matrix(int r, int c, T fill = T(0)) : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, fill) {}
  Matrix(int r, int c, std::vector<T> data) : rows(r), cols(c), v(std::move(data)) {
    require(v.size() == static_cast<std::size_t>(r) * c, "matrix data does not match shape");
  }

  T& operator()(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
  T operator()(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }
  T* row(int r) { return v.data() + static_cast<std::size_t>(r) * cols; }
  const T* row(int r) const { return v.data() + static_cast<std::size_t>(r) * cols; }
  std::size_t size() const { return v.size(); }
  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }

  std::string shape_str() const { return std::to_string(rows) + "x" + std::to_string(cols); }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

inline void check_shape(bool ok, const char* op, const std::string& detail) {
  if (!ok) throw ContractError(std::string(op) + ": shape mismatch " + detail);
}

/// C += A * B
template <typename T>
void gemm_acc(const Matrix<T>& a, const Matrix<T>& b, Matrix<T>& c) {
  check_shape(a.cols == b.rows && c.rows == a.rows && c.cols == b.cols, "matmul", a.shape_str() + " * " + b.shape_str());
  for (int i = 0; i < a.rows; ++i) {
    T* ci = c.row(i);
    const T* ai = a.row(i);
    for (int k = 0; k < a.cols; ++k) {
      const T aik = ai[k];
      if (aik == T(0)) continue;
      const T* bk = b.row(k);
      for (int j = 0; j < b.cols; ++j) ci[j] += aik * bk[j];
    }
  }
}

/// C += A * B^T
template <typename T>
void gemm_nt_acc(const Matrix<T>& a, const Matrix<T>& b, Matrix<T>& c) {
  check_shape(a.cols == b.cols && c.rows == a.rows && c.cols == b.rows, "matmul_nt", a.shape_str() + " * " + b.shape_str() + "^T");
  for (int i = 0; i < a.rows; ++i) {
    const T* ai = a.row(i);
    T* ci = c.row(i);
    for (int j = 0; j < b.rows; ++j) {
      const T* bj = b.row(j);
      T s = 0;
      for (int k = 0; k < a.cols; ++k) s += ai[k] * bj[k];
      ci[j] += s;
    }
  }
}

/// C += A^T * B
template <typename T>
void gemm_tn_acc(const Matrix<T>& a, const Matrix<T>& b, Matrix<T>& c) {
  check_shape(a.rows == b.rows && c.rows == a.cols && c.cols == b.cols, "matmul_tn", a.shape_str() + "^T * " + b.shape_str());
  for (int k = 0; k < a.rows; ++k) {
    const T* ak = a.row(k);
    const T* bk = b.row(k);
    for (int i = 0; i < a.cols; ++i) {
      const T aki = ak[i];
      if (aki == T(0)) continue;
      T* ci = c.row(i);
      for (int j = 0; j < b.cols; ++j) ci[j] += aki * bk[j];
    }
  }
}

template <typename T>
bool all_finite(const Matrix<T>& m) {
  return std::all_of(m.v.begin(), m.v.end(), [](T x) { return std::isfinite(x); });
}

}  // namespace scene_robust::nn
