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
#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "scene_robust/fusion/features.hpp"
#include "scene_robust/image/image_buffer.hpp"

namespace scene_robust {

/// Source tag written into feature files produced by `handcrafted_features`.
inline constexpr const char* kHandcraftedSource = "handcrafted-v1";

namespace handcrafted_detail {

struct Gray {
  int w = 0, h = 0;
  std::vector<double> v;
  double at(int x, int y) const { return v[static_cast<std::size_t>(y) * w + x]; }
};

inline Gray to_gray(const ImageBuffer& img) {
  Gray g{img.width(), img.height(), {}};
  g.v.resize(static_cast<std::size_t>(g.w) * g.h);
  for (int y = 0; y < g.h; ++y)
    for (int x = 0; x < g.w; ++x)
      g.v[static_cast<std::size_t>(y) * g.w + x] =
          (0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) + 0.114 * img.at(x, y, 2)) / 255.0;
  return g;
}

inline Gray half(const Gray& g) {
  Gray o{g.w / 2, g.h / 2, {}};
  o.v.resize(static_cast<std::size_t>(o.w) * o.h);
  for (int y = 0; y < o.h; ++y)
    for (int x = 0; x < o.w; ++x)
      o.v[static_cast<std::size_t>(y) * o.w + x] =
          0.25 * (g.at(2 * x, 2 * y) + g.at(2 * x + 1, 2 * y) + g.at(2 * x, 2 * y + 1) + g.at(2 * x + 1, 2 * y + 1));
  return o;
}

/// Calls f(magnitude, angle in [0, pi)) for every interior pixel.
template <typename F>
void for_each_gradient(const Gray& g, F&& f) {
  for (int y = 1; y + 1 < g.h; ++y)
    for (int x = 1; x + 1 < g.w; ++x) {
      const double gx = 0.5 * (g.at(x + 1, y) - g.at(x - 1, y));
      const double gy = 0.5 * (g.at(x, y + 1) - g.at(x, y - 1));
      double a = std::atan2(gy, gx);
      if (a < 0) a += std::numbers::pi;
      if (a >= std::numbers::pi) a -= std::numbers::pi;
      f(std::hypot(gx, gy), a);
    }
}

/// Histogram blocks are scaled so a uniform histogram has entries of 1.
inline void push_normalized(std::vector<float>& out, const std::vector<double>& hist) {
  double total = 0;
  for (double c : hist) total += c;
  const double scale = total > 0 ? static_cast<double>(hist.size()) / total : 0.0;
  for (double c : hist) out.push_back(static_cast<float>(c * scale));
}

}  // namespace handcrafted_detail

/// 128-d descriptor: RGB histograms (3x16), magnitude-weighted gradient
/// orientation histograms at three scales (3x16), 4x4 grid of gray means,
/// channel means and standard deviations (6), gradient magnitude histogram
/// (10). Deterministic and platform independent up to libm rounding.
inline std::vector<float> handcrafted_features(const ImageBuffer& img) {
  using namespace handcrafted_detail;
  img.validate();
  std::vector<float> out;
  out.reserve(kLowLevelDim);
  const int w = img.width(), h = img.height();

  for (int c = 0; c < 3; ++c) {
    std::vector<double> hist(16, 0.0);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) hist[img.at(x, y, c) / 16] += 1;
    push_normalized(out, hist);
  }

  Gray g = to_gray(img);
  const Gray full = g;
  for (int scale = 0; scale < 3; ++scale) {
    std::vector<double> hist(16, 0.0);
    for_each_gradient(g, [&](double m, double a) {
      hist[std::min(15, static_cast<int>(a / std::numbers::pi * 16))] += m;
    });
    push_normalized(out, hist);
    if (scale < 2) g = half(g);
  }

  for (int gy = 0; gy < 4; ++gy)
    for (int gx = 0; gx < 4; ++gx) {
      double s = 0;
      int n = 0;
      for (int y = gy * h / 4; y < (gy + 1) * h / 4; ++y)
        for (int x = gx * w / 4; x < (gx + 1) * w / 4; ++x, ++n) s += full.at(x, y);
      out.push_back(static_cast<float>(s / n));
    }

  for (int c = 0; c < 3; ++c) {
    double s = 0, ss = 0;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const double v = img.at(x, y, c) / 255.0;
        s += v;
        ss += v * v;
      }
    const double n = static_cast<double>(w) * h, mean = s / n;
    out.push_back(static_cast<float>(mean));
    out.push_back(static_cast<float>(std::sqrt(std::max(0.0, ss / n - mean * mean))));
  }

  std::vector<double> mags(10, 0.0);
  for_each_gradient(full, [&](double m, double) { mags[std::min(9, static_cast<int>(m * 20))] += 1; });
  push_normalized(out, mags);
  return out;
}

}  // namespace scene_robust
