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
#include <string>

#include "scene_robust/core/rng.hpp"
#include "scene_robust/image/image_buffer.hpp"

namespace scene_robust::testing {

/// Smooth colour gradients with a few random discs; enough structure for
/// blur and noise statistics to behave like natural images.
inline ImageBuffer synthetic_image(const std::string& id, int w, int h, std::uint64_t seed) {
  ImageBuffer img(id, w, h);
  Philox rng(seed);
  const double a = rng.uniform(0.2, 0.8), b = rng.uniform(0.2, 0.8), c = rng.uniform(0.2, 0.8);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double u = static_cast<double>(x) / w, v = static_cast<double>(y) / h;
      img.at(x, y, 0) = static_cast<std::uint8_t>(255 * (a * u + (1 - a) * v));
      img.at(x, y, 1) = static_cast<std::uint8_t>(255 * (0.5 + 0.4 * std::sin(6 * b * u + 3 * v)));
      img.at(x, y, 2) = static_cast<std::uint8_t>(255 * c * (1 - u * v));
    }
  for (int d = 0; d < 5; ++d) {
    const double cx = rng.uniform(0, w), cy = rng.uniform(0, h), r = rng.uniform(3, w / 4.0);
    const std::uint8_t col[3] = {static_cast<std::uint8_t>(rng() & 0xFF), static_cast<std::uint8_t>(rng() & 0xFF),
                                 static_cast<std::uint8_t>(rng() & 0xFF)};
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        if ((x - cx) * (x - cx) + (y - cy) * (y - cy) < r * r)
          for (int ch = 0; ch < 3; ++ch) img.at(x, y, ch) = col[ch];
  }
  return img;
}

inline ImageBuffer uniform_image(const std::string& id, int w, int h, std::uint8_t value) {
  ImageBuffer img(id, w, h);
  for (auto& v : img.data()) v = value;
  return img;
}

}  // namespace scene_robust::testing
