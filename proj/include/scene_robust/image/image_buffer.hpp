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

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "scene_robust/core/error.hpp"

namespace scene_robust {

/// H×W×3 raster of 8-bit RGB samples, row-major, interleaved.
class ImageBuffer {
 public:
  static constexpr int kChannels = 3;
  static constexpr int kMinSide = 32;

  ImageBuffer() = default;

  ImageBuffer(std::string image_id, int width, int height)
      : image_id_(std::move(image_id)), width_(width), height_(height),
        data_(static_cast<std::size_t>(checked_area(width, height)) * kChannels, 0) {}

  ImageBuffer(std::string image_id, int width, int height, std::vector<std::uint8_t> data)
      : image_id_(std::move(image_id)), width_(width), height_(height), data_(std::move(data)) {
    if (data_.size() != static_cast<std::size_t>(checked_area(width, height)) * kChannels)
      throw InputError("image " + image_id_ + ": data length does not match width*height*3");
  }

  const std::string& image_id() const { return image_id_; }
  int width() const { return width_; }
  int height() const { return height_; }
  static constexpr int channels() { return kChannels; }

  std::span<const std::uint8_t> data() const { return data_; }
  std::span<std::uint8_t> data() { return data_; }

  std::uint8_t at(int x, int y, int c) const { return data_[index(x, y, c)]; }
  std::uint8_t& at(int x, int y, int c) { return data_[index(x, y, c)]; }

  /// Throws InputError when either side is below kMinSide.
  void validate() const {
    if (width_ < kMinSide || height_ < kMinSide)
      throw InputError("image " + image_id_ + " is " + std::to_string(width_) + "x" +
                       std::to_string(height_) + ", below the 32x32 minimum");
    if (data_.size() != static_cast<std::size_t>(width_) * height_ * kChannels)
      throw InputError("image " + image_id_ + ": data length does not match width*height*3");
  }

  friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;

 private:
  static int checked_area(int w, int h) {
    if (w <= 0 || h <= 0) throw InputError("image dimensions must be positive");
    return w * h;
  }
  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * kChannels + c;
  }

  std::string image_id_;
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

/// Planar float image in [0, 1] used as the working space of the corruption
/// kernels. Conversion back to 8-bit rounds half away from zero and clips.
struct FloatImage {
  int width = 0;
  int height = 0;
  std::vector<float> px;  // interleaved RGB, same layout as ImageBuffer

  FloatImage() = default;
  FloatImage(int w, int h, float fill = 0.f)
      : width(w), height(h), px(static_cast<std::size_t>(w) * h * 3, fill) {}

  float& at(int x, int y, int c) { return px[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  float at(int x, int y, int c) const { return px[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }

  static FloatImage from(const ImageBuffer& img) {
    FloatImage f(img.width(), img.height());
    auto src = img.data();
    for (std::size_t i = 0; i < src.size(); ++i) f.px[i] = static_cast<float>(src[i]) / 255.f;
    return f;
  }

  ImageBuffer to_image(const std::string& image_id) const {
    std::vector<std::uint8_t> out(px.size());
    for (std::size_t i = 0; i < px.size(); ++i) out[i] = to_byte(px[i]);
    return ImageBuffer(image_id, width, height, std::move(out));
  }

  static std::uint8_t to_byte(float v) {
    const float s = v * 255.f;
    if (!(s > 0.f)) return 0;  // also maps NaN to 0
    if (s >= 255.f) return 255;
    return static_cast<std::uint8_t>(s + 0.5f);
  }
};

}  // namespace scene_robust
