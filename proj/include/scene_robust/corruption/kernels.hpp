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

#include "scene_robust/core/rng.hpp"
#include "scene_robust/image/image_buffer.hpp"

// Single-channel float kernels used by the corruption engine. Borders are
// reflected (…cba|abcd|dcb…); resampling is bilinear with clamp-to-edge.

namespace scene_robust::kernels {

struct Plane {
  int width = 0;
  int height = 0;
  std::vector<float> v;

  Plane() = default;
  Plane(int w, int h, float fill = 0.f) : width(w), height(h), v(static_cast<std::size_t>(w) * h, fill) {}

  float& at(int x, int y) { return v[static_cast<std::size_t>(y) * width + x]; }
  float at(int x, int y) const { return v[static_cast<std::size_t>(y) * width + x]; }
};

using Rgb = std::array<Plane, 3>;

inline Rgb split(const ImageBuffer& img) {
  Rgb out{Plane(img.width(), img.height()), Plane(img.width(), img.height()), Plane(img.width(), img.height())};
  auto d = img.data();
  const std::size_t n = static_cast<std::size_t>(img.width()) * img.height();
  for (std::size_t i = 0; i < n; ++i)
    for (int c = 0; c < 3; ++c) out[c].v[i] = static_cast<float>(d[i * 3 + c]) / 255.f;
  return out;
}

inline ImageBuffer merge(const Rgb& p, const std::string& image_id) {
  std::vector<std::uint8_t> data(p[0].v.size() * 3);
  for (std::size_t i = 0; i < p[0].v.size(); ++i)
    for (int c = 0; c < 3; ++c) data[i * 3 + c] = FloatImage::to_byte(p[c].v[i]);
  return ImageBuffer(image_id, p[0].width, p[0].height, std::move(data));
}

inline int reflect(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

inline std::vector<float> gaussian_1d(double sigma, double truncate = 4.0) {
  if (sigma <= 0) return {1.f};
  const int r = std::max(1, static_cast<int>(truncate * sigma + 0.5));
  std::vector<double> k(static_cast<std::size_t>(2 * r + 1));
  double sum = 0;
  for (int i = -r; i <= r; ++i) sum += k[static_cast<std::size_t>(i + r)] = std::exp(-0.5 * i * i / (sigma * sigma));
  std::vector<float> out(k.size());
  for (std::size_t i = 0; i < k.size(); ++i) out[i] = static_cast<float>(k[i] / sum);
  return out;
}

inline Plane gaussian_blur(const Plane& in, double sigma) {
  const auto k = gaussian_1d(sigma);
  const int r = static_cast<int>(k.size() / 2);
  Plane tmp(in.width, in.height), out(in.width, in.height);
  for (int y = 0; y < in.height; ++y)
    for (int x = 0; x < in.width; ++x) {
      float s = 0;
      for (int i = -r; i <= r; ++i) s += k[static_cast<std::size_t>(i + r)] * in.at(reflect(x + i, in.width), y);
      tmp.at(x, y) = s;
    }
  for (int y = 0; y < in.height; ++y)
    for (int x = 0; x < in.width; ++x) {
      float s = 0;
      for (int i = -r; i <= r; ++i) s += k[static_cast<std::size_t>(i + r)] * tmp.at(x, reflect(y + i, in.height));
      out.at(x, y) = s;
    }
  return out;
}

/// Square odd-sized kernel, row-major.
struct Kernel2d {
  int size = 1;
  std::vector<float> w{1.f};
};

inline Plane convolve(const Plane& in, const Kernel2d& k) {
  const int r = k.size / 2;
  Plane out(in.width, in.height);
  for (int y = 0; y < in.height; ++y)
    for (int x = 0; x < in.width; ++x) {
      float s = 0;
      for (int j = 0; j < k.size; ++j) {
        const int yy = reflect(y + j - r, in.height);
        for (int i = 0; i < k.size; ++i) {
          const float wt = k.w[static_cast<std::size_t>(j) * k.size + i];
          if (wt != 0.f) s += wt * in.at(reflect(x + i - r, in.width), yy);
        }
      }
      out.at(x, y) = s;
    }
  return out;
}

inline void normalize(Kernel2d& k) {
  double sum = 0;
  for (float v : k.w) sum += v;
  if (sum > 0)
    for (float& v : k.w) v = static_cast<float>(v / sum);
}

/// Disk of the given radius (pixels); each tap is weighted by the fraction of
/// its pixel square covered by the disk, so sub-pixel radii still blur.
inline Kernel2d disk_kernel(double radius, double alias_sigma) {
  const int r = std::max(1, static_cast<int>(std::ceil(radius + 0.5)));
  Kernel2d k{2 * r + 1, std::vector<float>(static_cast<std::size_t>((2 * r + 1) * (2 * r + 1)))};
  constexpr int kSub = 8;
  for (int y = -r; y <= r; ++y)
    for (int x = -r; x <= r; ++x) {
      int inside = 0;
      for (int sy = 0; sy < kSub; ++sy)
        for (int sx = 0; sx < kSub; ++sx) {
          const double px = x - 0.5 + (sx + 0.5) / kSub, py = y - 0.5 + (sy + 0.5) / kSub;
          inside += px * px + py * py <= radius * radius;
        }
      k.w[static_cast<std::size_t>((y + r) * k.size + x + r)] = static_cast<float>(inside) / (kSub * kSub);
    }
  normalize(k);
  if (alias_sigma > 0) {
    Plane p(k.size, k.size);
    p.v = k.w;
    p = gaussian_blur(p, alias_sigma);
    k.w = p.v;
    normalize(k);
  }
  return k;
}

/// One-sided line kernel of length `radius` at `angle_deg`, with Gaussian
/// falloff along the line.
inline Kernel2d motion_kernel(double radius, double sigma, double angle_deg) {
  const int r = std::max(1, static_cast<int>(std::ceil(radius)));
  Kernel2d k{2 * r + 1, std::vector<float>(static_cast<std::size_t>((2 * r + 1) * (2 * r + 1)), 0.f)};
  const double a = angle_deg * std::numbers::pi / 180.0;
  const double dx = std::cos(a), dy = std::sin(a);
  const int steps = std::max(1, static_cast<int>(std::ceil(radius * 2)));
  for (int s = 0; s <= steps; ++s) {
    const double t = radius * s / steps;
    const double wt = sigma > 0 ? std::exp(-0.5 * t * t / (sigma * sigma)) : 1.0;
    const double px = r + t * dx, py = r + t * dy;
    const int x0 = static_cast<int>(std::floor(px)), y0 = static_cast<int>(std::floor(py));
    const double fx = px - x0, fy = py - y0;
    auto splat = [&](int x, int y, double f) {
      if (x >= 0 && y >= 0 && x < k.size && y < k.size) k.w[static_cast<std::size_t>(y * k.size + x)] += static_cast<float>(f * wt);
    };
    splat(x0, y0, (1 - fx) * (1 - fy));
    splat(x0 + 1, y0, fx * (1 - fy));
    splat(x0, y0 + 1, (1 - fx) * fy);
    splat(x0 + 1, y0 + 1, fx * fy);
  }
  normalize(k);
  return k;
}

inline float sample_bilinear(const Plane& p, double x, double y) {
  x = std::clamp(x, 0.0, static_cast<double>(p.width - 1));
  y = std::clamp(y, 0.0, static_cast<double>(p.height - 1));
  const int x0 = static_cast<int>(x), y0 = static_cast<int>(y);
  const int x1 = std::min(x0 + 1, p.width - 1), y1 = std::min(y0 + 1, p.height - 1);
  const double fx = x - x0, fy = y - y0;
  return static_cast<float>((1 - fy) * ((1 - fx) * p.at(x0, y0) + fx * p.at(x1, y0)) +
                            fy * ((1 - fx) * p.at(x0, y1) + fx * p.at(x1, y1)));
}

/// Bilinear resize of the sub-rectangle [x0, x0+w) × [y0, y0+h) onto an
/// out_w × out_h grid (pixel centres aligned).
inline Plane resize_region(const Plane& in, double x0, double y0, double w, double h, int out_w, int out_h) {
  Plane out(out_w, out_h);
  const double sx = w / out_w, sy = h / out_h;
  for (int y = 0; y < out_h; ++y)
    for (int x = 0; x < out_w; ++x)
      out.at(x, y) = sample_bilinear(in, x0 + (x + 0.5) * sx - 0.5, y0 + (y + 0.5) * sy - 0.5);
  return out;
}

inline Plane resize(const Plane& in, int out_w, int out_h) {
  return resize_region(in, 0, 0, in.width, in.height, out_w, out_h);
}

/// Area-average down-sampling to out_w × out_h.
inline Plane box_downsample(const Plane& in, int out_w, int out_h) {
  Plane out(out_w, out_h);
  for (int y = 0; y < out_h; ++y) {
    const int ya = y * in.height / out_h, yb = std::max(ya + 1, (y + 1) * in.height / out_h);
    for (int x = 0; x < out_w; ++x) {
      const int xa = x * in.width / out_w, xb = std::max(xa + 1, (x + 1) * in.width / out_w);
      double s = 0;
      for (int yy = ya; yy < yb; ++yy)
        for (int xx = xa; xx < xb; ++xx) s += in.at(xx, yy);
      out.at(x, y) = static_cast<float>(s / ((yb - ya) * (xb - xa)));
    }
  }
  return out;
}

/// Centre crop of 1/zoom of the plane, scaled back to full size.
inline Plane clipped_zoom(const Plane& in, double zoom) {
  const double cw = in.width / zoom, ch = in.height / zoom;
  return resize_region(in, (in.width - cw) / 2, (in.height - ch) / 2, cw, ch, in.width, in.height);
}

/// Diamond-square plasma fractal on a (2^k)×(2^k) grid, normalised to [0, 1].
inline Plane plasma_fractal(int min_size, double decay, Philox& rng) {
  int n = 1;
  while (n < min_size) n <<= 1;
  Plane m(n, n);
  auto wrap = [n](int i) { return ((i % n) + n) % n; };
  double range = 100.0;
  for (int step = n; step >= 2; step /= 2) {
    const int half = step / 2;
    // squares
    for (int y = 0; y < n; y += step)
      for (int x = 0; x < n; x += step) {
        const double avg = (m.at(x, y) + m.at(wrap(x + step), y) + m.at(x, wrap(y + step)) +
                            m.at(wrap(x + step), wrap(y + step))) / 4.0;
        m.at(x + half, y + half) = static_cast<float>(avg + rng.uniform(-range, range));
      }
    // diamonds
    for (int y = 0; y < n; y += half)
      for (int x = ((y / half) % 2 == 0) ? half : 0; x < n; x += step) {
        const double avg = (m.at(wrap(x - half), y) + m.at(wrap(x + half), y) + m.at(x, wrap(y - half)) +
                            m.at(x, wrap(y + half))) / 4.0;
        m.at(x, y) = static_cast<float>(avg + rng.uniform(-range, range));
      }
    range /= decay;
  }
  const auto [lo, hi] = std::minmax_element(m.v.begin(), m.v.end());
  const float a = *lo, span = std::max(1e-12f, *hi - *lo);
  for (float& v : m.v) v = (v - a) / span;
  return m;
}

inline Plane crop(const Plane& in, int w, int h) {
  Plane out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) out.at(x, y) = in.at(x, y);
  return out;
}

inline void rgb_to_hsv(float r, float g, float b, float& h, float& s, float& v) {
  const float mx = std::max({r, g, b}), mn = std::min({r, g, b});
  const float d = mx - mn;
  v = mx;
  s = mx > 0 ? d / mx : 0.f;
  if (d <= 0) {
    h = 0;
    return;
  }
  if (mx == r) h = std::fmod((g - b) / d, 6.f);
  else if (mx == g) h = (b - r) / d + 2.f;
  else h = (r - g) / d + 4.f;
  h /= 6.f;
  if (h < 0) h += 1.f;
}

inline void hsv_to_rgb(float h, float s, float v, float& r, float& g, float& b) {
  const float hh = h * 6.f;
  const int i = static_cast<int>(std::floor(hh)) % 6;
  const float f = hh - std::floor(hh);
  const float p = v * (1 - s), q = v * (1 - s * f), t = v * (1 - s * (1 - f));
  switch (i) {
    case 0: r = v, g = t, b = p; break;
    case 1: r = q, g = v, b = p; break;
    case 2: r = p, g = v, b = t; break;
    case 3: r = p, g = q, b = v; break;
    case 4: r = t, g = p, b = v; break;
    default: r = v, g = p, b = q; break;
  }
}

}  // namespace scene_robust::kernels
