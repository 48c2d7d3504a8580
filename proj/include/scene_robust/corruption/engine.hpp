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
#include <random>
#include <string>
#include <vector>

#include "scene_robust/core/rng.hpp"
#include "scene_robust/corruption/kernels.hpp"
#include "scene_robust/corruption/kinds.hpp"
#include "scene_robust/corruption/severity.hpp"
#include "scene_robust/image/codec.hpp"
#include "scene_robust/image/image_buffer.hpp"

namespace scene_robust {

/// Per-(image, kind, level) seed. Pure; draws never depend on execution order.
inline std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view image_id, CorruptionKind kind,
                                 SeverityLevel level) {
  return SeedHasher(global_seed)
      .add(image_id)
      .add(static_cast<std::uint64_t>(index_of(kind)))
      .add(static_cast<std::uint64_t>(level.value()))
      .value();
}

/// `<image_id>__<kind>__s<level>.<png|jpg>`
inline std::string corrupted_file_name(std::string_view image_id, CorruptionKind kind, SeverityLevel level) {
  return std::string(image_id) + "__" + std::string(to_string(kind)) + "__s" + std::to_string(level.value()) +
         (kind == CorruptionKind::jpeg ? ".jpg" : ".png");
}

namespace detail {

using kernels::Plane;
using kernels::Rgb;

// Spatial constants in the severity table are expressed at this size.
inline constexpr double kReferenceSide = 224.0;

inline double spatial_scale(const Rgb& p) { return std::min(p[0].width, p[0].height) / kReferenceSide; }

inline void for_each_sample(Rgb& p, auto&& fn) {
  for (std::size_t i = 0; i < p[0].v.size(); ++i)
    for (int c = 0; c < 3; ++c) fn(p[c].v[i]);
}

inline void clip01(Rgb& p) {
  for_each_sample(p, [](float& v) { v = std::clamp(v, 0.f, 1.f); });
}

inline Rgb gaussian_noise(Rgb p, const SeverityRow& row, Philox& rng) {
  std::normal_distribution<double> n(0.0, row.get("sigma"));
  for_each_sample(p, [&](float& v) { v = static_cast<float>(v + n(rng)); });
  clip01(p);
  return p;
}

inline Rgb shot_noise(Rgb p, const SeverityRow& row, Philox& rng) {
  const double photons = row.get("photons");
  for_each_sample(p, [&](float& v) {
    const double mean = static_cast<double>(v) * photons;
    const double k = mean > 0 ? static_cast<double>(std::poisson_distribution<long>(mean)(rng)) : 0.0;
    v = static_cast<float>(k / photons);
  });
  clip01(p);
  return p;
}

inline Rgb impulse_noise(Rgb p, const SeverityRow& row, Philox& rng) {
  const double amount = row.get("amount");
  for_each_sample(p, [&](float& v) {
    if (rng.uniform() < amount) v = rng.uniform() < 0.5 ? 0.f : 1.f;
  });
  return p;
}

inline Rgb defocus_blur(Rgb p, const SeverityRow& row) {
  const double s = spatial_scale(p);
  const auto k = kernels::disk_kernel(std::max(0.5, row.get("radius") * s), row.get("alias_sigma") * s);
  for (auto& ch : p) ch = kernels::convolve(ch, k);
  clip01(p);
  return p;
}

inline Rgb glass_blur(Rgb p, const SeverityRow& row, Philox& rng) {
  const double s = spatial_scale(p);
  const double sigma = row.get("sigma") * s;
  const int delta = std::max(1, static_cast<int>(std::lround(row.get("max_delta") * s)));
  const int iterations = static_cast<int>(row.get("iterations"));
  for (auto& ch : p) ch = kernels::gaussian_blur(ch, sigma);
  const int w = p[0].width, h = p[0].height;
  std::uniform_int_distribution<int> d(-delta, delta);
  for (int it = 0; it < iterations; ++it)
    for (int y = h - delta - 1; y >= delta; --y)
      for (int x = w - delta - 1; x >= delta; --x) {
        const int dx = d(rng), dy = d(rng);
        for (auto& ch : p) std::swap(ch.at(x, y), ch.at(x + dx, y + dy));
      }
  for (auto& ch : p) ch = kernels::gaussian_blur(ch, sigma);
  clip01(p);
  return p;
}

inline Rgb motion_blur(Rgb p, const SeverityRow& row, Philox& rng) {
  const double s = spatial_scale(p);
  const double angle = rng.uniform(-45.0, 45.0);
  const auto k = kernels::motion_kernel(std::max(1.0, row.get("radius") * s), row.get("sigma") * s, angle);
  for (auto& ch : p) ch = kernels::convolve(ch, k);
  clip01(p);
  return p;
}

inline Rgb zoom_blur(Rgb p, const SeverityRow& row) {
  const double max_zoom = row.get("max_zoom"), step = row.get("step");
  Rgb acc = p;
  int n = 1;
  // Integer stepping keeps the zoom list independent of float accumulation.
  for (int i = 0;; ++i) {
    const double z = 1.0 + i * step;
    if (z >= max_zoom - 1e-9) break;
    for (int c = 0; c < 3; ++c) {
      const Plane zc = kernels::clipped_zoom(p[c], z);
      for (std::size_t j = 0; j < zc.v.size(); ++j) acc[c].v[j] += zc.v[j];
    }
    ++n;
  }
  for_each_sample(acc, [n](float& v) { v /= static_cast<float>(n); });
  clip01(acc);
  return acc;
}

inline Rgb snow(Rgb p, const SeverityRow& row, Philox& rng) {
  const double s = spatial_scale(p);
  const int w = p[0].width, h = p[0].height;
  std::normal_distribution<double> n(row.get("loc"), row.get("scale"));
  Plane layer(w, h);
  for (float& v : layer.v) v = static_cast<float>(n(rng));
  layer = kernels::clipped_zoom(layer, row.get("zoom"));
  const float thr = static_cast<float>(row.get("threshold"));
  for (float& v : layer.v) v = v < thr ? 0.f : std::clamp(v, 0.f, 1.f);
  const auto k = kernels::motion_kernel(std::max(1.0, row.get("radius") * s), row.get("sigma") * s,
                                        rng.uniform(-135.0, -45.0));
  layer = kernels::convolve(layer, k);
  const float blend = static_cast<float>(row.get("blend"));
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const float gray = 0.299f * p[0].at(x, y) + 0.587f * p[1].at(x, y) + 0.114f * p[2].at(x, y);
      const float flakes = layer.at(x, y) + layer.at(w - 1 - x, h - 1 - y);
      for (auto& ch : p) {
        float& v = ch.at(x, y);
        v = blend * v + (1 - blend) * std::max(v, gray * 1.5f + 0.5f) + flakes;
      }
    }
  clip01(p);
  return p;
}

/// Procedural frost: plasma-fractal haze plus short blurred ice streaks,
/// tinted towards pale blue.
inline Plane frost_layer(int w, int h, double s, Philox& rng) {
  Plane haze = kernels::crop(kernels::plasma_fractal(std::max(w, h), 1.6, rng), w, h);
  Plane streaks(w, h);
  const int count = std::max(8, w * h / 40);
  for (int i = 0; i < count; ++i) {
    const double x0 = rng.uniform(0, w), y0 = rng.uniform(0, h);
    const double a = rng.uniform(0, 2 * std::numbers::pi);
    const double len = rng.uniform(2.0, 10.0) * std::max(1.0, 3 * s);
    const double strength = rng.uniform(0.2, 0.6);
    for (double t = 0; t <= len; t += 0.5) {
      const int x = static_cast<int>(x0 + t * std::cos(a)), y = static_cast<int>(y0 + t * std::sin(a));
      if (x >= 0 && y >= 0 && x < w && y < h) streaks.at(x, y) = std::min(1.f, streaks.at(x, y) + static_cast<float>(strength));
    }
  }
  streaks = kernels::gaussian_blur(streaks, std::max(0.5, 1.5 * s));
  Plane out(w, h);
  for (std::size_t i = 0; i < out.v.size(); ++i)
    out.v[i] = std::clamp(0.25f + 0.55f * haze.v[i] + 1.5f * streaks.v[i], 0.f, 1.f);
  return out;
}

inline Rgb frost(Rgb p, const SeverityRow& row, Philox& rng) {
  const Plane layer = frost_layer(p[0].width, p[0].height, spatial_scale(p), rng);
  const float iw = static_cast<float>(row.get("image_weight")), fw = static_cast<float>(row.get("frost_weight"));
  constexpr float tint[3] = {0.86f, 0.93f, 1.0f};
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < layer.v.size(); ++i) p[c].v[i] = iw * p[c].v[i] + fw * tint[c] * layer.v[i];
  clip01(p);
  return p;
}

inline Rgb fog(Rgb p, const SeverityRow& row, Philox& rng) {
  const int w = p[0].width, h = p[0].height;
  const float strength = static_cast<float>(row.get("strength"));
  float max_val = 0;
  for_each_sample(p, [&](float& v) { max_val = std::max(max_val, v); });
  const Plane f = kernels::crop(kernels::plasma_fractal(std::max(w, h), row.get("decay"), rng), w, h);
  for (auto& ch : p)
    for (std::size_t i = 0; i < f.v.size(); ++i)
      ch.v[i] = (ch.v[i] + strength * f.v[i]) * max_val / (max_val + strength);
  clip01(p);
  return p;
}

inline Rgb brightness(Rgb p, const SeverityRow& row) {
  const float delta = static_cast<float>(row.get("delta"));
  for (std::size_t i = 0; i < p[0].v.size(); ++i) {
    float hh, ss, vv;
    kernels::rgb_to_hsv(p[0].v[i], p[1].v[i], p[2].v[i], hh, ss, vv);
    vv = std::clamp(vv + delta, 0.f, 1.f);
    kernels::hsv_to_rgb(hh, ss, vv, p[0].v[i], p[1].v[i], p[2].v[i]);
  }
  clip01(p);
  return p;
}

inline Rgb contrast(Rgb p, const SeverityRow& row) {
  const float factor = static_cast<float>(row.get("factor"));
  for (auto& ch : p) {
    double sum = 0;
    for (float v : ch.v) sum += v;
    const float mean = static_cast<float>(sum / static_cast<double>(ch.v.size()));
    for (float& v : ch.v) v = (v - mean) * factor + mean;
  }
  clip01(p);
  return p;
}

/// Random affine jitter of three anchor points followed by a smooth random
/// displacement field; a single bilinear lookup resolves both.
inline Rgb elastic(Rgb p, const SeverityRow& row, Philox& rng) {
  const double s = spatial_scale(p);
  const int w = p[0].width, h = p[0].height;
  const double alpha = row.get("alpha") * s, sigma = std::max(0.5, row.get("sigma") * s);
  const double affine = row.get("affine") * s;

  const double cx = w / 2.0, cy = h / 2.0, sq = std::min(w, h) / 3.0;
  const double src[3][2] = {{cx + sq, cy + sq}, {cx + sq, cy - sq}, {cx - sq, cy - sq}};
  double dst[3][2];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 2; ++j) dst[i][j] = src[i][j] + rng.uniform(-affine, affine);
  // Inverse map dst -> src: solve [x y 1] * A = src for the 3x2 matrix A.
  const double det = dst[0][0] * (dst[1][1] - dst[2][1]) - dst[0][1] * (dst[1][0] - dst[2][0]) +
                     (dst[1][0] * dst[2][1] - dst[2][0] * dst[1][1]);
  double inv[3][3] = {
      {dst[1][1] - dst[2][1], dst[2][1] - dst[0][1], dst[0][1] - dst[1][1]},
      {dst[2][0] - dst[1][0], dst[0][0] - dst[2][0], dst[1][0] - dst[0][0]},
      {dst[1][0] * dst[2][1] - dst[2][0] * dst[1][1], dst[2][0] * dst[0][1] - dst[0][0] * dst[2][1],
       dst[0][0] * dst[1][1] - dst[1][0] * dst[0][1]},
  };
  double A[3][2] = {};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 2; ++c)
      for (int k = 0; k < 3; ++k) A[r][c] += inv[r][k] * src[k][c] / det;

  Plane dx(w, h), dy(w, h);
  for (float& v : dx.v) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  for (float& v : dy.v) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  dx = kernels::gaussian_blur(dx, sigma);
  dy = kernels::gaussian_blur(dy, sigma);

  Rgb out{Plane(w, h), Plane(w, h), Plane(w, h)};
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double qx = x + alpha * dx.at(x, y), qy = y + alpha * dy.at(x, y);
      const double sx = qx * A[0][0] + qy * A[1][0] + A[2][0];
      const double sy = qx * A[0][1] + qy * A[1][1] + A[2][1];
      for (int c = 0; c < 3; ++c) out[c].at(x, y) = kernels::sample_bilinear(p[c], sx, sy);
    }
  return out;
}

inline Rgb pixelate(Rgb p, const SeverityRow& row) {
  const double f = row.get("factor");
  const int w = p[0].width, h = p[0].height;
  const int sw = std::max(1, static_cast<int>(w * f)), sh = std::max(1, static_cast<int>(h * f));
  for (auto& ch : p) ch = kernels::resize(kernels::box_downsample(ch, sw, sh), w, h);
  return p;
}

}  // namespace detail

/// Applies one corruption. Output keeps the input's id and dimensions and is a
/// pure function of (pixels, kind, level, seed).
inline ImageBuffer apply_corruption(const ImageBuffer& image, CorruptionKind kind, SeverityLevel level,
                                    std::uint64_t seed, const SeverityParams& params) {
  image.validate();
  const SeverityRow& row = params.row(kind, level);
  if (kind == CorruptionKind::jpeg) {
    const int q = static_cast<int>(row.get("quality"));
    return codec::decode_jpeg(codec::encode_jpeg(image, q), image.image_id());
  }
  Philox rng(seed);
  auto p = kernels::split(image);
  using K = CorruptionKind;
  switch (kind) {
    case K::gaussian_noise: p = detail::gaussian_noise(std::move(p), row, rng); break;
    case K::shot_noise: p = detail::shot_noise(std::move(p), row, rng); break;
    case K::impulse_noise: p = detail::impulse_noise(std::move(p), row, rng); break;
    case K::defocus_blur: p = detail::defocus_blur(std::move(p), row); break;
    case K::glass_blur: p = detail::glass_blur(std::move(p), row, rng); break;
    case K::motion_blur: p = detail::motion_blur(std::move(p), row, rng); break;
    case K::zoom_blur: p = detail::zoom_blur(std::move(p), row); break;
    case K::snow: p = detail::snow(std::move(p), row, rng); break;
    case K::frost: p = detail::frost(std::move(p), row, rng); break;
    case K::fog: p = detail::fog(std::move(p), row, rng); break;
    case K::brightness: p = detail::brightness(std::move(p), row); break;
    case K::contrast: p = detail::contrast(std::move(p), row); break;
    case K::elastic: p = detail::elastic(std::move(p), row, rng); break;
    case K::pixelate: p = detail::pixelate(std::move(p), row); break;
    case K::jpeg: break;
  }
  return kernels::merge(p, image.image_id());
}

/// Encoded file contents for a corrupted output: PNG for every kind except
/// jpeg, whose file is the JPEG stream itself (it decodes to exactly
/// apply_corruption's pixels).
inline std::vector<std::uint8_t> corrupt_to_file_bytes(const ImageBuffer& image, CorruptionKind kind,
                                                       SeverityLevel level, std::uint64_t seed,
                                                       const SeverityParams& params) {
  if (kind == CorruptionKind::jpeg) {
    image.validate();
    return codec::encode_jpeg(image, static_cast<int>(params.row(kind, level).get("quality")));
  }
  return codec::encode_png(apply_corruption(image, kind, level, seed, params));
}

}  // namespace scene_robust
