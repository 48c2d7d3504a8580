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

#include <array>
#include <optional>
#include <string>
#include <string_view>

#include "scene_robust/core/error.hpp"

namespace scene_robust {

enum class CorruptionKind {
  gaussian_noise,
  shot_noise,
  impulse_noise,
  defocus_blur,
  glass_blur,
  motion_blur,
  zoom_blur,
  snow,
  frost,
  fog,
  brightness,
  contrast,
  elastic,
  pixelate,
  jpeg,
};

inline constexpr std::size_t kNumCorruptions = 15;
inline constexpr int kNumSeverities = 5;

inline constexpr std::array<CorruptionKind, kNumCorruptions> kAllCorruptions = {
    CorruptionKind::gaussian_noise, CorruptionKind::shot_noise,   CorruptionKind::impulse_noise,
    CorruptionKind::defocus_blur,   CorruptionKind::glass_blur,   CorruptionKind::motion_blur,
    CorruptionKind::zoom_blur,      CorruptionKind::snow,         CorruptionKind::frost,
    CorruptionKind::fog,            CorruptionKind::brightness,   CorruptionKind::contrast,
    CorruptionKind::elastic,        CorruptionKind::pixelate,     CorruptionKind::jpeg,
};

// Names are part of the on-disk format (file names, config rows, report
// keys); never rename.
inline constexpr std::array<std::string_view, kNumCorruptions> kCorruptionNames = {
    "gaussian_noise", "shot_noise", "impulse_noise", "defocus_blur", "glass_blur",
    "motion_blur",    "zoom_blur",  "snow",          "frost",        "fog",
    "brightness",     "contrast",   "elastic",       "pixelate",     "jpeg",
};

constexpr std::string_view to_string(CorruptionKind k) {
  return kCorruptionNames[static_cast<std::size_t>(k)];
}

constexpr std::size_t index_of(CorruptionKind k) { return static_cast<std::size_t>(k); }

inline std::optional<CorruptionKind> parse_corruption(std::string_view name) {
  for (std::size_t i = 0; i < kNumCorruptions; ++i)
    if (kCorruptionNames[i] == name) return kAllCorruptions[i];
  return std::nullopt;
}

/// Severity level in [1, 5].
class SeverityLevel {
 public:
  constexpr explicit SeverityLevel(int level) : level_(level) {
    if (level < 1 || level > kNumSeverities)
      throw ContractError("severity level " + std::to_string(level) + " outside [1, 5]");
  }
  constexpr int value() const { return level_; }
  constexpr auto operator<=>(const SeverityLevel&) const = default;

 private:
  int level_;
};

}  // namespace scene_robust
