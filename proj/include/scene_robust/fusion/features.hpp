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
#include <map>
#include <string>
#include <vector>

#include "scene_robust/core/binary_io.hpp"
#include "scene_robust/core/error.hpp"

namespace scene_robust {

inline constexpr std::uint32_t kLowLevelDim = 128;

/// Low-level feature vectors keyed by image id, as written by the external
/// CNN stream.
struct FeatureMap {
  std::string source;  // backbone tag; not stored in the file
  std::map<std::string, std::vector<float>> vectors;

  const std::vector<float>* find(const std::string& id) const {
    auto it = vectors.find(id);
    return it == vectors.end() ? nullptr : &it->second;
  }
};

inline constexpr std::string_view kFeatureMagic = "P148FEAT";
inline constexpr std::uint32_t kFeatureVersion = 1;

inline std::vector<std::uint8_t> serialize_features(const FeatureMap& m) {
  ByteWriter w;
  w.put_bytes(kFeatureMagic);
  w.put<std::uint32_t>(kFeatureVersion);
  w.put<std::uint32_t>(kLowLevelDim);
  w.put<std::uint64_t>(m.vectors.size());
  for (const auto& [id, v] : m.vectors) {
    if (id.size() > 0xFFFF) throw ContractError("image id longer than 65535 bytes");
    if (v.size() != kLowLevelDim)
      throw ContractError("feature vector for " + id + " has " + std::to_string(v.size()) + " values, expected 128");
    w.put<std::uint16_t>(static_cast<std::uint16_t>(id.size()));
    w.put_bytes(id);
    w.put_array(std::span<const float>(v));
  }
  return w.take();
}

inline FeatureMap parse_features(std::span<const std::uint8_t> bytes, const std::string& what = "features",
                                 std::string source = "") {
  ByteReader r(bytes, what);
  r.expect_magic(kFeatureMagic);
  if (const auto v = r.get<std::uint32_t>(); v != kFeatureVersion)
    throw FormatError(what + ": unsupported version " + std::to_string(v));
  if (const auto dim = r.get<std::uint32_t>(); dim != kLowLevelDim)
    throw FormatError(what + ": feature dimension " + std::to_string(dim) + ", expected 128");
  const auto count = r.get<std::uint64_t>();
  FeatureMap m;
  m.source = std::move(source);
  for (std::uint64_t i = 0; i < count; ++i) {
    std::string id = r.get_string(r.get<std::uint16_t>());
    std::vector<float> v(kLowLevelDim);
    r.get_array(std::span<float>(v));
    for (float x : v)
      if (!std::isfinite(x)) throw FormatError(what + ": non-finite value in record " + id);
    if (!m.vectors.emplace(id, std::move(v)).second) throw FormatError(what + ": duplicate image id " + id);
  }
  if (r.remaining() != 0) throw FormatError(what + ": trailing bytes after " + std::to_string(count) + " records");
  return m;
}

inline FeatureMap load_features(const std::string& path, std::string source = "") {
  return parse_features(read_file_bytes(path), path, source.empty() ? path : std::move(source));
}

inline void save_features(const std::string& path, const FeatureMap& m) { write_file_atomic(path, serialize_features(m)); }

}  // namespace scene_robust
