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
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "scene_robust/core/binary_io.hpp"
#include "scene_robust/nn/optimizer.hpp"

namespace scene_robust::nn {

struct TensorF32 {
  std::vector<std::uint64_t> shape;
  std::vector<float> data;

  friend bool operator==(const TensorF32&, const TensorF32&) = default;
};

/// Named float tensors plus JSON metadata.
///
/// File layout (little-endian):
///   "P148CKPT" | u32 version | u32 meta_len | meta JSON (UTF-8)
///   | u32 tensor_count | per tensor: u32 name_len, name, u32 rank,
///     u64 extents[rank], f32 data[prod(extents)]
///   | u32 CRC-32 of every preceding byte
struct Checkpoint {
  static constexpr std::string_view kMagic = "P148CKPT";
  static constexpr std::uint32_t kVersion = 1;

  nlohmann::json metadata = nlohmann::json::object();
  std::map<std::string, TensorF32> tensors;

  std::vector<std::uint8_t> serialize() const {
    ByteWriter w;
    w.put_bytes(kMagic);
    w.put<std::uint32_t>(kVersion);
    const std::string meta = metadata.dump();
    w.put<std::uint32_t>(static_cast<std::uint32_t>(meta.size()));
    w.put_bytes(meta);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(tensors.size()));
    for (const auto& [name, t] : tensors) {
      w.put<std::uint32_t>(static_cast<std::uint32_t>(name.size()));
      w.put_bytes(name);
      w.put<std::uint32_t>(static_cast<std::uint32_t>(t.shape.size()));
      for (auto e : t.shape) w.put<std::uint64_t>(e);
      w.put_array(std::span<const float>(t.data));
    }
    w.put<std::uint32_t>(crc32_of(w.bytes()));
    return w.take();
  }

  static Checkpoint deserialize(std::span<const std::uint8_t> bytes, const std::string& what = "checkpoint") {
    if (bytes.size() < 4) throw FormatError(what + ": truncated file");
    const auto body = bytes.first(bytes.size() - 4);
    ByteReader crc_reader(bytes.last(4), what);
    if (crc_reader.get<std::uint32_t>() != crc32_of(body)) {
      ByteReader probe(bytes, what);
      probe.expect_magic(kMagic);
      throw FormatError(what + ": CRC mismatch (corrupt or truncated)");
    }
    ByteReader r(body, what);
    r.expect_magic(kMagic);
    if (const auto v = r.get<std::uint32_t>(); v != kVersion)
      throw FormatError(what + ": unsupported version " + std::to_string(v));
    Checkpoint c;
    const auto meta_len = r.get<std::uint32_t>();
    try {
      c.metadata = nlohmann::json::parse(r.get_string(meta_len));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(what + ": bad metadata: " + e.what());
    }
    const auto count = r.get<std::uint32_t>();
    for (std::uint32_t i = 0; i < count; ++i) {
      const auto name = r.get_string(r.get<std::uint32_t>());
      TensorF32 t;
      const auto rank = r.get<std::uint32_t>();
      if (rank > 8) throw FormatError(what + ": tensor " + name + " has rank " + std::to_string(rank));
      std::uint64_t n = 1;
      for (std::uint32_t k = 0; k < rank; ++k) {
        t.shape.push_back(r.get<std::uint64_t>());
        n *= t.shape.back();
      }
      if (n * 4 > r.remaining()) throw FormatError(what + ": truncated file");
      t.data.resize(n);
      r.get_array(std::span<float>(t.data));
      if (!c.tensors.emplace(name, std::move(t)).second) throw FormatError(what + ": duplicate tensor " + name);
    }
    if (r.remaining() != 0) throw FormatError(what + ": trailing bytes");
    return c;
  }

  void save(const std::string& path) const { write_file_atomic(path, serialize()); }
  static Checkpoint load(const std::string& path) { return deserialize(read_file_bytes(path), path); }

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

inline TensorF32 to_f32(const Matrix<double>& m) {
  TensorF32 t{{static_cast<std::uint64_t>(m.rows), static_cast<std::uint64_t>(m.cols)}, {}};
  t.data.reserve(m.size());
  for (double x : m.v) t.data.push_back(static_cast<float>(x));
  return t;
}

inline Matrix<double> from_f32(const TensorF32& t, const std::string& name) {
  if (t.shape.size() != 2) throw FormatError("tensor " + name + " is not rank 2");
  Matrix<double> m(static_cast<int>(t.shape[0]), static_cast<int>(t.shape[1]));
  for (std::size_t i = 0; i < m.size(); ++i) m.v[i] = static_cast<double>(t.data[i]);
  return m;
}

/// Rounds every entry to the nearest float, so exporting is lossless.
inline void round_to_f32(NamedTensors& t) {
  for (auto& [_, m] : t)
    for (double& x : m.v) x = static_cast<double>(static_cast<float>(x));
}

}  // namespace scene_robust::nn
