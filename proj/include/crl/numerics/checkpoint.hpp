// Copyright 2026 The CRL Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CRL_NUMERICS_CHECKPOINT_HPP_
#define CRL_NUMERICS_CHECKPOINT_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "crl/numerics/params.hpp"

// Binary checkpoint layout (all integers little-endian):
//
//   "CRL1"                       magic, 4 bytes
//   u32 version                  kCheckpointVersion
//   u32 tensor_count
//   tensor_count x {
//     u32 name_len, name bytes (UTF-8)
//     u8  dtype                  1 = f32
//     u32 ndim, u64 dims[ndim]
//     f32 data[prod(dims)]
//   }
//   u32 section_count
//   section_count x { u32 name_len, name, u64 byte_len, bytes }
//   u32 crc32 of every preceding byte
//
// Sections: "optimizer", "rng", "normalizer", "metadata".
namespace crl::nn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  Shape shape;
  std::vector<float> data;

  bool operator==(const NamedTensor&) const = default;
};

// Running reward statistics (Welford); owned by the contrastive module but
// persisted here so this layer has no upward dependency.
struct NormalizerState {
  std::uint64_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;

  bool operator==(const NormalizerState&) const = default;
};

struct Checkpoint {
  std::vector<NamedTensor> params;
  std::vector<std::pair<std::string, AdamState>> optimizers;
  std::string rng_state;
  NormalizerState normalizer;
  std::map<std::string, std::string> metadata;

  // Appends every member of `set` as "<prefix>/<name>".
  void add_params(const std::string& prefix, const ParamSet& set);
  // Copies values of "<prefix>/<name>" into an existing set of matching
  // layout. Throws FormatError on missing names or shape mismatch.
  void load_params(const std::string& prefix, ParamSet& set) const;
  bool has_params(const std::string& prefix) const;
  const AdamState* optimizer(const std::string& name) const;
};

std::vector<std::uint8_t> serialize(const Checkpoint& checkpoint);
// Throws FormatError on truncated or malformed input and VersionError on a
// version mismatch.
Checkpoint deserialize(std::span<const std::uint8_t> bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace crl::nn

#endif  // CRL_NUMERICS_CHECKPOINT_HPP_
