// Copyright 2026 The OBIC Authors
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

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "obic/graph.hpp"

namespace obic {

using ModelId = std::array<std::uint8_t, 8>;

// Header fields stored ahead of the parameters.
struct CheckpointInfo {
  std::uint32_t latent_channels = 0;
  std::uint32_t hyper_channels = 0;
  // Training operating point (informational; selects among sweep outputs).
  double lambda = 0.0;
  double a1 = 0.0;
  double a2 = 0.0;
  std::uint32_t lambda_id = 0;
};

struct Checkpoint {
  CheckpointInfo info;
  ParameterSet params;
};

// Layout: "OBICW", u32 version (1), u32 C, u32 C_h, f64 lambda, f64 a1,
// f64 a2, u32 lambda_id, u32 count, then per parameter in name order:
// u32 name length, name bytes, u32 rank, u32 extents[rank], f32 values.
// All integers and floats little-endian.
std::vector<std::uint8_t> serialize_checkpoint(const ParameterSet& params,
                                               const CheckpointInfo& info);
Checkpoint parse_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const std::filesystem::path& path, const ParameterSet& params,
                     const CheckpointInfo& info);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Hash of (C, C_h, names, shapes, float32 values). Two parameter sets that
// serialize identically share an id.
ModelId model_id(const ParameterSet& params, std::uint32_t latent_channels,
                 std::uint32_t hyper_channels);

// Rounds every parameter value to the nearest float32.
void round_to_float(ParameterSet& params);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace obic
