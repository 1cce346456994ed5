// Copyright 2026 The eccvol Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "ecc/model/config.hpp"
#include "ecc/model/params.hpp"

namespace ecc {

// ECCM checkpoint, little-endian:
//   "ECCM" | u16 version=1 | u32 tau
//   | audio: u32 blocks, heads, model_dim, ffn_width | text: same
//   | u32 fusion_dim | u32 head_hidden | u32 n_features | n_features x u32 dim
//   | per tensor, in ModelParams::zip order: u32 rows | u32 cols | rows*cols f32, row-major
inline constexpr std::uint16_t kCheckpointVersion = 1;

struct Checkpoint {
  int tau = 0;
  model::ModelConfig config;
  model::ModelParams<float> params;
};

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& checkpoint);
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

void write_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace ecc
