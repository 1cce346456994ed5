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

#include <stdexcept>
#include <string>
#include <vector>

namespace ecc::model {

/// Shape of one stacked multi-head self-attention encoder.
struct MhsaConfig {
  int num_blocks = 6;
  int num_heads = 8;
  int model_dim = 512;
  int ffn_hidden = 0;  // 0 means 4 * model_dim

  int head_dim() const { return model_dim / num_heads; }
  int ffn_width() const { return ffn_hidden > 0 ? ffn_hidden : 4 * model_dim; }

  void validate() const {
    if (num_blocks < 1 || num_heads < 1 || model_dim < 1 || ffn_hidden < 0)
      throw std::invalid_argument("MhsaConfig: dimensions must be positive");
    if (model_dim % num_heads != 0)
      throw std::invalid_argument("MhsaConfig: model_dim " + std::to_string(model_dim) +
                                  " is not divisible by num_heads " + std::to_string(num_heads));
  }

  friend bool operator==(const MhsaConfig&, const MhsaConfig&) = default;
};

/// Whole-model shape: two sequence encoders, additive fusion of the pooled
/// sequence features with the whole-text features, and the regression head.
struct ModelConfig {
  MhsaConfig audio{6, 8, 512, 0};
  MhsaConfig text{6, 8, 768, 0};
  std::vector<int> feature_dims{1024, 1024};  // T_s, T_f
  int fusion_dim = 512;
  int head_hidden = 256;

  void validate() const {
    audio.validate();
    text.validate();
    if (fusion_dim < 1 || head_hidden < 1) throw std::invalid_argument("ModelConfig: dimensions must be positive");
    for (int d : feature_dims)
      if (d < 1) throw std::invalid_argument("ModelConfig: feature dims must be positive");
  }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Which fused inputs are live. Disabled inputs enter the fusion as zero vectors.
struct FeatureMask {
  bool audio = true;
  bool text = true;
  std::vector<bool> features;  // empty means all enabled

  bool feature(std::size_t k) const { return features.empty() || features[k]; }
};

}  // namespace ecc::model
