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

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ecc/model/config.hpp"

namespace ecc::model {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

/// One encoder block. The query/key/value projections are packed: columns
/// [h*d_k, (h+1)*d_k) of wq, wk and wv belong to head h. Rows of wo are
/// ordered the same way, matching Concat(head_1..head_h).
template <typename Scalar>
struct MhsaBlockParams {
  Matrix<Scalar> wq, wk, wv, wo;
  RowVector<Scalar> ln1_gamma, ln1_beta;
  Matrix<Scalar> ffn_w1;
  RowVector<Scalar> ffn_b1;
  Matrix<Scalar> ffn_w2;
  RowVector<Scalar> ffn_b2;
  RowVector<Scalar> ln2_gamma, ln2_beta;

  /// Calls f(name, tensor_of_each_argument...) for every tensor in declaration order.
  template <typename F, typename... Blocks>
  static void zip(F&& f, const std::string& prefix, Blocks&... b) {
    f(prefix + "wq", b.wq...);
    f(prefix + "wk", b.wk...);
    f(prefix + "wv", b.wv...);
    f(prefix + "wo", b.wo...);
    f(prefix + "ln1_gamma", b.ln1_gamma...);
    f(prefix + "ln1_beta", b.ln1_beta...);
    f(prefix + "ffn_w1", b.ffn_w1...);
    f(prefix + "ffn_b1", b.ffn_b1...);
    f(prefix + "ffn_w2", b.ffn_w2...);
    f(prefix + "ffn_b2", b.ffn_b2...);
    f(prefix + "ln2_gamma", b.ln2_gamma...);
    f(prefix + "ln2_beta", b.ln2_beta...);
  }
};

/// E = w0 + T_a w_audio + T_t w_text + sum_k F_k w_feature[k]
template <typename Scalar>
struct FusionParams {
  RowVector<Scalar> w0;
  Matrix<Scalar> w_audio;
  Matrix<Scalar> w_text;
  std::vector<Matrix<Scalar>> w_features;
};

template <typename Scalar>
struct HeadParams {
  Matrix<Scalar> fc1_w;  // fusion_dim x hidden
  RowVector<Scalar> fc1_b;
  Matrix<Scalar> fc2_w;  // hidden x 1
  RowVector<Scalar> fc2_b;
};

template <typename Scalar>
struct ModelParams {
  std::vector<MhsaBlockParams<Scalar>> audio_encoder;
  std::vector<MhsaBlockParams<Scalar>> text_encoder;
  FusionParams<Scalar> fusion;
  HeadParams<Scalar> head;

  /// Visits every tensor of `first` and the congruent tensors of `rest`, in
  /// the fixed order used by checkpoints and the optimizer.
  template <typename F, typename First, typename... Rest>
  static void zip(F&& f, First& first, Rest&... rest) {
    for (std::size_t i = 0; i < first.audio_encoder.size(); ++i)
      MhsaBlockParams<Scalar>::zip(f, "audio.block" + std::to_string(i) + ".", first.audio_encoder[i],
                                   rest.audio_encoder[i]...);
    for (std::size_t i = 0; i < first.text_encoder.size(); ++i)
      MhsaBlockParams<Scalar>::zip(f, "text.block" + std::to_string(i) + ".", first.text_encoder[i],
                                   rest.text_encoder[i]...);
    f(std::string("fusion.w0"), first.fusion.w0, rest.fusion.w0...);
    f(std::string("fusion.w_audio"), first.fusion.w_audio, rest.fusion.w_audio...);
    f(std::string("fusion.w_text"), first.fusion.w_text, rest.fusion.w_text...);
    for (std::size_t k = 0; k < first.fusion.w_features.size(); ++k)
      f("fusion.w_feature" + std::to_string(k), first.fusion.w_features[k], rest.fusion.w_features[k]...);
    f(std::string("head.fc1_w"), first.head.fc1_w, rest.head.fc1_w...);
    f(std::string("head.fc1_b"), first.head.fc1_b, rest.head.fc1_b...);
    f(std::string("head.fc2_w"), first.head.fc2_w, rest.head.fc2_w...);
    f(std::string("head.fc2_b"), first.head.fc2_b, rest.head.fc2_b...);
  }

  template <typename F>
  void for_each(F&& f) {
    zip(f, *this);
  }
  template <typename F>
  void for_each(F&& f) const {
    zip(f, *this);
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for_each([&](const std::string&, const auto& t) { n += static_cast<std::size_t>(t.size()); });
    return n;
  }

  /// Same shapes, all zeros.
  ModelParams zeros_like() const {
    ModelParams z = *this;
    z.for_each([](const std::string&, auto& t) { t.setZero(); });
    return z;
  }

  /// Path of the first tensor holding a NaN or infinity, if any.
  std::optional<std::string> first_non_finite() const {
    std::optional<std::string> bad;
    for_each([&](const std::string& name, const auto& t) {
      if (!bad && !t.allFinite()) bad = name;
    });
    return bad;
  }

  template <typename Other>
  ModelParams<Other> cast() const {
    ModelParams<Other> out;
    auto conv = [](const auto& blocks) {
      std::vector<MhsaBlockParams<Other>> res(blocks.size());
      for (std::size_t i = 0; i < blocks.size(); ++i) {
        const auto& b = blocks[i];
        res[i] = {b.wq.template cast<Other>(),        b.wk.template cast<Other>(),
                  b.wv.template cast<Other>(),        b.wo.template cast<Other>(),
                  b.ln1_gamma.template cast<Other>(), b.ln1_beta.template cast<Other>(),
                  b.ffn_w1.template cast<Other>(),    b.ffn_b1.template cast<Other>(),
                  b.ffn_w2.template cast<Other>(),    b.ffn_b2.template cast<Other>(),
                  b.ln2_gamma.template cast<Other>(), b.ln2_beta.template cast<Other>()};
      }
      return res;
    };
    out.audio_encoder = conv(audio_encoder);
    out.text_encoder = conv(text_encoder);
    out.fusion.w0 = fusion.w0.template cast<Other>();
    out.fusion.w_audio = fusion.w_audio.template cast<Other>();
    out.fusion.w_text = fusion.w_text.template cast<Other>();
    for (const auto& w : fusion.w_features) out.fusion.w_features.push_back(w.template cast<Other>());
    out.head.fc1_w = head.fc1_w.template cast<Other>();
    out.head.fc1_b = head.fc1_b.template cast<Other>();
    out.head.fc2_w = head.fc2_w.template cast<Other>();
    out.head.fc2_b = head.fc2_b.template cast<Other>();
    return out;
  }
};

namespace detail {

/// Uniform draws from the raw 64-bit engine output, so the stream is the same
/// on every standard library.
class UniformSource {
 public:
  explicit UniformSource(std::uint64_t seed) : engine_(seed) {}
  double operator()(double lo, double hi) {
    const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
  }

 private:
  std::mt19937_64 engine_;
};

template <typename Scalar>
Matrix<Scalar> xavier(UniformSource* rng, int fan_in, int fan_out) {
  if (!rng) return Matrix<Scalar>::Zero(fan_in, fan_out);
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Matrix<Scalar> m(fan_in, fan_out);
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = static_cast<Scalar>((*rng)(-a, a));
  return m;
}

template <typename Scalar>
MhsaBlockParams<Scalar> init_block(UniformSource* rng, const MhsaConfig& cfg) {
  const int d = cfg.model_dim;
  const int f = cfg.ffn_width();
  MhsaBlockParams<Scalar> b;
  b.wq = xavier<Scalar>(rng, d, d);
  b.wk = xavier<Scalar>(rng, d, d);
  b.wv = xavier<Scalar>(rng, d, d);
  b.wo = xavier<Scalar>(rng, d, d);
  b.ln1_gamma = RowVector<Scalar>::Ones(d);
  b.ln1_beta = RowVector<Scalar>::Zero(d);
  b.ffn_w1 = xavier<Scalar>(rng, d, f);
  b.ffn_b1 = RowVector<Scalar>::Zero(f);
  b.ffn_w2 = xavier<Scalar>(rng, f, d);
  b.ffn_b2 = RowVector<Scalar>::Zero(d);
  b.ln2_gamma = RowVector<Scalar>::Ones(d);
  b.ln2_beta = RowVector<Scalar>::Zero(d);
  return b;
}

/// Parameters shaped for `cfg`: Xavier-uniform matrices drawn from `rng`, or
/// zero matrices when `rng` is null. Biases and layer-norm shifts are zero,
/// layer-norm scales one.
template <typename Scalar>
ModelParams<Scalar> make_params(const ModelConfig& cfg, UniformSource* rng) {
  cfg.validate();
  ModelParams<Scalar> p;
  for (int i = 0; i < cfg.audio.num_blocks; ++i) p.audio_encoder.push_back(init_block<Scalar>(rng, cfg.audio));
  for (int i = 0; i < cfg.text.num_blocks; ++i) p.text_encoder.push_back(init_block<Scalar>(rng, cfg.text));
  p.fusion.w0 = RowVector<Scalar>::Zero(cfg.fusion_dim);
  p.fusion.w_audio = xavier<Scalar>(rng, cfg.audio.model_dim, cfg.fusion_dim);
  p.fusion.w_text = xavier<Scalar>(rng, cfg.text.model_dim, cfg.fusion_dim);
  for (int d : cfg.feature_dims) p.fusion.w_features.push_back(xavier<Scalar>(rng, d, cfg.fusion_dim));
  p.head.fc1_w = xavier<Scalar>(rng, cfg.fusion_dim, cfg.head_hidden);
  p.head.fc1_b = RowVector<Scalar>::Zero(cfg.head_hidden);
  p.head.fc2_w = xavier<Scalar>(rng, cfg.head_hidden, 1);
  p.head.fc2_b = RowVector<Scalar>::Zero(1);
  return p;
}

}  // namespace detail

/// Xavier-uniform matrices, zero biases and layer-norm shifts, unit
/// layer-norm scales. Deterministic in `seed`.
template <typename Scalar>
ModelParams<Scalar> init_params(const ModelConfig& cfg, std::uint64_t seed) {
  detail::UniformSource rng(seed);
  return detail::make_params<Scalar>(cfg, &rng);
}

/// Correctly shaped parameters with zero matrices.
template <typename Scalar>
ModelParams<Scalar> zero_params(const ModelConfig& cfg) {
  return detail::make_params<Scalar>(cfg, nullptr);
}

}  // namespace ecc::model
