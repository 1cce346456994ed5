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

#include <vector>

#include <Eigen/Dense>

#include "ecc/model/attention.hpp"
#include "ecc/model/params.hpp"

namespace ecc::model {

/// Rows [begin, begin + length) of a stacked batch belong to one call.
struct Segment {
  Eigen::Index begin = 0;
  Eigen::Index length = 0;
};

template <typename Scalar>
struct BlockCache {
  Matrix<Scalar> x, q, k, v, o, h1, u;
  std::vector<Matrix<Scalar>> probs;  // [segment * num_heads + head]
  LayerNormCache<Scalar> ln1, ln2;
};

template <typename Scalar>
using EncoderCache = std::vector<BlockCache<Scalar>>;

/// One block over a stack of calls: per-call multi-head attention, residual,
/// layer norm, ReLU feed-forward, residual, layer norm. Only valid rows are
/// stacked, so attention never sees padding.
template <typename Scalar>
Matrix<Scalar> block_forward(const Matrix<Scalar>& x, const std::vector<Segment>& segments,
                             const MhsaBlockParams<Scalar>& p, const MhsaConfig& cfg,
                             BlockCache<Scalar>* cache = nullptr) {
  const int dk = cfg.head_dim();
  const int heads = cfg.num_heads;
  Matrix<Scalar> q = x * p.wq;
  Matrix<Scalar> k = x * p.wk;
  Matrix<Scalar> v = x * p.wv;
  Matrix<Scalar> o(x.rows(), x.cols());
  std::vector<Matrix<Scalar>> probs;
  if (cache) probs.reserve(segments.size() * static_cast<std::size_t>(heads));
  for (const auto& s : segments) {
    for (int h = 0; h < heads; ++h) {
      Matrix<Scalar> pw = attention_weights<Scalar>(q.block(s.begin, h * dk, s.length, dk),
                                                    k.block(s.begin, h * dk, s.length, dk));
      o.block(s.begin, h * dk, s.length, dk).noalias() = pw * v.block(s.begin, h * dk, s.length, dk);
      if (cache) probs.push_back(std::move(pw));
    }
  }
  Matrix<Scalar> z1 = x;
  z1.noalias() += o * p.wo;
  LayerNormCache<Scalar> ln1;
  Matrix<Scalar> h1 = layer_norm<Scalar>(z1, p.ln1_gamma, p.ln1_beta, cache ? &ln1 : nullptr);
  Matrix<Scalar> u = h1 * p.ffn_w1;
  u.rowwise() += p.ffn_b1;
  Matrix<Scalar> z2 = h1;
  z2.noalias() += u.cwiseMax(Scalar(0)) * p.ffn_w2;
  z2.rowwise() += p.ffn_b2;
  LayerNormCache<Scalar> ln2;
  Matrix<Scalar> y = layer_norm<Scalar>(z2, p.ln2_gamma, p.ln2_beta, cache ? &ln2 : nullptr);
  if (cache) {
    cache->x = x;
    cache->q = std::move(q);
    cache->k = std::move(k);
    cache->v = std::move(v);
    cache->o = std::move(o);
    cache->h1 = std::move(h1);
    cache->u = std::move(u);
    cache->probs = std::move(probs);
    cache->ln1 = std::move(ln1);
    cache->ln2 = std::move(ln2);
  }
  return y;
}

/// Accumulates parameter gradients into `g`; returns d(loss)/d(x) when
/// `want_input_grad` is set, otherwise an empty matrix.
template <typename Scalar>
Matrix<Scalar> block_backward(const Matrix<Scalar>& dy, const BlockCache<Scalar>& c,
                              const std::vector<Segment>& segments, const MhsaBlockParams<Scalar>& p,
                              MhsaBlockParams<Scalar>& g, const MhsaConfig& cfg, bool want_input_grad) {
  const int dk = cfg.head_dim();
  const int heads = cfg.num_heads;
  const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(dk));

  const Matrix<Scalar> dz2 = layer_norm_backward<Scalar>(dy, c.ln2, p.ln2_gamma, g.ln2_gamma, g.ln2_beta);
  const Matrix<Scalar> r = c.u.cwiseMax(Scalar(0));
  g.ffn_w2.noalias() += r.transpose() * dz2;
  g.ffn_b2 += dz2.colwise().sum();
  Matrix<Scalar> du = dz2 * p.ffn_w2.transpose();
  du.array() *= (c.u.array() > Scalar(0)).template cast<Scalar>();
  g.ffn_w1.noalias() += c.h1.transpose() * du;
  g.ffn_b1 += du.colwise().sum();
  Matrix<Scalar> dh1 = dz2;
  dh1.noalias() += du * p.ffn_w1.transpose();

  const Matrix<Scalar> dz1 = layer_norm_backward<Scalar>(dh1, c.ln1, p.ln1_gamma, g.ln1_gamma, g.ln1_beta);
  g.wo.noalias() += c.o.transpose() * dz1;
  const Matrix<Scalar> d_o = dz1 * p.wo.transpose();

  Matrix<Scalar> dq(c.q.rows(), c.q.cols()), dkm(c.k.rows(), c.k.cols()), dv(c.v.rows(), c.v.cols());
  std::size_t idx = 0;
  for (const auto& s : segments) {
    for (int h = 0; h < heads; ++h, ++idx) {
      const Matrix<Scalar>& pw = c.probs[idx];
      const auto dob = d_o.block(s.begin, h * dk, s.length, dk);
      const Matrix<Scalar> dp = dob * c.v.block(s.begin, h * dk, s.length, dk).transpose();
      dv.block(s.begin, h * dk, s.length, dk).noalias() = pw.transpose() * dob;
      const Matrix<Scalar> ds = softmax_backward<Scalar>(pw, dp) * scale;
      dq.block(s.begin, h * dk, s.length, dk).noalias() = ds * c.k.block(s.begin, h * dk, s.length, dk);
      dkm.block(s.begin, h * dk, s.length, dk).noalias() = ds.transpose() * c.q.block(s.begin, h * dk, s.length, dk);
    }
  }
  g.wq.noalias() += c.x.transpose() * dq;
  g.wk.noalias() += c.x.transpose() * dkm;
  g.wv.noalias() += c.x.transpose() * dv;
  if (!want_input_grad) return {};
  Matrix<Scalar> dx = dz1;
  dx.noalias() += dq * p.wq.transpose();
  dx.noalias() += dkm * p.wk.transpose();
  dx.noalias() += dv * p.wv.transpose();
  return dx;
}

template <typename Scalar>
Matrix<Scalar> encoder_forward(const Matrix<Scalar>& x, const std::vector<Segment>& segments,
                               const std::vector<MhsaBlockParams<Scalar>>& blocks, const MhsaConfig& cfg,
                               EncoderCache<Scalar>* cache = nullptr) {
  if (x.cols() != cfg.model_dim)
    throw DimensionError("encoder: input has " + std::to_string(x.cols()) + " columns, model_dim is " +
                         std::to_string(cfg.model_dim));
  if (cache) cache->assign(blocks.size(), {});
  Matrix<Scalar> h = x;
  for (std::size_t b = 0; b < blocks.size(); ++b)
    h = block_forward<Scalar>(h, segments, blocks[b], cfg, cache ? &(*cache)[b] : nullptr);
  return h;
}

template <typename Scalar>
void encoder_backward(const Matrix<Scalar>& dy, const EncoderCache<Scalar>& cache,
                      const std::vector<Segment>& segments, const std::vector<MhsaBlockParams<Scalar>>& blocks,
                      std::vector<MhsaBlockParams<Scalar>>& grads, const MhsaConfig& cfg) {
  Matrix<Scalar> d = dy;
  for (std::size_t b = blocks.size(); b-- > 0;)
    d = block_backward<Scalar>(d, cache[b], segments, blocks[b], grads[b], cfg, b > 0);
}

/// Reference encoder over a full padded matrix. Attention masks padded keys,
/// and padded rows are reset to zero after every block, so the output keeps
/// the padding convention of its input.
template <typename Scalar>
Matrix<Scalar> mhsa_forward(const Matrix<Scalar>& x, const std::vector<bool>& mask,
                            const std::vector<MhsaBlockParams<Scalar>>& blocks, const MhsaConfig& cfg) {
  if (x.cols() != cfg.model_dim)
    throw DimensionError("mhsa_forward: input has " + std::to_string(x.cols()) + " columns, model_dim is " +
                         std::to_string(cfg.model_dim));
  if (static_cast<Eigen::Index>(mask.size()) != x.rows()) throw DimensionError("mhsa_forward: mask length");
  const int dk = cfg.head_dim();
  Matrix<Scalar> h = x;
  for (const auto& p : blocks) {
    const Matrix<Scalar> q = h * p.wq, k = h * p.wk, v = h * p.wv;
    Matrix<Scalar> o(h.rows(), h.cols());
    for (int hd = 0; hd < cfg.num_heads; ++hd)
      o.middleCols(hd * dk, dk) =
          attention<Scalar>(q.middleCols(hd * dk, dk), k.middleCols(hd * dk, dk), v.middleCols(hd * dk, dk), mask);
    const Matrix<Scalar> h1 = layer_norm<Scalar>(h + o * p.wo, p.ln1_gamma, p.ln1_beta);
    Matrix<Scalar> u = h1 * p.ffn_w1;
    u.rowwise() += p.ffn_b1;
    Matrix<Scalar> z2 = h1 + u.cwiseMax(Scalar(0)) * p.ffn_w2;
    z2.rowwise() += p.ffn_b2;
    h = layer_norm<Scalar>(z2, p.ln2_gamma, p.ln2_beta);
    for (Eigen::Index r = 0; r < h.rows(); ++r)
      if (!mask[static_cast<std::size_t>(r)]) h.row(r).setZero();
  }
  return h;
}

}  // namespace ecc::model
