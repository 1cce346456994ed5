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

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ecc/embedding.hpp"
#include "ecc/errors.hpp"
#include "ecc/model/encoder.hpp"
#include "ecc/model/params.hpp"

namespace ecc::model {

template <typename Scalar>
using ColVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Model inputs for one call: the valid rows of the audio and sentence
/// embedding matrices and the whole-text feature vectors.
template <typename Scalar>
struct Sample {
  Matrix<Scalar> audio;
  Matrix<Scalar> sentences;
  std::vector<RowVector<Scalar>> features;
};

/// Mean over rows whose mask entry is true.
template <typename Scalar>
RowVector<Scalar> masked_average_pool(const Matrix<Scalar>& x, const std::vector<bool>& mask) {
  if (static_cast<Eigen::Index>(mask.size()) != x.rows()) throw DimensionError("pool: mask length differs from rows");
  RowVector<Scalar> sum = RowVector<Scalar>::Zero(x.cols());
  Eigen::Index n = 0;
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    if (!mask[static_cast<std::size_t>(r)]) continue;
    sum += x.row(r);
    ++n;
  }
  if (n == 0) throw DimensionError("pool: every row is masked");
  return sum / static_cast<Scalar>(n);
}

/// Additive fusion on stacked rows (one row per call).
template <typename Scalar>
Matrix<Scalar> fuse_rows(const Matrix<Scalar>& ta, const Matrix<Scalar>& tt, const std::vector<Matrix<Scalar>>& feats,
                         const FusionParams<Scalar>& f) {
  if (ta.cols() != f.w_audio.rows() || tt.cols() != f.w_text.rows() || feats.size() != f.w_features.size())
    throw DimensionError("fuse: input dimensions do not match the fusion weights");
  Matrix<Scalar> e = ta * f.w_audio;
  e.noalias() += tt * f.w_text;
  for (std::size_t k = 0; k < feats.size(); ++k) {
    if (feats[k].cols() != f.w_features[k].rows())
      throw DimensionError("fuse: feature " + std::to_string(k) + " has dim " + std::to_string(feats[k].cols()) +
                           ", expected " + std::to_string(f.w_features[k].rows()));
    e.noalias() += feats[k] * f.w_features[k];
  }
  e.rowwise() += f.w0;
  return e;
}

/// E = w0 + T_a w_audio + T_t w_text + sum_k F_k w_feature[k]
template <typename Scalar>
RowVector<Scalar> fuse(const RowVector<Scalar>& ta, const RowVector<Scalar>& tt,
                       const std::vector<RowVector<Scalar>>& feats, const FusionParams<Scalar>& f) {
  std::vector<Matrix<Scalar>> fm(feats.begin(), feats.end());
  return fuse_rows<Scalar>(ta, tt, fm, f);
}

/// y = FC2(ReLU(FC1(E))) for each row of E.
template <typename Scalar>
ColVector<Scalar> head_forward(const Matrix<Scalar>& e, const HeadParams<Scalar>& h, Matrix<Scalar>* pre_activation = nullptr) {
  Matrix<Scalar> u = e * h.fc1_w;
  u.rowwise() += h.fc1_b;
  ColVector<Scalar> y = u.cwiseMax(Scalar(0)) * h.fc2_w;
  y.array() += h.fc2_b(0);
  if (pre_activation) *pre_activation = std::move(u);
  return y;
}

template <typename Scalar>
struct ForwardCache {
  std::vector<Segment> audio_segments, text_segments;
  EncoderCache<Scalar> audio, text;
  Matrix<Scalar> ta, tt, e, u;
  std::vector<Matrix<Scalar>> feats;
};

namespace detail {

template <typename Scalar, typename Getter>
Matrix<Scalar> stack_rows(std::span<const Sample<Scalar>* const> batch, Getter get, Eigen::Index cols,
                          std::vector<Segment>& segments, const char* what) {
  Eigen::Index total = 0;
  segments.clear();
  for (const auto* s : batch) {
    const Matrix<Scalar>& m = get(*s);
    if (m.rows() == 0) throw DimensionError(std::string(what) + ": call has no valid rows");
    if (m.cols() != cols)
      throw DimensionError(std::string(what) + ": expected " + std::to_string(cols) + " columns, got " +
                           std::to_string(m.cols()));
    segments.push_back({total, m.rows()});
    total += m.rows();
  }
  Matrix<Scalar> x(total, cols);
  for (std::size_t i = 0; i < batch.size(); ++i)
    x.middleRows(segments[i].begin, segments[i].length) = get(*batch[i]);
  return x;
}

template <typename Scalar>
Matrix<Scalar> pool_segments(const Matrix<Scalar>& y, const std::vector<Segment>& segments) {
  Matrix<Scalar> out(static_cast<Eigen::Index>(segments.size()), y.cols());
  for (std::size_t i = 0; i < segments.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) =
        y.middleRows(segments[i].begin, segments[i].length).colwise().sum() / static_cast<Scalar>(segments[i].length);
  return out;
}

template <typename Scalar>
Matrix<Scalar> unpool_segments(const Matrix<Scalar>& dpooled, const std::vector<Segment>& segments, Eigen::Index rows) {
  Matrix<Scalar> dy(rows, dpooled.cols());
  for (std::size_t i = 0; i < segments.size(); ++i)
    dy.middleRows(segments[i].begin, segments[i].length).rowwise() =
        dpooled.row(static_cast<Eigen::Index>(i)) / static_cast<Scalar>(segments[i].length);
  return dy;
}

}  // namespace detail

/// Predictions for a batch of calls. Disabled inputs (per `mask`) enter the
/// fusion as zero vectors and their encoders are not run.
template <typename Scalar>
ColVector<Scalar> forward_batch(const ModelParams<Scalar>& p, const ModelConfig& cfg,
                                std::span<const Sample<Scalar>* const> batch, const FeatureMask& mask = {},
                                ForwardCache<Scalar>* cache = nullptr) {
  const auto b = static_cast<Eigen::Index>(batch.size());
  ForwardCache<Scalar> local;
  ForwardCache<Scalar>& c = cache ? *cache : local;

  if (mask.audio) {
    const auto x = detail::stack_rows<Scalar>(batch, [](const Sample<Scalar>& s) -> const Matrix<Scalar>& { return s.audio; },
                                              cfg.audio.model_dim, c.audio_segments, "audio encoder");
    const auto y = encoder_forward<Scalar>(x, c.audio_segments, p.audio_encoder, cfg.audio, cache ? &c.audio : nullptr);
    c.ta = detail::pool_segments<Scalar>(y, c.audio_segments);
  } else {
    c.ta = Matrix<Scalar>::Zero(b, cfg.audio.model_dim);
  }
  if (mask.text) {
    const auto x = detail::stack_rows<Scalar>(batch, [](const Sample<Scalar>& s) -> const Matrix<Scalar>& { return s.sentences; },
                                              cfg.text.model_dim, c.text_segments, "text encoder");
    const auto y = encoder_forward<Scalar>(x, c.text_segments, p.text_encoder, cfg.text, cache ? &c.text : nullptr);
    c.tt = detail::pool_segments<Scalar>(y, c.text_segments);
  } else {
    c.tt = Matrix<Scalar>::Zero(b, cfg.text.model_dim);
  }
  c.feats.assign(cfg.feature_dims.size(), {});
  for (std::size_t k = 0; k < cfg.feature_dims.size(); ++k) {
    c.feats[k] = Matrix<Scalar>::Zero(b, cfg.feature_dims[k]);
    if (!mask.feature(k)) continue;
    for (Eigen::Index i = 0; i < b; ++i) {
      const auto& f = batch[static_cast<std::size_t>(i)]->features;
      if (f.size() != cfg.feature_dims.size()) throw DimensionError("sample has the wrong number of text features");
      if (f[k].size() != cfg.feature_dims[k])
        throw DimensionError("feature " + std::to_string(k) + " has dim " + std::to_string(f[k].size()) +
                             ", expected " + std::to_string(cfg.feature_dims[k]));
      c.feats[k].row(i) = f[k];
    }
  }
  c.e = fuse_rows<Scalar>(c.ta, c.tt, c.feats, p.fusion);
  return head_forward<Scalar>(c.e, p.head, &c.u);
}

/// Back-propagates d(loss)/d(prediction) through the cached forward pass,
/// accumulating into `g`.
template <typename Scalar>
void backward_batch(const ColVector<Scalar>& dyhat, const ForwardCache<Scalar>& c, const ModelParams<Scalar>& p,
                    const ModelConfig& cfg, const FeatureMask& mask, ModelParams<Scalar>& g) {
  const Matrix<Scalar> r = c.u.cwiseMax(Scalar(0));
  g.head.fc2_w.noalias() += r.transpose() * dyhat;
  g.head.fc2_b(0) += dyhat.sum();
  Matrix<Scalar> du = dyhat * p.head.fc2_w.transpose();
  du.array() *= (c.u.array() > Scalar(0)).template cast<Scalar>();
  g.head.fc1_w.noalias() += c.e.transpose() * du;
  g.head.fc1_b += du.colwise().sum();
  const Matrix<Scalar> de = du * p.head.fc1_w.transpose();

  g.fusion.w0 += de.colwise().sum();
  g.fusion.w_audio.noalias() += c.ta.transpose() * de;
  g.fusion.w_text.noalias() += c.tt.transpose() * de;
  for (std::size_t k = 0; k < c.feats.size(); ++k) g.fusion.w_features[k].noalias() += c.feats[k].transpose() * de;

  if (mask.audio) {
    const Matrix<Scalar> dta = de * p.fusion.w_audio.transpose();
    const auto rows = c.audio.front().x.rows();
    encoder_backward<Scalar>(detail::unpool_segments<Scalar>(dta, c.audio_segments, rows), c.audio, c.audio_segments,
                             p.audio_encoder, g.audio_encoder, cfg.audio);
  }
  if (mask.text) {
    const Matrix<Scalar> dtt = de * p.fusion.w_text.transpose();
    const auto rows = c.text.front().x.rows();
    encoder_backward<Scalar>(detail::unpool_segments<Scalar>(dtt, c.text_segments, rows), c.text, c.text_segments,
                             p.text_encoder, g.text_encoder, cfg.text);
  }
}

/// Batch mean of squared errors.
template <typename Scalar>
Scalar loss(const ColVector<Scalar>& predicted, const ColVector<Scalar>& actual) {
  if (predicted.size() != actual.size()) throw std::invalid_argument("loss: length mismatch");
  if (predicted.size() == 0) throw std::invalid_argument("loss: empty batch");
  return (predicted - actual).squaredNorm() / static_cast<Scalar>(predicted.size());
}

template <typename Scalar>
struct LossAndGradient {
  Scalar loss;
  ModelParams<Scalar> grad;
};

/// Batch loss; its exact gradient with respect to every parameter is written
/// into `grad`, which must already have the shapes of `p`.
template <typename Scalar>
Scalar loss_and_gradient_into(const ModelParams<Scalar>& p, const ModelConfig& cfg,
                              std::span<const Sample<Scalar>* const> batch, const ColVector<Scalar>& labels,
                              const FeatureMask& mask, ModelParams<Scalar>& grad) {
  ForwardCache<Scalar> cache;
  const ColVector<Scalar> yhat = forward_batch<Scalar>(p, cfg, batch, mask, &cache);
  const Scalar value = loss<Scalar>(yhat, labels);
  grad.for_each([](const std::string&, auto& t) { t.setZero(); });
  const ColVector<Scalar> dyhat = (yhat - labels) * (Scalar(2) / static_cast<Scalar>(labels.size()));
  backward_batch<Scalar>(dyhat, cache, p, cfg, mask, grad);
  if (auto bad = grad.first_non_finite()) throw NumericalError("non-finite gradient in " + *bad);
  return value;
}

template <typename Scalar>
LossAndGradient<Scalar> loss_and_gradient(const ModelParams<Scalar>& p, const ModelConfig& cfg,
                                          std::span<const Sample<Scalar>* const> batch,
                                          const ColVector<Scalar>& labels, const FeatureMask& mask = {}) {
  LossAndGradient<Scalar> out{Scalar(0), p.zeros_like()};
  out.loss = loss_and_gradient_into<Scalar>(p, cfg, batch, labels, mask, out.grad);
  return out;
}

template <typename Scalar>
Scalar predict(const ModelParams<Scalar>& p, const ModelConfig& cfg, const Sample<Scalar>& sample,
               const FeatureMask& mask = {}) {
  const Sample<Scalar>* one[] = {&sample};
  return forward_batch<Scalar>(p, cfg, std::span<const Sample<Scalar>* const>(one), mask)(0);
}

/// Prediction from padded inputs: the encoders run over every row with
/// padding masked out, then masked average pooling. Agrees with `predict` on
/// the valid rows; used as the reference for padding invariance.
template <typename Scalar>
Scalar predict_padded(const ModelParams<Scalar>& p, const ModelConfig& cfg, const EmbeddingMatrix& audio,
                      const EmbeddingMatrix& sentences, const std::vector<TextEmbedding>& features,
                      const FeatureMask& mask = {}) {
  if (features.size() != cfg.feature_dims.size()) throw DimensionError("wrong number of text features");
  const Matrix<Scalar> ta =
      mask.audio ? Matrix<Scalar>(masked_average_pool<Scalar>(
                       mhsa_forward<Scalar>(audio.data().cast<Scalar>(), audio.mask(), p.audio_encoder, cfg.audio),
                       audio.mask()))
                 : Matrix<Scalar>(Matrix<Scalar>::Zero(1, cfg.audio.model_dim));
  const Matrix<Scalar> tt =
      mask.text ? Matrix<Scalar>(masked_average_pool<Scalar>(
                      mhsa_forward<Scalar>(sentences.data().cast<Scalar>(), sentences.mask(), p.text_encoder, cfg.text),
                      sentences.mask()))
                : Matrix<Scalar>(Matrix<Scalar>::Zero(1, cfg.text.model_dim));
  std::vector<Matrix<Scalar>> feats;
  for (std::size_t k = 0; k < features.size(); ++k) {
    Matrix<Scalar> f = features[k].data.cast<Scalar>().transpose();
    if (!mask.feature(k)) f.setZero();
    feats.push_back(std::move(f));
  }
  return head_forward<Scalar>(fuse_rows<Scalar>(ta, tt, feats, p.fusion), p.head)(0);
}

/// Converts padded embedding matrices and text embeddings into a Sample.
template <typename Scalar>
Sample<Scalar> make_sample(const EmbeddingMatrix& audio, const EmbeddingMatrix& sentences,
                           const std::vector<TextEmbedding>& features) {
  Sample<Scalar> s{audio.valid_rows<Scalar>(), sentences.valid_rows<Scalar>(), {}};
  for (const auto& f : features) s.features.push_back(f.data.cast<Scalar>().transpose());
  return s;
}

}  // namespace ecc::model
