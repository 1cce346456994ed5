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
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "ecc/errors.hpp"
#include "ecc/model/params.hpp"

namespace ecc::model {

inline constexpr double kLayerNormEps = 1e-5;

/// Row-softmax of QK^T / sqrt(d_k). Masked keys get weight exactly zero;
/// rows of masked queries are all zero. An empty mask means all rows valid.
template <typename Scalar>
Matrix<Scalar> attention_weights(const Eigen::Ref<const Matrix<Scalar>>& q, const Eigen::Ref<const Matrix<Scalar>>& k,
                                 const std::vector<bool>& mask = {}) {
  if (q.cols() != k.cols() || q.rows() != k.rows())
    throw DimensionError("attention: Q and K shapes differ");
  const auto n = q.rows();
  if (!mask.empty() && static_cast<Eigen::Index>(mask.size()) != n)
    throw DimensionError("attention: mask length differs from rows");
  auto valid = [&](Eigen::Index i) { return mask.empty() || mask[static_cast<std::size_t>(i)]; };
  bool any = false;
  for (Eigen::Index i = 0; i < n && !any; ++i) any = valid(i);
  if (!any) throw DimensionError("attention: every row is masked");

  const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(q.cols()));
  Matrix<Scalar> scores = (q * k.transpose()) * scale;
  Matrix<Scalar> p = Matrix<Scalar>::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!valid(i)) continue;
    Scalar mx = -std::numeric_limits<Scalar>::infinity();
    for (Eigen::Index j = 0; j < n; ++j)
      if (valid(j)) mx = std::max(mx, scores(i, j));
    Scalar sum = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!valid(j)) continue;
      p(i, j) = std::exp(scores(i, j) - mx);
      sum += p(i, j);
    }
    p.row(i) /= sum;
  }
  return p;
}

/// softmax(QK^T / sqrt(d_k)) V with key masking; masked query rows are zero.
template <typename Scalar>
Matrix<Scalar> attention(const Eigen::Ref<const Matrix<Scalar>>& q, const Eigen::Ref<const Matrix<Scalar>>& k,
                         const Eigen::Ref<const Matrix<Scalar>>& v, const std::vector<bool>& mask = {}) {
  if (v.rows() != k.rows()) throw DimensionError("attention: V rows differ from K rows");
  return attention_weights<Scalar>(q, k, mask) * v;
}

/// Gradient of row-softmax given its output P and upstream dP.
template <typename Scalar>
Matrix<Scalar> softmax_backward(const Matrix<Scalar>& p, const Matrix<Scalar>& dp) {
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> dots = (p.array() * dp.array()).rowwise().sum();
  return (p.array() * (dp.colwise() - dots).array()).matrix();
}

template <typename Scalar>
struct LayerNormCache {
  Matrix<Scalar> xhat;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> inv_std;
};

/// Row-wise layer normalisation with population variance.
template <typename Scalar>
Matrix<Scalar> layer_norm(const Matrix<Scalar>& x, const RowVector<Scalar>& gamma, const RowVector<Scalar>& beta,
                          LayerNormCache<Scalar>* cache = nullptr) {
  const auto d = static_cast<Scalar>(x.cols());
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> mean = x.rowwise().sum() / d;
  Matrix<Scalar> centered = x.colwise() - mean;
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> var = centered.array().square().rowwise().sum() / d;
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> inv_std =
      (var.array() + static_cast<Scalar>(kLayerNormEps)).rsqrt();
  Matrix<Scalar> xhat = centered.array().colwise() * inv_std.array();
  Matrix<Scalar> y = (xhat.array().rowwise() * gamma.array()).rowwise() + beta.array();
  if (cache) {
    cache->xhat = std::move(xhat);
    cache->inv_std = inv_std;
  }
  return y;
}

/// Returns dx and accumulates dgamma/dbeta.
template <typename Scalar>
Matrix<Scalar> layer_norm_backward(const Matrix<Scalar>& dy, const LayerNormCache<Scalar>& cache,
                                   const RowVector<Scalar>& gamma, RowVector<Scalar>& dgamma,
                                   RowVector<Scalar>& dbeta) {
  dgamma += (dy.array() * cache.xhat.array()).colwise().sum().matrix();
  dbeta += dy.colwise().sum();
  const Matrix<Scalar> dxhat = dy.array().rowwise() * gamma.array();
  const auto d = static_cast<Scalar>(dy.cols());
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> mean_dxhat = dxhat.rowwise().sum() / d;
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> mean_dxhat_xhat =
      (dxhat.array() * cache.xhat.array()).rowwise().sum() / d;
  Matrix<Scalar> dx = (dxhat.colwise() - mean_dxhat) - (cache.xhat.array().colwise() * mean_dxhat_xhat.array()).matrix();
  return dx.array().colwise() * cache.inv_std.array();
}

}  // namespace ecc::model
