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

#include <random>

#include <gtest/gtest.h>

#include "ecc/errors.hpp"
#include "ecc/model/attention.hpp"
#include "ecc/model/encoder.hpp"
#include "support/oracles.hpp"

namespace ecc::model {
namespace {

Matrix<double> random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix<double> m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

std::vector<bool> random_mask(std::mt19937_64& rng, Eigen::Index n) {
  std::vector<bool> m(static_cast<std::size_t>(n));
  for (auto&& b : m) b = (rng() % 3) != 0;
  m[rng() % m.size()] = true;
  return m;
}

TEST(Attention, RowsSumToOneAndMaskedKeysGetNothing) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const auto n = static_cast<Eigen::Index>(1 + rng() % 12);
    const auto q = random_matrix(rng, n, 4, 3.0), k = random_matrix(rng, n, 4, 3.0);
    const auto mask = random_mask(rng, n);
    const auto p = attention_weights<double>(q, k, mask);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!mask[static_cast<std::size_t>(i)]) continue;
      EXPECT_NEAR(p.row(i).sum(), 1.0, 1e-6);
      for (Eigen::Index j = 0; j < n; ++j) {
        if (!mask[static_cast<std::size_t>(j)]) {
          EXPECT_LT(std::abs(p(i, j)), 1e-12);
        }
      }
    }
  }
}

TEST(Attention, MatchesNaiveLoops) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 30; ++trial) {
    const auto n = static_cast<Eigen::Index>(1 + rng() % 8);
    const auto q = random_matrix(rng, n, 3), k = random_matrix(rng, n, 3), v = random_matrix(rng, n, 5);
    const auto mask = random_mask(rng, n);
    const auto got = attention<double>(q, k, v, mask);
    const auto want = oracle::attention(q, k, v, mask);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (mask[static_cast<std::size_t>(i)]) {
        EXPECT_LT((got.row(i) - want.row(i)).cwiseAbs().maxCoeff(), 1e-10);
      }
    }
  }
}

TEST(Attention, FourByFourTwoHeadsMatchesNaive) {
  std::mt19937_64 rng(3);
  const MhsaConfig cfg{1, 2, 4, 0};
  const auto x = random_matrix(rng, 4, 4);
  const auto wq = random_matrix(rng, 4, 4), wk = random_matrix(rng, 4, 4), wv = random_matrix(rng, 4, 4);
  const Matrix<double> q = x * wq, k = x * wk, v = x * wv;
  for (int h = 0; h < 2; ++h) {
    const auto got = attention<double>(q.middleCols(2 * h, 2), k.middleCols(2 * h, 2), v.middleCols(2 * h, 2));
    const auto want = oracle::attention(q.middleCols(2 * h, 2), k.middleCols(2 * h, 2), v.middleCols(2 * h, 2), {});
    EXPECT_LT((got - want).cwiseAbs().maxCoeff(), 1e-10);
  }
  EXPECT_EQ(cfg.head_dim(), 2);
}

TEST(Attention, EqualScoresGiveUniformWeights) {
  const Matrix<double> q = Matrix<double>::Ones(4, 2);
  const std::vector<bool> mask{true, false, true, true};
  const auto p = attention_weights<double>(q, q, mask);
  EXPECT_NEAR(p(0, 0), 1.0 / 3, 1e-15);
  EXPECT_NEAR(p(2, 3), 1.0 / 3, 1e-15);
  EXPECT_EQ(p(0, 1), 0.0);
}

TEST(Attention, SingleKeyReturnsItsValue) {
  std::mt19937_64 rng(4);
  const auto q = random_matrix(rng, 3, 2), k = random_matrix(rng, 3, 2), v = random_matrix(rng, 3, 2);
  const auto out = attention<double>(q, k, v, {false, true, false});
  EXPECT_EQ(out.row(1), v.row(1));
}

TEST(Attention, Errors) {
  const Matrix<double> a = Matrix<double>::Ones(3, 2), b = Matrix<double>::Ones(3, 3);
  EXPECT_THROW(attention_weights<double>(a, a, {false, false, false}), DimensionError);
  EXPECT_THROW(attention_weights<double>(a, b), DimensionError);
  EXPECT_THROW(attention_weights<double>(a, a, {true}), DimensionError);
}

TEST(Encoder, PaddingLeavesValidRowsUnchanged) {
  std::mt19937_64 rng(5);
  const MhsaConfig cfg{2, 2, 8, 16};
  const auto params = init_params<double>(ModelConfig{cfg, cfg, {4}, 4, 4}, 9);
  for (int trial = 0; trial < 20; ++trial) {
    const auto n = static_cast<Eigen::Index>(1 + rng() % 6);
    const auto x = random_matrix(rng, n, 8);
    const auto base = mhsa_forward<double>(x, std::vector<bool>(static_cast<std::size_t>(n), true),
                                           params.audio_encoder, cfg);
    const auto extra = static_cast<Eigen::Index>(1 + rng() % 5);
    Matrix<double> padded = Matrix<double>::Zero(n + extra, 8);
    padded.topRows(n) = x;
    std::vector<bool> mask(static_cast<std::size_t>(n + extra), false);
    std::fill(mask.begin(), mask.begin() + n, true);
    const auto out = mhsa_forward<double>(padded, mask, params.audio_encoder, cfg);
    EXPECT_LT((out.topRows(n) - base).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_EQ(out.bottomRows(extra).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(out.rows(), padded.rows());
    // The segmented training path gives the same rows.
    const auto seg = encoder_forward<double>(x, {{0, n}}, params.audio_encoder, cfg);
    EXPECT_LT((seg - base).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Encoder, ZeroWeightsReduceToLayerNormChain) {
  const MhsaConfig cfg{1, 2, 4, 0};
  auto params = zero_params<double>(ModelConfig{cfg, cfg, {1}, 1, 1});
  auto& b = params.audio_encoder[0];
  b.ln1_gamma.setOnes();
  b.ln2_gamma.setOnes();
  Matrix<double> x(2, 4);
  x << 1, 2, 3, 4, -1, 0, 0, 5;
  const auto y = mhsa_forward<double>(x, {true, true}, params.audio_encoder, cfg);
  const auto once = layer_norm<double>(x, b.ln1_gamma, b.ln1_beta);
  const auto twice = layer_norm<double>(once, b.ln2_gamma, b.ln2_beta);
  EXPECT_LT((y - twice).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_TRUE(y.allFinite());
  EXPECT_THROW(mhsa_forward<double>(Matrix<double>::Ones(2, 3), {true, true}, params.audio_encoder, cfg),
               DimensionError);
}

}  // namespace
}  // namespace ecc::model
