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

#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ecc/embedding.hpp"
#include "ecc/model/fusion_model.hpp"
#include "ecc/training.hpp"

namespace ecc::testing {

/// Calls whose label is an exact linear function of the mean audio row, the
/// mean sentence row and the two whole-text vectors, all from the stub.
struct LinearCorpus {
  Dataset<float> data;
  Eigen::MatrixXd design;  // one row per call: [audio | sentences | T_s | T_f | 1]
  Eigen::VectorXd labels;
};

inline LinearCorpus linear_corpus(std::size_t calls, int sentences_per_call, std::uint64_t seed,
                                  double offset = -1.0) {
  const StubEmbeddingProvider stub(seed);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int width = kAudioDim + kSentenceDim + 2 * kTextDim + 1;
  Eigen::VectorXd beta(width);
  for (int i = 0; i < width; ++i) beta(i) = normal(rng);
  beta(width - 1) = offset;
  beta.head(width - 1) /= std::sqrt(4.0);  // four unit-norm blocks

  LinearCorpus out;
  out.design.resize(static_cast<Eigen::Index>(calls), width);
  out.labels.resize(static_cast<Eigen::Index>(calls));
  for (std::size_t c = 0; c < calls; ++c) {
    std::vector<std::string> clips, texts;
    for (int s = 0; s < sentences_per_call; ++s) {
      clips.push_back("L" + std::to_string(c) + "#" + std::to_string(s));
      texts.push_back("Call " + std::to_string(c) + " sentence " + std::to_string(s) + ".");
    }
    const auto audio = pad_to_capacity(stub.embed_audio_frames(clips), sentences_per_call + 2).matrix;
    const auto sent = pad_to_capacity(stub.embed_sentences(texts), sentences_per_call + 2).matrix;
    const std::vector<TextEmbedding> feats{stub.embed_text("summary " + std::to_string(c)),
                                           stub.embed_text("focus " + std::to_string(c))};
    Eigen::RowVectorXd x(width);
    x << audio.valid_rows<double>().colwise().mean(), sent.valid_rows<double>().colwise().mean(),
        feats[0].data.cast<double>().transpose(), feats[1].data.cast<double>().transpose(), 1.0;
    const auto r = static_cast<Eigen::Index>(c);
    out.design.row(r) = x;
    out.labels(r) = x.dot(beta.transpose());
    out.data.samples.push_back(model::make_sample<float>(audio, sent, feats));
    out.data.labels.push_back(static_cast<float>(out.labels(r)));
  }
  return out;
}

/// Least-squares oracle: max |X w - y| of the minimum-norm solution.
inline double least_squares_residual(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  const Eigen::VectorXd w = x.completeOrthogonalDecomposition().solve(y);
  return (x * w - y).cwiseAbs().maxCoeff();
}

/// Reduced encoders at the stub's native widths.
inline model::ModelConfig learnability_model() {
  model::ModelConfig cfg;
  cfg.audio = {1, 8, kAudioDim, 32};
  cfg.text = {1, 8, kSentenceDim, 32};
  cfg.feature_dims = {kTextDim, kTextDim};
  cfg.fusion_dim = 32;
  cfg.head_hidden = 16;
  return cfg;
}

}  // namespace ecc::testing
