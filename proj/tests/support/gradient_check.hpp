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

#include "ecc/model/fusion_model.hpp"
#include "support/oracles.hpp"

namespace ecc::testing {

struct GradientReport {
  double worst_relative_error = 0.0;
  std::string worst_entry;
  std::size_t entries = 0;
};

/// Compares the analytic gradient with central differences on every scalar
/// of every parameter tensor. Relative error is |a - n| / max(|a|, |n|, floor).
inline GradientReport check_gradients(model::ModelParams<double> params, const model::ModelConfig& cfg,
                                      const std::vector<model::Sample<double>>& samples,
                                      const model::ColVector<double>& labels, double h = 1e-5,
                                      double floor = 1e-8, const model::FeatureMask& mask = {}) {
  std::vector<const model::Sample<double>*> batch;
  for (const auto& s : samples) batch.push_back(&s);
  const std::span<const model::Sample<double>* const> view(batch);
  const auto analytic = model::loss_and_gradient<double>(params, cfg, view, labels, mask).grad;

  GradientReport report;
  auto f = [&] { return model::loss<double>(model::forward_batch<double>(params, cfg, view, mask), labels); };
  model::ModelParams<double>::zip(
      [&](const std::string& name, auto& p, const auto& g) {
        for (Eigen::Index i = 0; i < p.size(); ++i) {
          const double numeric = oracle::central_difference(f, p.data()[i], h);
          const double a = g.data()[i];
          const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
          ++report.entries;
          if (rel > report.worst_relative_error) {
            report.worst_relative_error = rel;
            report.worst_entry = name + "[" + std::to_string(i) + "]";
          }
        }
      },
      params, analytic);
  return report;
}

/// model_dim 4, 2 heads, 1 block, two whole-text features of width 4.
inline model::ModelConfig tiny_config() {
  model::ModelConfig cfg;
  cfg.audio = {1, 2, 4, 0};
  cfg.text = {1, 2, 4, 0};
  cfg.feature_dims = {4, 4};
  cfg.fusion_dim = 4;
  cfg.head_hidden = 4;
  return cfg;
}

inline model::Sample<double> tiny_sample(std::mt19937_64& rng, const model::ModelConfig& cfg, Eigen::Index rows) {
  std::normal_distribution<double> n(0.0, 1.0);
  auto m = [&](Eigen::Index r, Eigen::Index c) {
    model::Matrix<double> x(r, c);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = n(rng);
    return x;
  };
  model::Sample<double> s{m(rows, cfg.audio.model_dim), m(rows, cfg.text.model_dim), {}};
  for (int d : cfg.feature_dims) s.features.push_back(m(1, d));
  return s;
}

}  // namespace ecc::testing
