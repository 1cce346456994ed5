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

#include <array>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ecc/embedding.hpp"
#include "ecc/training.hpp"
#include "ecc/volatility.hpp"

namespace ecc {

inline constexpr std::array<int, 4> kResultTaus{3, 7, 15, 30};

/// Which inputs reach the fusion layer in an ablation run. The text parts are
/// the overall-summary embedding (E_os), the chunk-summaries embedding (E_cs)
/// and the focus embedding (E_fo), in that feature order.
struct AblationConfig {
  std::string name;
  bool use_audio = true;
  bool use_text = true;
  bool use_eos = false;
  bool use_ecs = false;
  bool use_efo = false;

  void validate() const;
  model::FeatureMask mask() const;
};

/// The seven ablation rows in report order.
const std::vector<AblationConfig>& ablation_presets();

struct ResultRow {
  std::string config;
  double mse_mean = 0.0;
  std::array<double, 4> mse{};  // tau = 3, 7, 15, 30

  /// Row whose mean is computed from the four per-tau values.
  static ResultRow from_taus(std::string config, const std::array<double, 4>& mse);
  friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

struct ResultTable {
  std::vector<ResultRow> rows;
  friend bool operator==(const ResultTable&, const ResultTable&) = default;
};

/// `config,mse_mean,mse_3,mse_7,mse_15,mse_30`, values printed to round-trip.
std::string results_to_csv(const ResultTable& table);
/// Inverse of results_to_csv. Rejects rows whose mean disagrees with the
/// per-tau columns by more than 1e-9.
ResultTable results_from_csv(std::string_view csv);
/// Fixed-width table, three decimals.
std::string render_results_text(const ResultTable& table);

/// Model inputs of one call as stored on disk.
struct CallFeatures {
  EmbeddingMatrix audio;
  EmbeddingMatrix sentences;
  std::vector<TextEmbedding> text;
};

using LabelIndex = std::map<std::pair<std::string, int>, double>;
LabelIndex index_labels(const std::vector<VolatilityLabel>& labels);

/// Examples for `tau` in the order of `call_ids`. Missing features or labels
/// are a DataError.
template <typename Scalar>
Dataset<Scalar> assemble_dataset(const std::vector<std::string>& call_ids,
                                 const std::map<std::string, CallFeatures>& features, const LabelIndex& labels,
                                 int tau);

/// Per-tau test MSE of one model per tau, plus their mean.
template <typename Scalar>
ResultRow evaluate(const std::string& name, const model::ModelConfig& cfg,
                   const std::map<int, model::ModelParams<Scalar>>& models,
                   const std::map<int, Dataset<Scalar>>& test, const model::FeatureMask& mask = {});

struct AblationOutcome {
  ResultTable table;
  std::vector<std::string> failures;  // "<config>: <message>"
};

/// Trains and evaluates one model per (config, tau). `cfg.feature_dims` must
/// hold the three ablation text features. A failing config is recorded and
/// left out of the table.
template <typename Scalar>
AblationOutcome run_ablation(const model::ModelConfig& cfg, const std::map<int, Dataset<Scalar>>& train,
                             const std::map<int, Dataset<Scalar>>& test, const std::vector<AblationConfig>& configs,
                             const TrainConfig& tc);

}  // namespace ecc
