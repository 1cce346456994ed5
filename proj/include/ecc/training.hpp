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
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ecc/model/adam.hpp"
#include "ecc/model/fusion_model.hpp"

namespace ecc {

inline const std::vector<int> kDefaultBatchSizes{2, 4, 8, 16};
inline const std::vector<double> kDefaultLearningRates{1e-3, 1e-5, 1e-6, 1e-7};

struct TrainConfig {
  std::vector<int> batch_sizes = kDefaultBatchSizes;
  std::vector<double> learning_rates = kDefaultLearningRates;
  int epochs = 50;
  std::uint64_t seed = 42;
  int target_tau = 3;
  double validation_fraction = 0.1;
  model::AdamConfig adam;

  void validate() const;
};

struct HistoryRow {
  int epoch = 0;
  std::string split;  // "train" or "validation"
  double loss = 0.0;

  friend bool operator==(const HistoryRow&, const HistoryRow&) = default;
};

struct GridCell {
  int batch_size = 0;
  double learning_rate = 0.0;
  double validation_mse = 0.0;  // NaN when the cell diverged or was skipped
  std::string error;            // non-empty when the cell was aborted
};

template <typename Scalar>
struct TrainResult {
  model::ModelParams<Scalar> params;
  std::vector<HistoryRow> history;  // final retraining run
  int batch_size = 0;
  double learning_rate = 0.0;
  std::vector<GridCell> grid;
};

/// Training examples in date order.
template <typename Scalar>
struct Dataset {
  std::vector<model::Sample<Scalar>> samples;
  std::vector<Scalar> labels;

  std::size_t size() const { return samples.size(); }
};

/// Deterministic Fisher-Yates permutation of [0, n).
std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t& state);

/// MSE of the model over `data`, evaluated in batches of `batch_size`.
template <typename Scalar>
double dataset_mse(const model::ModelParams<Scalar>& params, const model::ModelConfig& cfg,
                   const Dataset<Scalar>& data, const model::FeatureMask& mask = {}, std::size_t batch_size = 16);

/// Called after every epoch; returning true ends training early.
template <typename Scalar>
using EpochCallback = std::function<bool(int epoch, const model::ModelParams<Scalar>& params)>;

/// Mini-batch Adam for `epochs` epochs from `params`. Per epoch, records the
/// size-weighted mean batch loss as "train" and, when `validation` is
/// non-empty, its MSE as "validation". Throws NumericalError on a non-finite
/// loss or gradient.
template <typename Scalar>
std::vector<HistoryRow> fit(model::ModelParams<Scalar>& params, const model::ModelConfig& cfg,
                            const Dataset<Scalar>& train, const Dataset<Scalar>* validation, int batch_size,
                            double learning_rate, int epochs, std::uint64_t seed, const model::AdamConfig& adam = {},
                            const model::FeatureMask& mask = {}, const EpochCallback<Scalar>& on_epoch = {});

/// Grid search over batch size x learning rate. Each cell is fitted on the
/// earliest (1 - validation_fraction) of `train` and scored on the rest; the
/// best cell is then retrained on all of `train`. Cells that diverge are
/// recorded and skipped. With fewer than two examples there is nothing to
/// validate on and the first cell is used.
template <typename Scalar>
TrainResult<Scalar> train_with_grid(const model::ModelConfig& cfg, const Dataset<Scalar>& train,
                                    const TrainConfig& tc, const model::FeatureMask& mask = {});

void write_history_csv(const std::vector<HistoryRow>& history, const std::filesystem::path& path);

}  // namespace ecc
