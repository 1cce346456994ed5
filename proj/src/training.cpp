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

#include "ecc/training.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include <fmt/format.h>

#include "ecc/errors.hpp"

namespace ecc {

namespace {

std::uint64_t next_u64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

template <typename Scalar>
model::ColVector<Scalar> gather_labels(const Dataset<Scalar>& data, std::span<const std::size_t> idx) {
  model::ColVector<Scalar> y(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) y(static_cast<Eigen::Index>(i)) = data.labels[idx[i]];
  return y;
}

template <typename Scalar>
Dataset<Scalar> slice(const Dataset<Scalar>& data, std::size_t begin, std::size_t end) {
  Dataset<Scalar> out;
  out.samples.assign(data.samples.begin() + static_cast<std::ptrdiff_t>(begin),
                     data.samples.begin() + static_cast<std::ptrdiff_t>(end));
  out.labels.assign(data.labels.begin() + static_cast<std::ptrdiff_t>(begin),
                    data.labels.begin() + static_cast<std::ptrdiff_t>(end));
  return out;
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_sizes.empty() || learning_rates.empty()) throw std::invalid_argument("train: empty grid");
  for (int b : batch_sizes)
    if (b < 1) throw std::invalid_argument("train: batch sizes must be positive");
  for (double lr : learning_rates)
    if (!(lr > 0.0) || !std::isfinite(lr)) throw std::invalid_argument("train: learning rates must be positive");
  if (epochs < 1) throw std::invalid_argument("train: epochs must be positive");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0))
    throw std::invalid_argument("train: validation_fraction must be in (0, 1)");
}

std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t& state) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(next_u64(state) % i);
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}

template <typename Scalar>
double dataset_mse(const model::ModelParams<Scalar>& params, const model::ModelConfig& cfg,
                   const Dataset<Scalar>& data, const model::FeatureMask& mask, std::size_t batch_size) {
  if (data.size() == 0) throw DataError("mse over an empty dataset");
  batch_size = std::max<std::size_t>(batch_size, 1);
  double sse = 0.0;
  std::vector<const model::Sample<Scalar>*> batch;
  for (std::size_t begin = 0; begin < data.size(); begin += batch_size) {
    const std::size_t end = std::min(data.size(), begin + batch_size);
    batch.clear();
    for (std::size_t i = begin; i < end; ++i) batch.push_back(&data.samples[i]);
    const auto yhat = model::forward_batch<Scalar>(params, cfg, batch, mask);
    for (std::size_t i = begin; i < end; ++i) {
      const double e = static_cast<double>(yhat(static_cast<Eigen::Index>(i - begin))) - static_cast<double>(data.labels[i]);
      sse += e * e;
    }
  }
  return sse / static_cast<double>(data.size());
}

template <typename Scalar>
std::vector<HistoryRow> fit(model::ModelParams<Scalar>& params, const model::ModelConfig& cfg,
                            const Dataset<Scalar>& train, const Dataset<Scalar>* validation, int batch_size,
                            double learning_rate, int epochs, std::uint64_t seed, const model::AdamConfig& adam,
                            const model::FeatureMask& mask, const EpochCallback<Scalar>& on_epoch) {
  if (train.size() == 0) throw DataError("train: empty training set");
  if (train.labels.size() != train.samples.size()) throw DataError("train: label count differs from sample count");
  auto state = model::AdamState<Scalar>::zeros_like(params);
  auto grad = params.zeros_like();
  std::uint64_t rng = seed;
  std::vector<HistoryRow> history;
  std::vector<const model::Sample<Scalar>*> batch;
  const auto bs = static_cast<std::size_t>(batch_size);
  for (int epoch = 1; epoch <= epochs; ++epoch) {
    const auto order = shuffled_indices(train.size(), rng);
    double weighted = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += bs) {
      const std::span<const std::size_t> idx(order.data() + begin, std::min(bs, order.size() - begin));
      batch.clear();
      for (std::size_t i : idx) batch.push_back(&train.samples[i]);
      const Scalar loss =
          model::loss_and_gradient_into<Scalar>(params, cfg, batch, gather_labels(train, idx), mask, grad);
      if (!std::isfinite(static_cast<double>(loss)))
        throw NumericalError(fmt::format("non-finite training loss at epoch {}", epoch));
      model::adam_step<Scalar>(params, grad, state, learning_rate, adam);
      weighted += static_cast<double>(loss) * static_cast<double>(idx.size());
    }
    history.push_back({epoch, "train", weighted / static_cast<double>(train.size())});
    if (validation && validation->size() > 0) {
      const double v = dataset_mse<Scalar>(params, cfg, *validation, mask, bs);
      if (!std::isfinite(v)) throw NumericalError(fmt::format("non-finite validation loss at epoch {}", epoch));
      history.push_back({epoch, "validation", v});
    }
    if (on_epoch && on_epoch(epoch, params)) break;
  }
  if (auto bad = params.first_non_finite()) throw NumericalError("non-finite parameter " + *bad);
  return history;
}

template <typename Scalar>
TrainResult<Scalar> train_with_grid(const model::ModelConfig& cfg, const Dataset<Scalar>& train,
                                    const TrainConfig& tc, const model::FeatureMask& mask) {
  tc.validate();
  cfg.validate();
  if (train.size() == 0) throw DataError("train: empty training set");
  TrainResult<Scalar> result;
  const std::size_t n = train.size();
  const std::size_t fit_n = std::min(n - 1, static_cast<std::size_t>(std::floor((1.0 - tc.validation_fraction) * static_cast<double>(n) + 1e-9)));

  int best_b = tc.batch_sizes.front();
  double best_lr = tc.learning_rates.front();
  if (n >= 2) {
    const auto fit_part = slice(train, 0, std::max<std::size_t>(fit_n, 1));
    const auto val_part = slice(train, std::max<std::size_t>(fit_n, 1), n);
    double best = std::numeric_limits<double>::infinity();
    bool any = false;
    for (int b : tc.batch_sizes) {
      for (double lr : tc.learning_rates) {
        GridCell cell{b, lr, std::numeric_limits<double>::quiet_NaN(), {}};
        try {
          auto params = model::init_params<Scalar>(cfg, tc.seed);
          fit<Scalar>(params, cfg, fit_part, nullptr, b, lr, tc.epochs, tc.seed, tc.adam, mask);
          cell.validation_mse = dataset_mse<Scalar>(params, cfg, val_part, mask, static_cast<std::size_t>(b));
          if (!std::isfinite(cell.validation_mse)) throw NumericalError("non-finite validation loss");
          if (cell.validation_mse < best) {
            best = cell.validation_mse;
            best_b = b;
            best_lr = lr;
          }
          any = true;
        } catch (const NumericalError& e) {
          cell.error = e.what();
        }
        result.grid.push_back(cell);
      }
    }
    if (!any) throw NumericalError("train: every grid cell diverged");
  }
  result.batch_size = best_b;
  result.learning_rate = best_lr;
  result.params = model::init_params<Scalar>(cfg, tc.seed);
  result.history = fit<Scalar>(result.params, cfg, train, nullptr, best_b, best_lr, tc.epochs, tc.seed, tc.adam, mask);
  return result;
}

void write_history_csv(const std::vector<HistoryRow>& history, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << "epoch,split,loss\n";
  for (const auto& h : history) out << fmt::format("{},{},{:.17g}\n", h.epoch, h.split, h.loss);
}

#define ECC_INSTANTIATE(S)                                                                                     \
  template double dataset_mse<S>(const model::ModelParams<S>&, const model::ModelConfig&, const Dataset<S>&,  \
                                 const model::FeatureMask&, std::size_t);                                     \
  template std::vector<HistoryRow> fit<S>(model::ModelParams<S>&, const model::ModelConfig&, const Dataset<S>&, \
                                          const Dataset<S>*, int, double, int, std::uint64_t,                 \
                                          const model::AdamConfig&, const model::FeatureMask&,                \
                                          const EpochCallback<S>&);                                           \
  template TrainResult<S> train_with_grid<S>(const model::ModelConfig&, const Dataset<S>&, const TrainConfig&, \
                                             const model::FeatureMask&);
ECC_INSTANTIATE(float)
ECC_INSTANTIATE(double)
#undef ECC_INSTANTIATE

}  // namespace ecc
