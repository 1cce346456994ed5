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

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ecc/corpus.hpp"

namespace ecc {

struct DailyReturn {
  Date trading_date;
  double r = 0.0;
};

/// Simple daily returns r_i = (p_i - p_{i-1}) / p_{i-1}, dated at day i.
struct ReturnSeries {
  std::string ticker;
  std::vector<DailyReturn> returns;
};

struct VolatilityLabel {
  std::string call_id;
  int tau = 0;
  double value = 0.0;  // natural-log scale

  friend bool operator==(const VolatilityLabel&, const VolatilityLabel&) = default;
};

/// A (call, tau) pair that could not be labelled, with the reason.
struct LabelIssue {
  std::string call_id;
  int tau = 0;
  std::string reason;
};

struct LabelSet {
  std::vector<VolatilityLabel> labels;
  std::vector<LabelIssue> issues;
};

inline constexpr int kDefaultTaus[] = {3, 7, 15, 30};

ReturnSeries compute_returns(const PriceSeries& series);

/// Log-volatility of the tau+1 returns ending at `window` (oldest first):
///   ln( sqrt( sum_i (r_i - mean)^2 / tau ) ).
/// Throws ZeroVolatilityError when every return in the window is identical.
double log_volatility(std::span<const double> window);

/// Log-volatility over the returns dated d, d-1, ..., d-tau where d is
/// `anchor_date`, which must be a trading date of `returns`.
double compute_volatility(const ReturnSeries& returns, const Date& anchor_date, int tau);

/// First trading date strictly after `call_date`; throws InsufficientHistoryError
/// when the series ends on or before it.
Date anchor_trading_date(const PriceSeries& series, const Date& call_date);

/// One label per (call, tau). Calls whose ticker has no price series raise
/// DataError; windows that cannot be evaluated are collected in `issues`.
LabelSet build_labels(const std::vector<EccCall>& calls, const PriceTable& prices,
                      std::span<const int> taus);

double mse(std::span<const double> predicted, std::span<const double> actual);

void write_labels_csv(const std::filesystem::path& path, const std::vector<VolatilityLabel>& labels);
std::vector<VolatilityLabel> read_labels_csv(const std::filesystem::path& path);

}  // namespace ecc
