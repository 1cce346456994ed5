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

#include "ecc/volatility.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "ecc/errors.hpp"

namespace ecc {

ReturnSeries compute_returns(const PriceSeries& series) {
  const auto& obs = series.observations;
  if (obs.size() < 2)
    throw InsufficientHistoryError("compute_returns: ticker " + series.ticker +
                                   " needs at least 2 observations");
  ReturnSeries out;
  out.ticker = series.ticker;
  out.returns.reserve(obs.size() - 1);
  for (std::size_t i = 1; i < obs.size(); ++i) {
    const double prev = obs[i - 1].adj_close;
    out.returns.push_back({obs[i].trading_date, (obs[i].adj_close - prev) / prev});
  }
  return out;
}

double log_volatility(std::span<const double> window) {
  if (window.size() < 2) throw InsufficientHistoryError("log_volatility: window needs tau >= 1");
  const double tau = static_cast<double>(window.size() - 1);
  const double mean = std::accumulate(window.begin(), window.end(), 0.0) /
                      static_cast<double>(window.size());
  if (std::all_of(window.begin(), window.end(), [&](double r) { return r == window.front(); }))
    throw ZeroVolatilityError("log_volatility: all returns in the window are identical");
  double ss = 0.0;
  for (double r : window) ss += (r - mean) * (r - mean);
  // ln(sqrt(x)) = 0.5 ln(x)
  return 0.5 * std::log(ss / tau);
}

double compute_volatility(const ReturnSeries& returns, const Date& anchor_date, int tau) {
  if (tau < 1) throw std::invalid_argument("compute_volatility: tau must be >= 1");
  const auto& rs = returns.returns;
  auto it = std::lower_bound(rs.begin(), rs.end(), anchor_date, [](const DailyReturn& r, const Date& d) {
    return std::chrono::sys_days(r.trading_date) < std::chrono::sys_days(d);
  });
  if (it == rs.end() || it->trading_date != anchor_date)
    throw InsufficientHistoryError("compute_volatility: no return dated " + format_date(anchor_date) +
                                   " for " + returns.ticker);
  const auto end = static_cast<std::size_t>(it - rs.begin());
  if (end < static_cast<std::size_t>(tau))
    throw InsufficientHistoryError("compute_volatility: " + returns.ticker + " has " +
                                   std::to_string(end + 1) + " returns up to " +
                                   format_date(anchor_date) + ", tau=" + std::to_string(tau) +
                                   " needs " + std::to_string(tau + 1));
  std::vector<double> window;
  window.reserve(static_cast<std::size_t>(tau) + 1);
  for (std::size_t i = end - static_cast<std::size_t>(tau); i <= end; ++i) window.push_back(rs[i].r);
  return log_volatility(window);
}

Date anchor_trading_date(const PriceSeries& series, const Date& call_date) {
  const auto& obs = series.observations;
  auto it = std::upper_bound(obs.begin(), obs.end(), call_date, [](const Date& d, const PriceObservation& o) {
    return std::chrono::sys_days(d) < std::chrono::sys_days(o.trading_date);
  });
  if (it == obs.end())
    throw InsufficientHistoryError("no trading date after " + format_date(call_date) + " for " +
                                   series.ticker);
  return it->trading_date;
}

LabelSet build_labels(const std::vector<EccCall>& calls, const PriceTable& prices,
                      std::span<const int> taus) {
  LabelSet out;
  std::map<std::string, ReturnSeries> returns_cache;
  for (const auto& call : calls) {
    auto pit = prices.find(call.ticker);
    if (pit == prices.end())
      throw DataError("build_labels: no price series for ticker " + call.ticker + " (call " +
                      call.call_id + ")");
    for (int tau : taus) {
      try {
        auto [rit, fresh] = returns_cache.try_emplace(call.ticker);
        if (fresh) rit->second = compute_returns(pit->second);
        const Date anchor = anchor_trading_date(pit->second, call.call_date);
        out.labels.push_back({call.call_id, tau, compute_volatility(rit->second, anchor, tau)});
      } catch (const InsufficientHistoryError& e) {
        returns_cache.erase(call.ticker);
        out.issues.push_back({call.call_id, tau, e.what()});
      } catch (const ZeroVolatilityError& e) {
        out.issues.push_back({call.call_id, tau, e.what()});
      }
    }
  }
  return out;
}

double mse(std::span<const double> predicted, std::span<const double> actual) {
  if (predicted.size() != actual.size())
    throw std::invalid_argument("mse: length mismatch (" + std::to_string(predicted.size()) +
                                " vs " + std::to_string(actual.size()) + ")");
  if (predicted.empty()) throw std::invalid_argument("mse: empty input");
  double sum = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double d = actual[i] - predicted[i];
    sum += d * d;
  }
  return sum / static_cast<double>(predicted.size());
}

void write_labels_csv(const std::filesystem::path& path, const std::vector<VolatilityLabel>& labels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "call_id,tau,volatility\n";
  char buf[64];
  for (const auto& l : labels) {
    std::snprintf(buf, sizeof buf, "%.17g", l.value);
    out << l.call_id << ',' << l.tau << ',' << buf << '\n';
  }
}

std::vector<VolatilityLabel> read_labels_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "call_id,tau,volatility")
    throw DataError(path.string() + ": expected header 'call_id,tau,volatility'");
  std::vector<VolatilityLabel> labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto c2 = line.rfind(',');
    const auto c1 = c2 == std::string::npos ? c2 : line.rfind(',', c2 - 1);
    if (c1 == std::string::npos || c2 == 0)
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected 3 columns");
    VolatilityLabel l;
    l.call_id = line.substr(0, c1);
    const char* b = line.data();
    auto r1 = std::from_chars(b + c1 + 1, b + c2, l.tau);
    auto r2 = std::from_chars(b + c2 + 1, b + line.size(), l.value);
    if (r1.ec != std::errc() || r1.ptr != b + c2 || r2.ec != std::errc() || r2.ptr != b + line.size())
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": unparseable row");
    labels.push_back(std::move(l));
  }
  return labels;
}

}  // namespace ecc
