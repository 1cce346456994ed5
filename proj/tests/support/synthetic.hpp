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

#include <chrono>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "ecc/corpus.hpp"

namespace ecc::testing {

inline Date day_offset(const Date& start, int days) {
  return Date{std::chrono::sys_days(start) + std::chrono::days(days)};
}

/// Weekday closes following a geometric random walk.
inline PriceSeries random_walk_prices(const std::string& ticker, const Date& start, int trading_days,
                                      std::mt19937_64& rng, double vol = 0.02) {
  std::normal_distribution<double> step(0.0, vol);
  PriceSeries s{ticker, {}};
  double p = 50.0 + static_cast<double>(rng() % 100);
  for (int offset = 0; static_cast<int>(s.observations.size()) < trading_days; ++offset) {
    const Date d = day_offset(start, offset);
    const auto wd = std::chrono::weekday(std::chrono::sys_days(d)).c_encoding();
    if (wd == 0 || wd == 6) continue;
    s.observations.push_back({d, p});
    p *= std::exp(step(rng));
  }
  return s;
}

/// `n` calls with non-decreasing dates (several share a date) and shuffled ids,
/// returned in a scrambled order.
inline std::vector<EccCall> dated_calls(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<EccCall> calls;
  const Date start{std::chrono::year{2015}, std::chrono::January, std::chrono::day{5}};
  int day = 0;
  for (std::size_t i = 0; i < n; ++i) {
    day += static_cast<int>(rng() % 3);  // 0 keeps the previous date
    EccCall c;
    c.call_id = "C" + std::to_string(rng() % 1000000) + "_" + std::to_string(i);
    c.ticker = "T" + std::to_string(i % 17);
    c.call_date = day_offset(start, day);
    c.sentences = {{"CEO", "Results for call " + std::to_string(i) + "."}};
    calls.push_back(c);
  }
  std::shuffle(calls.begin(), calls.end(), rng);
  return calls;
}

}  // namespace ecc::testing
