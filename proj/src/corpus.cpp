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

#include "ecc/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "ecc/errors.hpp"

namespace ecc {

namespace {

int parse_fixed_int(std::string_view text, std::string_view whole) {
  int value = 0;
  for (char c : text) {
    if (c < '0' || c > '9') throw DataError("unparseable date '" + std::string(whole) + "'");
    value = value * 10 + (c - '0');
  }
  return value;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

bool call_order(const EccCall& a, const EccCall& b) {
  auto da = std::chrono::sys_days(a.call_date);
  auto db = std::chrono::sys_days(b.call_date);
  if (da != db) return da < db;
  return a.call_id < b.call_id;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

Date parse_date(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-')
    throw DataError("unparseable date '" + std::string(text) + "'");
  const int y = parse_fixed_int(text.substr(0, 4), text);
  const int m = parse_fixed_int(text.substr(5, 2), text);
  const int d = parse_fixed_int(text.substr(8, 2), text);
  Date date{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
            std::chrono::day{static_cast<unsigned>(d)}};
  if (!date.ok()) throw DataError("invalid calendar date '" + std::string(text) + "'");
  return date;
}

std::string format_date(const Date& date) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(date.year()),
                static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
  return buf;
}

std::vector<EccCall> parse_transcripts(std::istream& in) {
  struct Pending {
    EccCall call;
    std::map<long long, Sentence> by_index;
  };
  std::vector<Pending> pending;
  std::unordered_map<std::string, std::size_t> slot;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto where = "line " + std::to_string(line_no) + ": ";
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError(where + "malformed JSON (" + e.what() + ")");
    }
    if (!rec.is_object()) throw DataError(where + "record is not an object");

    auto get_string = [&](const char* key) -> std::string {
      auto it = rec.find(key);
      if (it == rec.end()) throw DataError(where + "missing required field '" + key + "'");
      if (!it->is_string()) throw DataError(where + "field '" + key + "' must be a string");
      return it->get<std::string>();
    };
    const std::string call_id = get_string("call_id");
    const std::string ticker = get_string("ticker");
    const Date date = [&] {
      try {
        return parse_date(get_string("date"));
      } catch (const DataError& e) {
        throw DataError(where + e.what());
      }
    }();
    const std::string speaker = get_string("speaker");
    const std::string text = get_string("text");
    auto idx_it = rec.find("sentence_index");
    if (idx_it == rec.end()) throw DataError(where + "missing required field 'sentence_index'");
    if (!idx_it->is_number_integer() || idx_it->get<long long>() < 0)
      throw DataError(where + "sentence_index must be a non-negative integer");
    const long long index = idx_it->get<long long>();
    if (call_id.empty()) throw DataError(where + "call_id is empty");
    if (text.empty()) throw DataError(where + "text is empty");

    auto [it, inserted] = slot.try_emplace(call_id, pending.size());
    if (inserted) {
      pending.push_back({});
      pending.back().call.call_id = call_id;
      pending.back().call.ticker = ticker;
      pending.back().call.call_date = date;
    }
    Pending& p = pending[it->second];
    if (p.call.ticker != ticker || p.call.call_date != date)
      throw DataError(where + "call '" + call_id + "' has inconsistent ticker/date across records");
    for (auto [key, field] : {std::pair{"audio_ref", &EccCall::audio_embedding_ref},
                              std::pair{"sentences_ref", &EccCall::sentence_embedding_ref}}) {
      auto ref = rec.find(key);
      if (ref == rec.end()) continue;
      if (!ref->is_string()) throw DataError(where + "field '" + key + "' must be a string");
      p.call.*field = ref->get<std::string>();
    }
    if (!p.by_index.emplace(index, Sentence{speaker, text}).second)
      throw DuplicateRecordError(where + "duplicate record for call '" + call_id +
                                 "' sentence_index " + std::to_string(index));
  }

  std::vector<EccCall> calls;
  calls.reserve(pending.size());
  for (auto& p : pending) {
    for (auto& [index, sentence] : p.by_index) p.call.sentences.push_back(std::move(sentence));
    calls.push_back(std::move(p.call));
  }
  std::sort(calls.begin(), calls.end(), call_order);
  return calls;
}

std::vector<EccCall> load_transcripts(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_transcripts(in);
}

void write_transcripts(std::ostream& out, const std::vector<EccCall>& calls) {
  for (const auto& call : calls) {
    for (std::size_t i = 0; i < call.sentences.size(); ++i) {
      nlohmann::ordered_json rec;
      rec["call_id"] = call.call_id;
      rec["ticker"] = call.ticker;
      rec["date"] = format_date(call.call_date);
      rec["sentence_index"] = i;
      rec["speaker"] = call.sentences[i].speaker;
      rec["text"] = call.sentences[i].text;
      if (i == 0 && !call.audio_embedding_ref.empty()) rec["audio_ref"] = call.audio_embedding_ref;
      if (i == 0 && !call.sentence_embedding_ref.empty()) rec["sentences_ref"] = call.sentence_embedding_ref;
      out << rec.dump() << '\n';
    }
  }
}

void write_transcripts(const std::filesystem::path& path, const std::vector<EccCall>& calls) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  write_transcripts(out, calls);
}

PriceTable parse_prices(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != "ticker,date,adj_close")
    throw DataError("prices: expected header 'ticker,date,adj_close'");

  PriceTable table;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view row = trim(line);
    if (row.empty()) continue;
    const auto where = "prices line " + std::to_string(line_no) + ": ";
    const auto c1 = row.find(',');
    const auto c2 = c1 == std::string_view::npos ? c1 : row.find(',', c1 + 1);
    if (c2 == std::string_view::npos || row.find(',', c2 + 1) != std::string_view::npos)
      throw DataError(where + "expected 3 columns");
    const std::string ticker(trim(row.substr(0, c1)));
    if (ticker.empty()) throw DataError(where + "empty ticker");
    Date date;
    try {
      date = parse_date(trim(row.substr(c1 + 1, c2 - c1 - 1)));
    } catch (const DataError& e) {
      throw DataError(where + e.what());
    }
    const std::string_view price_text = trim(row.substr(c2 + 1));
    double price = 0.0;
    auto [ptr, ec] = std::from_chars(price_text.data(), price_text.data() + price_text.size(), price);
    if (ec != std::errc() || ptr != price_text.data() + price_text.size() || !std::isfinite(price))
      throw DataError(where + "unparseable adj_close '" + std::string(price_text) + "'");
    if (price <= 0.0) throw DataError(where + "non-positive price " + std::string(price_text));

    auto& series = table[ticker];
    series.ticker = ticker;
    series.observations.push_back({date, price});
  }

  for (auto& [ticker, series] : table) {
    auto& obs = series.observations;
    std::stable_sort(obs.begin(), obs.end(), [](const auto& a, const auto& b) {
      return std::chrono::sys_days(a.trading_date) < std::chrono::sys_days(b.trading_date);
    });
    for (std::size_t i = 1; i < obs.size(); ++i) {
      if (obs[i].trading_date == obs[i - 1].trading_date)
        throw DataError("prices: duplicate date " + format_date(obs[i].trading_date) +
                        " for ticker " + ticker);
    }
  }
  return table;
}

PriceTable load_prices(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_prices(in);
}

void write_prices(const std::filesystem::path& path, const PriceTable& prices) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "ticker,date,adj_close\n";
  char buf[64];
  for (const auto& [ticker, series] : prices) {
    for (const auto& obs : series.observations) {
      std::snprintf(buf, sizeof buf, "%.17g", obs.adj_close);
      out << ticker << ',' << format_date(obs.trading_date) << ',' << buf << '\n';
    }
  }
}

DatasetSplit temporal_split(const std::vector<EccCall>& calls, double ratio) {
  if (!(ratio > 0.0 && ratio < 1.0))
    throw std::invalid_argument("temporal_split: ratio must lie in (0, 1)");
  if (calls.empty()) throw std::invalid_argument("temporal_split: no calls");

  std::vector<const EccCall*> order;
  order.reserve(calls.size());
  for (const auto& c : calls) order.push_back(&c);
  std::sort(order.begin(), order.end(),
            [](const EccCall* a, const EccCall* b) { return call_order(*a, *b); });

  // The small nudge keeps e.g. 0.29 * 100 from flooring to 28.
  const auto n = calls.size();
  const auto cut = std::min(n, static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n) + 1e-9)));

  DatasetSplit split;
  for (std::size_t i = 0; i < n; ++i)
    (i < cut ? split.train_ids : split.test_ids).push_back(order[i]->call_id);
  return split;
}

std::vector<EccCall> select_calls(const std::vector<EccCall>& calls,
                                  const std::vector<std::string>& ids) {
  std::unordered_map<std::string_view, const EccCall*> by_id;
  for (const auto& c : calls) by_id.emplace(c.call_id, &c);
  std::vector<EccCall> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw DataError("unknown call_id '" + id + "'");
    out.push_back(*it->second);
  }
  return out;
}

std::string transcript_text(const EccCall& call) {
  std::string text;
  for (const auto& s : call.sentences) {
    if (!text.empty()) text += '\n';
    if (!s.speaker.empty()) {
      text += s.speaker;
      text += ": ";
    }
    text += s.text;
  }
  return text;
}

}  // namespace ecc
