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
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace ecc {

using Date = std::chrono::year_month_day;

/// Parses a strict ISO-8601 calendar date (YYYY-MM-DD). Throws DataError.
Date parse_date(std::string_view text);
std::string format_date(const Date& date);

struct Sentence {
  std::string speaker;
  std::string text;

  friend bool operator==(const Sentence&, const Sentence&) = default;
};

/// One earnings conference call.
struct EccCall {
  std::string call_id;
  std::string ticker;
  Date call_date;
  std::vector<Sentence> sentences;
  // Identifiers of the call's embedding matrices; empty until `embed` runs.
  std::string audio_embedding_ref;
  std::string sentence_embedding_ref;

  friend bool operator==(const EccCall&, const EccCall&) = default;
};

struct PriceObservation {
  Date trading_date;
  double adj_close = 0.0;
};

struct PriceSeries {
  std::string ticker;
  std::vector<PriceObservation> observations;  // strictly increasing dates
};

using PriceTable = std::map<std::string, PriceSeries>;

struct DatasetSplit {
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
};

/// Reads transcripts.jsonl. Records are grouped by call_id and ordered by
/// sentence_index; the result is sorted by (call_date, call_id).
std::vector<EccCall> load_transcripts(const std::filesystem::path& path);
std::vector<EccCall> parse_transcripts(std::istream& in);

/// Writes the canonical one-sentence-per-line form read by load_transcripts.
void write_transcripts(std::ostream& out, const std::vector<EccCall>& calls);
void write_transcripts(const std::filesystem::path& path, const std::vector<EccCall>& calls);

/// Reads prices.csv (`ticker,date,adj_close`).
PriceTable load_prices(const std::filesystem::path& path);
PriceTable parse_prices(std::istream& in);
void write_prices(const std::filesystem::path& path, const PriceTable& prices);

/// Sorts calls by (call_date, call_id) and puts the first floor(ratio * n)
/// into the training set.
DatasetSplit temporal_split(const std::vector<EccCall>& calls, double ratio);

/// Calls in `calls` whose ids appear in `ids`, in the order of `ids`.
std::vector<EccCall> select_calls(const std::vector<EccCall>& calls,
                                  const std::vector<std::string>& ids);

/// Transcript text as fed to the summarizer: one "speaker: text" line per sentence.
std::string transcript_text(const EccCall& call);

}  // namespace ecc
