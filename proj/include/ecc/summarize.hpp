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

#include <string>
#include <string_view>
#include <vector>

#include "ecc/embedding.hpp"
#include "ecc/llm.hpp"
#include "ecc/prompts.hpp"

namespace ecc {

inline constexpr std::size_t kDefaultChunkChars = 4000;
inline constexpr std::size_t kDefaultChunkOverlap = 200;
inline constexpr std::size_t kSnapWindow = 200;
inline constexpr std::size_t kDefaultMaxInFlight = 4;
inline constexpr double kTemperature = 0.0;

/// System prompt used for every summarization call.
inline constexpr std::string_view kAnalystSystemPrompt =
    "You are a financial analyst reviewing an earnings conference call.";

struct Chunk {
  std::size_t chunk_index = 0;
  std::string text;
  std::size_t begin = 0;  // byte offsets into the source
  std::size_t end = 0;

  friend bool operator==(const Chunk&, const Chunk&) = default;
};

/// Splits `source` into chunks of at most `max_chars` bytes. Consecutive
/// chunks share exactly `overlap_chars` bytes. A cut snaps back to just after
/// the nearest sentence terminator within the last 200 bytes when one exists.
std::vector<Chunk> chunk_text(std::string_view source, std::size_t max_chars, std::size_t overlap_chars);

/// Inverse of chunk_text.
std::string dechunk(const std::vector<Chunk>& chunks);

struct SummaryBundle {
  std::vector<std::string> chunk_summaries;
  std::string overall_summary;

  friend bool operator==(const SummaryBundle&, const SummaryBundle&) = default;
};

struct SummarizeOptions {
  std::size_t max_chars = kDefaultChunkChars;
  std::size_t overlap_chars = kDefaultChunkOverlap;
  std::size_t max_in_flight = kDefaultMaxInFlight;
};

std::string chunk_summary_prompt(const PromptRegistry& prompts, const Chunk& chunk);
std::string overall_summary_prompt(const PromptRegistry& prompts, const std::vector<std::string>& chunk_summaries);

/// Client output is returned verbatim. Failures are rethrown as ClientError
/// naming the chunk.
std::string summarize_chunk(const LlmClient& client, const PromptRegistry& prompts, const Chunk& chunk);
std::string summarize_overall(const LlmClient& client, const PromptRegistry& prompts,
                              const std::vector<std::string>& chunk_summaries);

/// Map step over all chunks (bounded concurrency, results in chunk order),
/// then the reduce step.
SummaryBundle summarize_chunks(const LlmClient& client, const PromptRegistry& prompts,
                               const std::vector<Chunk>& chunks, std::size_t max_in_flight = kDefaultMaxInFlight);

/// Text embedded for T_s: overall summary, a blank line, then the chunk
/// summaries one per line.
std::string summary_text(const SummaryBundle& bundle);
TextEmbedding summary_embedding(const EmbeddingProvider& provider, const SummaryBundle& bundle);

/// Ablation parts: the overall summary alone (E_os) and the joined chunk summaries alone (E_cs).
TextEmbedding overall_summary_embedding(const EmbeddingProvider& provider, const SummaryBundle& bundle);
TextEmbedding chunk_summaries_embedding(const EmbeddingProvider& provider, const SummaryBundle& bundle);

}  // namespace ecc
