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

#include "ecc/summarize.hpp"

#include <stdexcept>

#include "ecc/errors.hpp"
#include "ecc/parallel.hpp"

namespace ecc {

namespace {

bool is_space(char c) { return c == ' ' || c == '\n' || c == '\t' || c == '\r'; }
bool is_terminator(char c) { return c == '.' || c == '!' || c == '?'; }
bool is_utf8_continuation(char c) { return (static_cast<unsigned char>(c) & 0xC0) == 0x80; }

}  // namespace

std::vector<Chunk> chunk_text(std::string_view source, std::size_t max_chars, std::size_t overlap_chars) {
  if (max_chars <= overlap_chars) throw std::invalid_argument("chunk_text: max_chars must exceed overlap_chars");
  if (source.empty()) throw std::invalid_argument("chunk_text: empty source");

  std::vector<Chunk> chunks;
  std::size_t start = 0;
  for (;;) {
    if (source.size() - start <= max_chars) {
      chunks.push_back({chunks.size(), std::string(source.substr(start)), start, source.size()});
      return chunks;
    }
    const std::size_t hard = start + max_chars;
    // The cut must leave room for progress: the next chunk starts at end - overlap.
    const std::size_t floor_end = start + overlap_chars + 1;
    const std::size_t lo = std::max(floor_end, hard > kSnapWindow ? hard - kSnapWindow : 0);
    std::size_t end = 0;
    for (std::size_t e = hard; e >= lo && e > 0; --e) {
      if (is_terminator(source[e - 1]) && is_space(source[e])) {
        end = e;
        break;
      }
    }
    if (end == 0) {
      end = hard;
      while (end > floor_end && is_utf8_continuation(source[end])) --end;
    }
    chunks.push_back({chunks.size(), std::string(source.substr(start, end - start)), start, end});
    start = end - overlap_chars;
  }
}

std::string dechunk(const std::vector<Chunk>& chunks) {
  std::string out;
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    if (i == 0) {
      out = chunks[0].text;
      continue;
    }
    const std::size_t shared = chunks[i - 1].end - chunks[i].begin;
    out.append(chunks[i].text, shared, std::string::npos);
  }
  return out;
}

std::string chunk_summary_prompt(const PromptRegistry& prompts, const Chunk& chunk) {
  return render_prompt(prompts.chunk_summary, chunk.text);
}

std::string overall_summary_prompt(const PromptRegistry& prompts, const std::vector<std::string>& chunk_summaries) {
  std::string listing;
  for (std::size_t i = 0; i < chunk_summaries.size(); ++i) {
    if (i) listing += '\n';
    listing += "[" + std::to_string(i + 1) + "] " + chunk_summaries[i];
  }
  return render_prompt(prompts.overall_summary, listing);
}

std::string summarize_chunk(const LlmClient& client, const PromptRegistry& prompts, const Chunk& chunk) {
  try {
    return client.complete(std::string(kAnalystSystemPrompt), chunk_summary_prompt(prompts, chunk), kTemperature);
  } catch (const std::exception& e) {
    throw ClientError("summarizing chunk " + std::to_string(chunk.chunk_index) + ": " + e.what());
  }
}

std::string summarize_overall(const LlmClient& client, const PromptRegistry& prompts,
                              const std::vector<std::string>& chunk_summaries) {
  if (chunk_summaries.empty()) throw std::invalid_argument("summarize_overall: no chunk summaries");
  try {
    return client.complete(std::string(kAnalystSystemPrompt), overall_summary_prompt(prompts, chunk_summaries),
                           kTemperature);
  } catch (const std::exception& e) {
    throw ClientError(std::string("overall summary: ") + e.what());
  }
}

SummaryBundle summarize_chunks(const LlmClient& client, const PromptRegistry& prompts,
                               const std::vector<Chunk>& chunks, std::size_t max_in_flight) {
  if (chunks.empty()) throw std::invalid_argument("summarize_chunks: no chunks");
  SummaryBundle bundle;
  bundle.chunk_summaries.resize(chunks.size());
  const auto errors = bounded_parallel_for(chunks.size(), max_in_flight, [&](std::size_t i) {
    bundle.chunk_summaries[i] = summarize_chunk(client, prompts, chunks[i]);
  });
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  bundle.overall_summary = summarize_overall(client, prompts, bundle.chunk_summaries);
  if (bundle.overall_summary.empty()) throw ClientError("overall summary: client returned an empty reply");
  return bundle;
}

namespace {

std::string joined_chunk_summaries(const SummaryBundle& bundle) {
  std::string out;
  for (std::size_t i = 0; i < bundle.chunk_summaries.size(); ++i) {
    if (i) out += '\n';
    out += bundle.chunk_summaries[i];
  }
  return out;
}

void check_bundle(const SummaryBundle& bundle) {
  if (bundle.chunk_summaries.empty() || bundle.overall_summary.empty())
    throw std::invalid_argument("SummaryBundle needs chunk summaries and a non-empty overall summary");
}

}  // namespace

std::string summary_text(const SummaryBundle& bundle) {
  return bundle.overall_summary + "\n\n" + joined_chunk_summaries(bundle);
}

TextEmbedding summary_embedding(const EmbeddingProvider& provider, const SummaryBundle& bundle) {
  check_bundle(bundle);
  return provider.embed_text(summary_text(bundle));
}

TextEmbedding overall_summary_embedding(const EmbeddingProvider& provider, const SummaryBundle& bundle) {
  check_bundle(bundle);
  return provider.embed_text(bundle.overall_summary);
}

TextEmbedding chunk_summaries_embedding(const EmbeddingProvider& provider, const SummaryBundle& bundle) {
  check_bundle(bundle);
  return provider.embed_text(joined_chunk_summaries(bundle));
}

}  // namespace ecc
