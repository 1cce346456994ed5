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
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ecc/embedding.hpp"
#include "ecc/llm.hpp"
#include "ecc/prompts.hpp"
#include "ecc/summarize.hpp"

namespace ecc {

inline constexpr std::size_t kDefaultRetrievalDepth = 4;
inline constexpr std::string_view kNoneSentinel = "NONE";
inline constexpr std::string_view kNoAnswer = "No relevant information found.";

/// Exact cosine-similarity index over chunk embeddings. Immutable once built.
class VectorIndex {
 public:
  struct Entry {
    std::size_t chunk_index;
    Eigen::VectorXf vector;
    double norm;
  };

  explicit VectorIndex(std::vector<Entry> entries);

  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

 private:
  std::vector<Entry> entries_;
};

struct ScoredChunk {
  std::size_t chunk_index;
  double score;

  friend bool operator==(const ScoredChunk&, const ScoredChunk&) = default;
};

VectorIndex build_index(const EmbeddingProvider& provider, const std::vector<Chunk>& chunks);

/// Top-k entries by cosine similarity, descending; ties go to the lower
/// chunk index. k is capped at the index size.
std::vector<ScoredChunk> retrieve(const VectorIndex& index, const Eigen::VectorXf& query, std::size_t k);

/// One relevance-filter call per chunk; replies are split into sentences one
/// per line, `NONE` replies contribute nothing, and repeats are dropped.
std::vector<std::string> compress_context(const LlmClient& client, const PromptRegistry& prompts,
                                          const std::string& question, const std::vector<Chunk>& retrieved);

/// Answers from the selected sentences; with no sentences returns the fixed
/// no-answer string without calling the client.
std::string synthesize_answer(const LlmClient& client, const PromptRegistry& prompts, const std::string& question,
                              const std::vector<std::string>& sentences);

struct FocusAnswer {
  std::string question;
  std::vector<std::string> selected_sentences;
  std::string answer;

  friend bool operator==(const FocusAnswer&, const FocusAnswer&) = default;
};

struct QuestionFailure {
  std::size_t question_number;  // position in traversal order
  std::string question;
  std::string message;
};

struct FocusBundle {
  std::vector<FocusAnswer> answers;  // Question Bank traversal order
  std::string concatenated_text;
  std::vector<QuestionFailure> failures;
};

/// "Q: ...\nA: ..." blocks separated by blank lines.
std::string concatenate_answers(const std::vector<FocusAnswer>& answers);

struct RagOptions {
  std::size_t k = kDefaultRetrievalDepth;
  std::size_t max_in_flight = kDefaultMaxInFlight;
};

/// For each question: embed, retrieve, compress, synthesize. A failing
/// question is recorded in `failures` and the rest still run.
FocusBundle run_question_bank(const LlmClient& client, const EmbeddingProvider& provider, const VectorIndex& index,
                              const std::vector<Chunk>& chunks, const QuestionBank& bank,
                              const PromptRegistry& prompts, const RagOptions& options = {});

TextEmbedding focus_embedding(const EmbeddingProvider& provider, const FocusBundle& bundle);

nlohmann::ordered_json focus_bundle_to_json(const FocusBundle& bundle);
FocusBundle focus_bundle_from_json(const nlohmann::json& json);

}  // namespace ecc
