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

#include "ecc/rag.hpp"

#include <algorithm>
#include <unordered_set>

#include "ecc/errors.hpp"
#include "ecc/parallel.hpp"

namespace ecc {

VectorIndex::VectorIndex(std::vector<Entry> entries) : entries_(std::move(entries)) {
  for (const auto& e : entries_)
    if (!(e.norm > 0.0) || !std::isfinite(e.norm))
      throw DataError("VectorIndex: chunk " + std::to_string(e.chunk_index) + " has a zero-norm vector");
}

VectorIndex build_index(const EmbeddingProvider& provider, const std::vector<Chunk>& chunks) {
  if (chunks.empty()) throw std::invalid_argument("build_index: no chunks");
  std::vector<VectorIndex::Entry> entries;
  entries.reserve(chunks.size());
  for (const auto& chunk : chunks) {
    TextEmbedding e;
    try {
      e = provider.embed_text(chunk.text);
    } catch (const ProviderError& err) {
      throw ProviderError("embedding chunk " + std::to_string(chunk.chunk_index) + ": " + err.what());
    }
    const double norm = e.data.cast<double>().norm();
    entries.push_back({chunk.chunk_index, std::move(e.data), norm});
  }
  return VectorIndex(std::move(entries));
}

std::vector<ScoredChunk> retrieve(const VectorIndex& index, const Eigen::VectorXf& query, std::size_t k) {
  if (k < 1) throw std::invalid_argument("retrieve: k must be >= 1");
  const Eigen::VectorXd q = query.cast<double>();
  const double qn = q.norm();
  if (!(qn > 0.0)) throw std::invalid_argument("retrieve: zero-norm query");

  std::vector<ScoredChunk> scored;
  scored.reserve(index.size());
  for (const auto& e : index.entries()) {
    if (e.vector.size() != q.size()) throw DimensionError("retrieve: query and index dimensions differ");
    scored.push_back({e.chunk_index, e.vector.cast<double>().dot(q) / (e.norm * qn)});
  }
  const auto keep = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep), scored.end(),
                    [](const ScoredChunk& a, const ScoredChunk& b) {
                      if (a.score != b.score) return a.score > b.score;
                      return a.chunk_index < b.chunk_index;
                    });
  scored.resize(keep);
  return scored;
}

std::vector<std::string> compress_context(const LlmClient& client, const PromptRegistry& prompts,
                                          const std::string& question, const std::vector<Chunk>& retrieved) {
  const std::string system = render_prompt(prompts.focus_extraction, question);
  std::vector<std::string> sentences;
  std::unordered_set<std::string> seen;
  for (const auto& chunk : retrieved) {
    std::string reply;
    try {
      reply = client.complete(system, render_prompt(prompts.relevance_filter, chunk.text, question), kTemperature);
    } catch (const std::exception& e) {
      throw ClientError("relevance filter for chunk " + std::to_string(chunk.chunk_index) + " (question '" +
                        question + "'): " + e.what());
    }
    std::size_t pos = 0;
    while (pos <= reply.size()) {
      auto nl = reply.find('\n', pos);
      if (nl == std::string::npos) nl = reply.size();
      std::string line = reply.substr(pos, nl - pos);
      pos = nl + 1;
      const auto b = line.find_first_not_of(" \t\r");
      if (b == std::string::npos) continue;
      line = line.substr(b, line.find_last_not_of(" \t\r") - b + 1);
      if (line == kNoneSentinel) continue;
      if (seen.insert(line).second) sentences.push_back(std::move(line));
    }
  }
  return sentences;
}

std::string synthesize_answer(const LlmClient& client, const PromptRegistry& prompts, const std::string& question,
                              const std::vector<std::string>& sentences) {
  if (sentences.empty()) return std::string(kNoAnswer);
  std::string listing;
  for (const auto& s : sentences) {
    if (!listing.empty()) listing += '\n';
    listing += s;
  }
  try {
    return client.complete(render_prompt(prompts.focus_extraction, question),
                           render_prompt(prompts.answer_synthesis, listing, question), kTemperature);
  } catch (const std::exception& e) {
    throw ClientError("answer synthesis (question '" + question + "'): " + e.what());
  }
}

std::string concatenate_answers(const std::vector<FocusAnswer>& answers) {
  std::string out;
  for (const auto& a : answers) {
    if (!out.empty()) out += "\n\n";
    out += "Q: " + a.question + "\nA: " + a.answer;
  }
  return out;
}

FocusBundle run_question_bank(const LlmClient& client, const EmbeddingProvider& provider, const VectorIndex& index,
                              const std::vector<Chunk>& chunks, const QuestionBank& bank,
                              const PromptRegistry& prompts, const RagOptions& options) {
  const auto questions = bank.flatten();
  std::vector<FocusAnswer> slots(questions.size());
  const auto errors = bounded_parallel_for(questions.size(), options.max_in_flight, [&](std::size_t i) {
    const auto& question = questions[i];
    const auto query = provider.embed_text(question);
    std::vector<Chunk> retrieved;
    for (const auto& hit : retrieve(index, query.data, options.k)) {
      if (hit.chunk_index >= chunks.size() || chunks[hit.chunk_index].chunk_index != hit.chunk_index)
        throw DataError("index refers to chunk " + std::to_string(hit.chunk_index) + " not in the chunk list");
      retrieved.push_back(chunks[hit.chunk_index]);
    }
    auto sentences = compress_context(client, prompts, question, retrieved);
    auto answer = synthesize_answer(client, prompts, question, sentences);
    slots[i] = {question, std::move(sentences), std::move(answer)};
  });

  FocusBundle bundle;
  for (std::size_t i = 0; i < questions.size(); ++i) {
    if (!errors[i]) {
      bundle.answers.push_back(std::move(slots[i]));
      continue;
    }
    try {
      std::rethrow_exception(errors[i]);
    } catch (const std::exception& e) {
      bundle.failures.push_back({i, questions[i], e.what()});
    }
  }
  bundle.concatenated_text = concatenate_answers(bundle.answers);
  return bundle;
}

TextEmbedding focus_embedding(const EmbeddingProvider& provider, const FocusBundle& bundle) {
  if (bundle.concatenated_text.empty()) throw std::invalid_argument("focus_embedding: empty focus bundle");
  return provider.embed_text(bundle.concatenated_text);
}

nlohmann::ordered_json focus_bundle_to_json(const FocusBundle& bundle) {
  nlohmann::ordered_json answers = nlohmann::ordered_json::array();
  for (const auto& a : bundle.answers)
    answers.push_back({{"question", a.question}, {"selected_sentences", a.selected_sentences}, {"answer", a.answer}});
  nlohmann::ordered_json failures = nlohmann::ordered_json::array();
  for (const auto& f : bundle.failures)
    failures.push_back({{"question_number", f.question_number}, {"question", f.question}, {"message", f.message}});
  nlohmann::ordered_json out;
  out["answers"] = std::move(answers);
  out["failures"] = std::move(failures);
  out["concatenated_text"] = bundle.concatenated_text;
  return out;
}

FocusBundle focus_bundle_from_json(const nlohmann::json& json) {
  FocusBundle b;
  try {
    for (const auto& a : json.at("answers"))
      b.answers.push_back({a.at("question").get<std::string>(),
                           a.at("selected_sentences").get<std::vector<std::string>>(),
                           a.at("answer").get<std::string>()});
    for (const auto& f : json.at("failures"))
      b.failures.push_back({f.at("question_number").get<std::size_t>(), f.at("question").get<std::string>(),
                            f.at("message").get<std::string>()});
    b.concatenated_text = json.at("concatenated_text").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("focus bundle JSON: ") + e.what());
  }
  return b;
}

}  // namespace ecc
