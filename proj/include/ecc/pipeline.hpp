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

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ecc/corpus.hpp"
#include "ecc/embedding.hpp"
#include "ecc/evaluation.hpp"
#include "ecc/llm.hpp"
#include "ecc/rag.hpp"
#include "ecc/remote.hpp"
#include "ecc/summarize.hpp"
#include "ecc/training.hpp"

namespace ecc {

/// Settings read from config.toml. Relative paths are resolved against the
/// directory holding the config file.
struct PipelineConfig {
  std::filesystem::path transcripts;
  std::filesystem::path prices;
  std::filesystem::path work_dir;
  std::filesystem::path prompts;        // empty: built-in templates
  std::filesystem::path question_bank;  // empty: built-in bank

  std::string embedding_provider = "stub";  // stub | files | remote
  std::uint64_t embedding_seed = 7;
  std::filesystem::path embedding_files_dir;
  int audio_capacity = kDefaultCapacity;
  int sentence_capacity = kDefaultCapacity;
  RemoteEndpoint embedding_remote;

  std::string llm_client = "mock";  // mock | remote
  std::string mock_tag = "[mock] ";
  RemoteEndpoint llm_remote;

  SummarizeOptions chunking;
  RagOptions retrieval;

  model::ModelConfig model;
  TrainConfig train;
  double split_ratio = 0.8;

  static PipelineConfig parse(std::string_view toml_text, const std::filesystem::path& base_dir);
  static PipelineConfig load(const std::filesystem::path& path);

  /// Same encoders and head, with the three ablation text features.
  model::ModelConfig ablation_model() const;
};

/// Files under the work directory.
class WorkLayout {
 public:
  explicit WorkLayout(std::filesystem::path root) : root_(std::move(root)) {}

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path corpus() const { return root_ / "corpus.jsonl"; }
  std::filesystem::path prices() const { return root_ / "prices.csv"; }
  std::filesystem::path labels() const { return root_ / "labels.csv"; }
  std::filesystem::path label_issues() const { return root_ / "label_issues.csv"; }
  std::filesystem::path split() const { return root_ / "split.json"; }
  std::filesystem::path embeddings() const { return root_ / "embeddings"; }
  std::filesystem::path audio(const std::string& id) const { return embeddings() / (id + ".audio.ecce"); }
  std::filesystem::path sentences(const std::string& id) const { return embeddings() / (id + ".sentences.ecce"); }
  std::filesystem::path analysis() const { return root_ / "analysis"; }
  std::filesystem::path summary(const std::string& id) const { return analysis() / (id + ".summary.json"); }
  std::filesystem::path focus_bundle(const std::string& id) const { return analysis() / (id + ".focus_bundle.json"); }
  std::filesystem::path text_feature(const std::string& id, const std::string& kind) const {
    return analysis() / (id + "." + kind + ".ecce");
  }
  std::filesystem::path models() const { return root_ / "models"; }
  std::filesystem::path model(int tau) const { return models() / ("tau_" + std::to_string(tau) + ".eccm"); }
  std::filesystem::path history(int tau) const { return models() / ("tau_" + std::to_string(tau) + ".history.csv"); }
  std::filesystem::path grid(int tau) const { return models() / ("tau_" + std::to_string(tau) + ".grid.csv"); }
  std::filesystem::path results_csv() const { return root_ / "results.csv"; }
  std::filesystem::path results_txt() const { return root_ / "results.txt"; }
  std::filesystem::path ablation_csv() const { return root_ / "ablation.csv"; }
  std::filesystem::path ablation_txt() const { return root_ / "ablation.txt"; }

 private:
  std::filesystem::path root_;
};

struct SplitRecord {
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
  std::vector<std::string> excluded_ids;  // calls missing a label for some tau
};
void write_split(const SplitRecord& split, const std::filesystem::path& path);
SplitRecord read_split(const std::filesystem::path& path);

std::unique_ptr<EmbeddingProvider> make_embedding_provider(const PipelineConfig& cfg,
                                                           const std::vector<EccCall>& calls);
std::unique_ptr<LlmClient> make_llm_client(const PipelineConfig& cfg);

struct IngestReport {
  std::size_t calls = 0;
  std::size_t sentences = 0;
  std::size_t tickers = 0;
};
IngestReport run_ingest(const PipelineConfig& cfg);

struct LabelReport {
  std::size_t labels = 0;
  std::size_t issues = 0;
  std::size_t train = 0;
  std::size_t test = 0;
  std::size_t excluded = 0;
};
LabelReport run_label(const PipelineConfig& cfg);

struct EmbedReport {
  std::size_t calls = 0;
  std::size_t truncated_rows = 0;
};
EmbedReport run_embed(const PipelineConfig& cfg, const EmbeddingProvider& provider);

struct AnalyzeReport {
  std::size_t calls = 0;
  std::size_t chunks = 0;
  std::size_t question_failures = 0;
};
AnalyzeReport run_analyze(const PipelineConfig& cfg, const LlmClient& client, const EmbeddingProvider& provider);

struct TrainReport {
  struct Entry {
    int tau;
    int batch_size;
    double learning_rate;
    double final_train_loss;
    std::size_t diverged_cells;
  };
  std::vector<Entry> models;
};
TrainReport run_train(const PipelineConfig& cfg);

/// Name of the result row for the trained model.
inline constexpr std::string_view kHeadlineConfigName = "Audio+Text+T_s+T_f";

/// Writes results.csv and results.txt.
ResultTable run_eval(const PipelineConfig& cfg);

/// Writes ablation.csv and ablation.txt.
AblationOutcome run_ablate(const PipelineConfig& cfg);

/// ingest, label, embed, analyze, train, eval; then ablate when asked.
ResultTable run_pipeline(const PipelineConfig& cfg, bool with_ablation = false);

}  // namespace ecc
