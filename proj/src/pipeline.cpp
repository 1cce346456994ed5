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

#include "ecc/pipeline.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#define TOML_EXCEPTIONS 1
#include <toml.hpp>

#include "ecc/checkpoint.hpp"
#include "ecc/errors.hpp"
#include "ecc/prompts.hpp"
#include "ecc/providers.hpp"
#include "ecc/volatility.hpp"

namespace ecc {

namespace fs = std::filesystem;

namespace {

// ---- config -------------------------------------------------------------

[[noreturn]] void bad_config(const std::string& msg) { throw std::invalid_argument("config: " + msg); }

void check_keys(const toml::table& t, const std::string& where, std::initializer_list<std::string_view> allowed) {
  for (const auto& [key, node] : t) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key.str() == a;
    if (!ok) bad_config("unknown key '" + std::string(key.str()) + "' in [" + where + "]");
  }
}

const toml::table* sub_table(const toml::table& t, std::string_view key, const std::string& where) {
  const auto* node = t.get(key);
  if (!node) return nullptr;
  if (!node->is_table()) bad_config("'" + std::string(key) + "' in [" + where + "] must be a table");
  return node->as_table();
}

template <typename T>
void read_value(const toml::table& t, std::string_view key, const std::string& where, T& out) {
  const auto* node = t.get(key);
  if (!node) return;
  if constexpr (std::is_same_v<T, std::string>) {
    auto v = node->value<std::string>();
    if (!v) bad_config("[" + where + "]." + std::string(key) + " must be a string");
    out = *v;
  } else if constexpr (std::is_same_v<T, double>) {
    auto v = node->value<double>();
    if (!v) bad_config("[" + where + "]." + std::string(key) + " must be a number");
    out = *v;
  } else {
    auto v = node->value<std::int64_t>();
    if (!v || (!node->is_integer())) bad_config("[" + where + "]." + std::string(key) + " must be an integer");
    if (*v < 0) bad_config("[" + where + "]." + std::string(key) + " must be non-negative");
    out = static_cast<T>(*v);
  }
}

void read_path(const toml::table& t, std::string_view key, const std::string& where, const fs::path& base,
               fs::path& out) {
  std::string s;
  read_value(t, key, where, s);
  if (!s.empty()) out = fs::path(s).is_absolute() ? fs::path(s) : base / s;
}

template <typename T>
void read_array(const toml::table& t, std::string_view key, const std::string& where, std::vector<T>& out) {
  const auto* node = t.get(key);
  if (!node) return;
  const auto* arr = node->as_array();
  if (!arr) bad_config("[" + where + "]." + std::string(key) + " must be an array");
  out.clear();
  for (const auto& el : *arr) {
    if constexpr (std::is_same_v<T, double>) {
      auto v = el.value<double>();
      if (!v) bad_config("[" + where + "]." + std::string(key) + " must hold numbers");
      out.push_back(*v);
    } else {
      auto v = el.value<std::int64_t>();
      if (!v || !el.is_integer()) bad_config("[" + where + "]." + std::string(key) + " must hold integers");
      out.push_back(static_cast<T>(*v));
    }
  }
}

void read_endpoint(const toml::table& t, const std::string& where, RemoteEndpoint& ep) {
  check_keys(t, where,
             {"base_url", "model", "api_key_env", "timeout_seconds", "retries", "retry_backoff_seconds", "dimensions"});
  read_value(t, "base_url", where, ep.base_url);
  read_value(t, "model", where, ep.model);
  read_value(t, "api_key_env", where, ep.api_key_env);
  read_value(t, "timeout_seconds", where, ep.timeout_seconds);
  read_value(t, "retries", where, ep.retries);
  read_value(t, "retry_backoff_seconds", where, ep.retry_backoff_seconds);
  read_value(t, "dimensions", where, ep.dimensions);
}

// ---- files --------------------------------------------------------------

void write_text_atomic(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out << text;
    if (!out) throw DataError("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

// Output of an earlier stage.
const fs::path& stage_input(const fs::path& path) {
  if (!fs::exists(path)) throw DataError("cannot open " + path.string() + " (has the previous stage run?)");
  return path;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(stage_input(path), std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json read_json(const fs::path& path) {
  try {
    return nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

PromptRegistry prompts_for(const PipelineConfig& cfg) {
  return cfg.prompts.empty() ? PromptRegistry::defaults() : PromptRegistry::load(cfg.prompts);
}

QuestionBank bank_for(const PipelineConfig& cfg) {
  return cfg.question_bank.empty() ? QuestionBank::defaults() : QuestionBank::load(cfg.question_bank);
}

void expect_dim(const std::vector<Eigen::VectorXf>& vectors, int dim, const std::string& what) {
  for (const auto& v : vectors)
    if (v.size() != dim)
      throw DimensionError(fmt::format("{}: provider returned dim {}, expected {}", what, v.size(), dim));
}

/// Text features in fusion order: headline {T_s, T_f}, ablation {E_os, E_cs, E_fo}.
std::map<std::string, CallFeatures> load_features(const WorkLayout& layout, const std::vector<std::string>& ids,
                                                  bool ablation) {
  const std::vector<std::string> kinds = ablation ? std::vector<std::string>{"eos", "ecs", "tf"}
                                                  : std::vector<std::string>{"ts", "tf"};
  std::map<std::string, CallFeatures> out;
  for (const auto& id : ids) {
    CallFeatures f{read_embedding_file(stage_input(layout.audio(id))), read_embedding_file(stage_input(layout.sentences(id))), {}};
    for (const auto& k : kinds) f.text.push_back(as_text_embedding(read_embedding_file(stage_input(layout.text_feature(id, k)))));
    out.emplace(id, std::move(f));
  }
  return out;
}

std::map<int, Dataset<float>> datasets(const std::vector<std::string>& ids,
                                       const std::map<std::string, CallFeatures>& features, const LabelIndex& labels) {
  std::map<int, Dataset<float>> out;
  for (int tau : kResultTaus) out.emplace(tau, assemble_dataset<float>(ids, features, labels, tau));
  return out;
}

}  // namespace

// ---- PipelineConfig -------------------------------------------------------

PipelineConfig PipelineConfig::parse(std::string_view toml_text, const fs::path& base) {
  toml::table root;
  try {
    root = toml::parse(toml_text, std::string_view("config.toml"));
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << e;
    bad_config(msg.str());
  }
  check_keys(root, "root", {"paths", "embedding", "llm", "chunking", "retrieval", "model", "train"});
  PipelineConfig c;
  c.work_dir = base / "work";

  const auto* paths = sub_table(root, "paths", "root");
  if (!paths) bad_config("missing [paths]");
  check_keys(*paths, "paths", {"transcripts", "prices", "work_dir", "prompts", "question_bank"});
  read_path(*paths, "transcripts", "paths", base, c.transcripts);
  read_path(*paths, "prices", "paths", base, c.prices);
  read_path(*paths, "work_dir", "paths", base, c.work_dir);
  read_path(*paths, "prompts", "paths", base, c.prompts);
  read_path(*paths, "question_bank", "paths", base, c.question_bank);
  if (c.transcripts.empty() || c.prices.empty()) bad_config("[paths] needs transcripts and prices");

  if (const auto* t = sub_table(root, "embedding", "root")) {
    check_keys(*t, "embedding", {"provider", "seed", "files_dir", "audio_capacity", "sentence_capacity", "remote"});
    read_value(*t, "provider", "embedding", c.embedding_provider);
    read_value(*t, "seed", "embedding", c.embedding_seed);
    read_path(*t, "files_dir", "embedding", base, c.embedding_files_dir);
    read_value(*t, "audio_capacity", "embedding", c.audio_capacity);
    read_value(*t, "sentence_capacity", "embedding", c.sentence_capacity);
    if (const auto* r = sub_table(*t, "remote", "embedding")) read_endpoint(*r, "embedding.remote", c.embedding_remote);
  }
  if (const auto* t = sub_table(root, "llm", "root")) {
    check_keys(*t, "llm", {"client", "mock_tag", "max_in_flight", "remote"});
    read_value(*t, "client", "llm", c.llm_client);
    read_value(*t, "mock_tag", "llm", c.mock_tag);
    read_value(*t, "max_in_flight", "llm", c.chunking.max_in_flight);
    c.retrieval.max_in_flight = c.chunking.max_in_flight;
    if (const auto* r = sub_table(*t, "remote", "llm")) read_endpoint(*r, "llm.remote", c.llm_remote);
  }
  if (const auto* t = sub_table(root, "chunking", "root")) {
    check_keys(*t, "chunking", {"max_chars", "overlap"});
    read_value(*t, "max_chars", "chunking", c.chunking.max_chars);
    read_value(*t, "overlap", "chunking", c.chunking.overlap_chars);
  }
  if (const auto* t = sub_table(root, "retrieval", "root")) {
    check_keys(*t, "retrieval", {"k"});
    read_value(*t, "k", "retrieval", c.retrieval.k);
  }
  if (const auto* t = sub_table(root, "model", "root")) {
    check_keys(*t, "model", {"num_blocks", "num_heads", "ffn_hidden", "fusion_dim", "head_hidden"});
    int blocks = c.model.audio.num_blocks, heads = c.model.audio.num_heads, ffn = c.model.audio.ffn_hidden;
    read_value(*t, "num_blocks", "model", blocks);
    read_value(*t, "num_heads", "model", heads);
    read_value(*t, "ffn_hidden", "model", ffn);
    for (auto* m : {&c.model.audio, &c.model.text}) {
      m->num_blocks = blocks;
      m->num_heads = heads;
      m->ffn_hidden = ffn;
    }
    read_value(*t, "fusion_dim", "model", c.model.fusion_dim);
    read_value(*t, "head_hidden", "model", c.model.head_hidden);
  }
  if (const auto* t = sub_table(root, "train", "root")) {
    check_keys(*t, "train",
               {"batch_sizes", "learning_rates", "epochs", "seed", "split_ratio", "validation_fraction"});
    read_array(*t, "batch_sizes", "train", c.train.batch_sizes);
    read_array(*t, "learning_rates", "train", c.train.learning_rates);
    read_value(*t, "epochs", "train", c.train.epochs);
    read_value(*t, "seed", "train", c.train.seed);
    read_value(*t, "split_ratio", "train", c.split_ratio);
    read_value(*t, "validation_fraction", "train", c.train.validation_fraction);
  }

  if (c.embedding_provider != "stub" && c.embedding_provider != "files" && c.embedding_provider != "remote")
    bad_config("embedding.provider must be stub, files or remote");
  if (c.llm_client != "mock" && c.llm_client != "remote") bad_config("llm.client must be mock or remote");
  if (c.audio_capacity < 1 || c.sentence_capacity < 1) bad_config("capacities must be positive");
  if (c.chunking.max_chars == 0 || c.chunking.overlap_chars >= c.chunking.max_chars)
    bad_config("chunking needs 0 <= overlap < max_chars");
  if (c.retrieval.k == 0) bad_config("retrieval.k must be positive");
  if (!(c.split_ratio > 0.0 && c.split_ratio < 1.0)) bad_config("train.split_ratio must be in (0, 1)");
  c.model.validate();
  c.train.validate();
  return c;
}

PipelineConfig PipelineConfig::load(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) bad_config("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), fs::absolute(path).parent_path());
}

model::ModelConfig PipelineConfig::ablation_model() const {
  model::ModelConfig m = model;
  m.feature_dims = {kTextDim, kTextDim, kTextDim};
  return m;
}

// ---- split record ---------------------------------------------------------

void write_split(const SplitRecord& split, const fs::path& path) {
  nlohmann::ordered_json j;
  j["train"] = split.train_ids;
  j["test"] = split.test_ids;
  j["excluded"] = split.excluded_ids;
  write_text_atomic(path, j.dump(2) + "\n");
}

SplitRecord read_split(const fs::path& path) {
  const auto j = read_json(path);
  try {
    return {j.at("train").get<std::vector<std::string>>(), j.at("test").get<std::vector<std::string>>(),
            j.value("excluded", std::vector<std::string>{})};
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

// ---- factories ------------------------------------------------------------

std::unique_ptr<EmbeddingProvider> make_embedding_provider(const PipelineConfig& cfg,
                                                           const std::vector<EccCall>& calls) {
  if (cfg.embedding_provider == "stub") return stub_provider(cfg.embedding_seed);
  if (cfg.embedding_files_dir.empty()) bad_config("embedding.files_dir is required for the " + cfg.embedding_provider + " provider");
  if (cfg.embedding_provider == "files") return std::make_unique<FileEmbeddingProvider>(cfg.embedding_files_dir, calls);
  return std::make_unique<CompositeEmbeddingProvider>(
      std::make_shared<FileEmbeddingProvider>(cfg.embedding_files_dir, calls),
      std::make_shared<RemoteEmbeddingProvider>(cfg.embedding_remote));
}

std::unique_ptr<LlmClient> make_llm_client(const PipelineConfig& cfg) {
  if (cfg.llm_client == "mock") return std::make_unique<MockLlmClient>(cfg.mock_tag);
  return std::make_unique<RemoteChatClient>(cfg.llm_remote);
}

// ---- stages ---------------------------------------------------------------

IngestReport run_ingest(const PipelineConfig& cfg) {
  const WorkLayout layout(cfg.work_dir);
  const auto calls = load_transcripts(cfg.transcripts);
  const auto prices = load_prices(cfg.prices);
  if (calls.empty()) throw DataError("no calls in " + cfg.transcripts.string());
  IngestReport report{calls.size(), 0, prices.size()};
  for (const auto& c : calls) {
    if (!prices.contains(c.ticker)) throw DataError("call " + c.call_id + ": no prices for ticker " + c.ticker);
    report.sentences += c.sentences.size();
  }
  fs::create_directories(layout.root());
  std::ostringstream corpus;
  write_transcripts(corpus, calls);
  write_text_atomic(layout.corpus(), corpus.str());
  write_prices(layout.prices(), prices);
  return report;
}

LabelReport run_label(const PipelineConfig& cfg) {
  const WorkLayout layout(cfg.work_dir);
  const auto calls = load_transcripts(stage_input(layout.corpus()));
  const auto prices = load_prices(stage_input(layout.prices()));
  const auto set = build_labels(calls, prices, kDefaultTaus);
  write_labels_csv(layout.labels(), set.labels);

  std::string issues = "call_id,tau,reason\n";
  std::set<std::string> incomplete;
  for (const auto& i : set.issues) {
    std::string reason = i.reason;
    std::replace(reason.begin(), reason.end(), ',', ';');
    issues += fmt::format("{},{},{}\n", i.call_id, i.tau, reason);
    incomplete.insert(i.call_id);
  }
  write_text_atomic(layout.label_issues(), issues);

  std::vector<EccCall> complete;
  SplitRecord split;
  for (const auto& c : calls) {
    if (incomplete.contains(c.call_id))
      split.excluded_ids.push_back(c.call_id);
    else
      complete.push_back(c);
  }
  const auto ds = temporal_split(complete, cfg.split_ratio);
  split.train_ids = ds.train_ids;
  split.test_ids = ds.test_ids;
  if (split.train_ids.empty() || split.test_ids.empty())
    throw DataError(fmt::format("split of {} fully labelled calls leaves an empty train or test set", complete.size()));
  write_split(split, layout.split());
  return {set.labels.size(), set.issues.size(), split.train_ids.size(), split.test_ids.size(),
          split.excluded_ids.size()};
}

EmbedReport run_embed(const PipelineConfig& cfg, const EmbeddingProvider& provider) {
  const WorkLayout layout(cfg.work_dir);
  auto calls = load_transcripts(stage_input(layout.corpus()));
  fs::create_directories(layout.embeddings());
  EmbedReport report;
  for (auto& call : calls) {
    const auto clips = audio_clip_ids(call);
    const auto audio = provider.embed_audio_frames(clips);
    expect_dim(audio, kAudioDim, "audio " + call.call_id);
    auto padded_audio = pad_to_capacity(audio, cfg.audio_capacity);

    std::vector<std::string> texts;
    for (const auto& s : call.sentences) texts.push_back(s.text);
    const auto sentences = provider.embed_sentences(texts);
    expect_dim(sentences, kSentenceDim, "sentences " + call.call_id);
    auto padded_sentences = pad_to_capacity(sentences, cfg.sentence_capacity);

    write_embedding_file(padded_audio.matrix, layout.audio(call.call_id));
    write_embedding_file(padded_sentences.matrix, layout.sentences(call.call_id));
    call.audio_embedding_ref = layout.audio(call.call_id).filename().string();
    call.sentence_embedding_ref = layout.sentences(call.call_id).filename().string();
    report.truncated_rows += padded_audio.truncated + padded_sentences.truncated;
    ++report.calls;
  }
  std::ostringstream corpus;
  write_transcripts(corpus, calls);
  write_text_atomic(layout.corpus(), corpus.str());
  return report;
}

AnalyzeReport run_analyze(const PipelineConfig& cfg, const LlmClient& client, const EmbeddingProvider& provider) {
  const WorkLayout layout(cfg.work_dir);
  const auto calls = load_transcripts(stage_input(layout.corpus()));
  const auto prompts = prompts_for(cfg);
  const auto bank = bank_for(cfg);
  fs::create_directories(layout.analysis());
  AnalyzeReport report;
  for (const auto& call : calls) {
    const auto chunks = chunk_text(transcript_text(call), cfg.chunking.max_chars, cfg.chunking.overlap_chars);
    const auto summary = summarize_chunks(client, prompts, chunks, cfg.chunking.max_in_flight);
    const auto index = build_index(provider, chunks);
    const auto focus = run_question_bank(client, provider, index, chunks, bank, prompts, cfg.retrieval);

    nlohmann::ordered_json sj;
    sj["call_id"] = call.call_id;
    sj["chunks"] = nlohmann::ordered_json::array();
    for (const auto& c : chunks)
      sj["chunks"].push_back({{"chunk_index", c.chunk_index}, {"begin", c.begin}, {"end", c.end}});
    sj["chunk_summaries"] = summary.chunk_summaries;
    sj["overall_summary"] = summary.overall_summary;
    write_text_atomic(layout.summary(call.call_id), sj.dump(2) + "\n");
    write_text_atomic(layout.focus_bundle(call.call_id), focus_bundle_to_json(focus).dump(2) + "\n");

    const std::pair<const char*, TextEmbedding> feats[] = {
        {"ts", summary_embedding(provider, summary)},
        {"tf", focus_embedding(provider, focus)},
        {"eos", overall_summary_embedding(provider, summary)},
        {"ecs", chunk_summaries_embedding(provider, summary)},
    };
    for (const auto& [kind, emb] : feats) {
      if (emb.dim() != kTextDim)
        throw DimensionError(fmt::format("{} {}: provider returned dim {}, expected {}", kind, call.call_id,
                                         emb.dim(), kTextDim));
      write_embedding_file(as_matrix(emb), layout.text_feature(call.call_id, kind));
    }
    report.chunks += chunks.size();
    report.question_failures += focus.failures.size();
    ++report.calls;
  }
  return report;
}

TrainReport run_train(const PipelineConfig& cfg) {
  const WorkLayout layout(cfg.work_dir);
  const auto split = read_split(layout.split());
  const auto labels = index_labels(read_labels_csv(stage_input(layout.labels())));
  const auto features = load_features(layout, split.train_ids, false);
  const auto train = datasets(split.train_ids, features, labels);
  fs::create_directories(layout.models());
  TrainReport report;
  for (const auto& [tau, data] : train) {
    TrainConfig tc = cfg.train;
    tc.target_tau = tau;
    auto result = train_with_grid<float>(cfg.model, data, tc);
    write_checkpoint({tau, cfg.model, result.params}, layout.model(tau));
    write_history_csv(result.history, layout.history(tau));
    std::string grid = "batch_size,learning_rate,validation_mse,error\n";
    std::size_t diverged = 0;
    for (const auto& g : result.grid) {
      grid += fmt::format("{},{:.17g},{:.17g},{}\n", g.batch_size, g.learning_rate, g.validation_mse,
                          g.error.empty() ? "" : "diverged");
      diverged += g.error.empty() ? 0 : 1;
    }
    write_text_atomic(layout.grid(tau), grid);
    report.models.push_back({tau, result.batch_size, result.learning_rate,
                             result.history.empty() ? 0.0 : result.history.back().loss, diverged});
  }
  return report;
}

ResultTable run_eval(const PipelineConfig& cfg) {
  const WorkLayout layout(cfg.work_dir);
  const auto split = read_split(layout.split());
  const auto labels = index_labels(read_labels_csv(stage_input(layout.labels())));
  std::map<int, model::ModelParams<float>> models;
  std::optional<model::ModelConfig> mcfg;
  for (int tau : kResultTaus) {
    auto ck = read_checkpoint(stage_input(layout.model(tau)));
    if (ck.tau != tau) throw DataError(fmt::format("{} holds a tau={} model", layout.model(tau).string(), ck.tau));
    if (mcfg && !(*mcfg == ck.config)) throw DataError("checkpoints disagree on the model configuration");
    mcfg = ck.config;
    models.emplace(tau, std::move(ck.params));
  }
  const auto features = load_features(layout, split.test_ids, false);
  const auto test = datasets(split.test_ids, features, labels);
  ResultTable table{{evaluate<float>(std::string(kHeadlineConfigName), *mcfg, models, test)}};
  write_text_atomic(layout.results_csv(), results_to_csv(table));
  write_text_atomic(layout.results_txt(), render_results_text(table));
  return table;
}

AblationOutcome run_ablate(const PipelineConfig& cfg) {
  const WorkLayout layout(cfg.work_dir);
  const auto split = read_split(layout.split());
  const auto labels = index_labels(read_labels_csv(stage_input(layout.labels())));
  const auto train = datasets(split.train_ids, load_features(layout, split.train_ids, true), labels);
  const auto test = datasets(split.test_ids, load_features(layout, split.test_ids, true), labels);
  auto outcome = run_ablation<float>(cfg.ablation_model(), train, test, ablation_presets(), cfg.train);
  write_text_atomic(layout.ablation_csv(), results_to_csv(outcome.table));
  std::string txt = render_results_text(outcome.table);
  for (const auto& f : outcome.failures) txt += "failed: " + f + "\n";
  write_text_atomic(layout.ablation_txt(), txt);
  return outcome;
}

ResultTable run_pipeline(const PipelineConfig& cfg, bool with_ablation) {
  run_ingest(cfg);
  run_label(cfg);
  const auto calls = load_transcripts(WorkLayout(cfg.work_dir).corpus());
  const auto provider = make_embedding_provider(cfg, calls);
  run_embed(cfg, *provider);
  const auto client = make_llm_client(cfg);
  run_analyze(cfg, *client, *provider);
  run_train(cfg);
  auto table = run_eval(cfg);
  if (with_ablation) run_ablate(cfg);
  return table;
}

}  // namespace ecc
