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

// ecc: command-line driver for the volatility pipeline.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "ecc/checkpoint.hpp"
#include "ecc/errors.hpp"
#include "ecc/pipeline.hpp"

namespace {

using ecc::PipelineConfig;

int inspect(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ecc::DataError("cannot open " + path);
  char magic[4] = {};
  in.read(magic, 4);
  if (std::string_view(magic, 4) == "ECCM") {
    const auto ck = ecc::read_checkpoint(path);
    const auto& c = ck.config;
    fmt::print("checkpoint {}\n  tau: {}\n", path, ck.tau);
    for (const auto& [name, m] : {std::pair{"audio", c.audio}, std::pair{"text", c.text}})
      fmt::print("  {} encoder: blocks={} heads={} model_dim={} ffn={}\n", name, m.num_blocks, m.num_heads,
                 m.model_dim, m.ffn_width());
    fmt::print("  fusion_dim: {}\n  head_hidden: {}\n  feature_dims:", c.fusion_dim, c.head_hidden);
    for (int d : c.feature_dims) fmt::print(" {}", d);
    fmt::print("\n  parameters: {}\n", ck.params.parameter_count());
    return 0;
  }
  const auto h = ecc::read_embedding_header(path);
  const auto m = ecc::read_embedding_file(path);
  fmt::print("embedding {}\n  version: {}\n  dtype: f32\n  rows: {}\n  cols: {}\n  valid rows: {}\n", path, h.version,
             h.rows, h.cols, m.valid_count());
  if (m.valid_count() > 0) {
    const auto v = m.valid_rows<double>();
    const double mean = v.mean();
    const double sd = std::sqrt((v.array() - mean).square().mean());
    fmt::print("  min: {:.6g}\n  max: {:.6g}\n  mean: {:.6g}\n  std: {:.6g}\n  mean row L2: {:.6g}\n", v.minCoeff(),
               v.maxCoeff(), mean, sd, v.rowwise().norm().mean());
  }
  return 0;
}

void print_table(const ecc::ResultTable& table, const std::string& format) {
  std::cout << (format == "csv" ? ecc::results_to_csv(table) : ecc::render_results_text(table));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Earnings-call volatility pipeline"};
  app.require_subcommand(1);

  std::string config_path = "config.toml";
  auto add = [&](const char* name, const char* help) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("-c,--config", config_path, "Path to config.toml")->capture_default_str();
    return sub;
  };

  auto* ingest = add("ingest", "Validate transcripts and prices into the work directory");
  auto* label = add("label", "Compute volatility labels and the temporal split");
  auto* embed = add("embed", "Write audio and sentence embedding matrices");
  std::string provider;
  long long seed = -1;
  embed->add_option("--provider", provider, "stub, files or remote (overrides the config)")
      ->check(CLI::IsMember({"stub", "files", "remote"}));
  embed->add_option("--seed", seed, "Stub embedding seed (overrides the config)")->check(CLI::NonNegativeNumber);
  auto* analyze = add("analyze", "Summaries, question-bank answers and text features");
  std::string llm;
  analyze->add_option("--llm", llm, "mock or remote (overrides the config)")->check(CLI::IsMember({"mock", "remote"}));
  auto* train = add("train", "Grid-search and train one model per horizon");
  std::string format = "text";
  auto* eval = add("eval", "Evaluate the trained models on the test split");
  eval->add_option("--format", format, "text or csv")->check(CLI::IsMember({"text", "csv"}));
  auto* ablate = add("ablate", "Train and evaluate the seven ablation presets");
  ablate->add_option("--format", format, "text or csv")->check(CLI::IsMember({"text", "csv"}));
  auto* run = add("run", "ingest, label, embed, analyze, train and eval in one go");
  bool with_ablation = false;
  run->add_flag("--ablate", with_ablation, "Also run the ablation presets");
  run->add_option("--format", format, "text or csv")->check(CLI::IsMember({"text", "csv"}));
  auto* insp = app.add_subcommand("inspect", "Print the header and statistics of an .ecce or .eccm file");
  std::string inspect_path;
  insp->add_option("file", inspect_path, "File to inspect")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*insp) return inspect(inspect_path);
    PipelineConfig cfg = PipelineConfig::load(config_path);
    if (!provider.empty()) cfg.embedding_provider = provider;
    if (seed >= 0) cfg.embedding_seed = static_cast<std::uint64_t>(seed);
    if (!llm.empty()) cfg.llm_client = llm;

    if (*ingest) {
      const auto r = ecc::run_ingest(cfg);
      fmt::print(stderr, "ingest: {} calls, {} sentences, {} tickers\n", r.calls, r.sentences, r.tickers);
    } else if (*label) {
      const auto r = ecc::run_label(cfg);
      fmt::print(stderr, "label: {} labels, {} issues; split {} train / {} test, {} excluded\n", r.labels, r.issues,
                 r.train, r.test, r.excluded);
    } else if (*embed) {
      const auto calls = ecc::load_transcripts(ecc::WorkLayout(cfg.work_dir).corpus());
      const auto p = ecc::make_embedding_provider(cfg, calls);
      const auto r = ecc::run_embed(cfg, *p);
      fmt::print(stderr, "embed: {} calls, {} rows truncated\n", r.calls, r.truncated_rows);
    } else if (*analyze) {
      const auto calls = ecc::load_transcripts(ecc::WorkLayout(cfg.work_dir).corpus());
      const auto p = ecc::make_embedding_provider(cfg, calls);
      const auto client = ecc::make_llm_client(cfg);
      const auto r = ecc::run_analyze(cfg, *client, *p);
      fmt::print(stderr, "analyze: {} calls, {} chunks, {} failed questions\n", r.calls, r.chunks, r.question_failures);
    } else if (*train) {
      for (const auto& m : ecc::run_train(cfg).models)
        fmt::print(stderr, "train: tau={} batch_size={} lr={:g} final loss={:.6g} diverged cells={}\n", m.tau,
                   m.batch_size, m.learning_rate, m.final_train_loss, m.diverged_cells);
    } else if (*eval) {
      print_table(ecc::run_eval(cfg), format);
    } else if (*ablate) {
      const auto outcome = ecc::run_ablate(cfg);
      print_table(outcome.table, format);
      for (const auto& f : outcome.failures) fmt::print(stderr, "ablate: {}\n", f);
      if (outcome.table.rows.empty()) return 2;
    } else if (*run) {
      print_table(ecc::run_pipeline(cfg, with_ablation), format);
    }
    return 0;
  } catch (const std::invalid_argument& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  } catch (const ecc::ProviderError& e) {
    fmt::print(stderr, "provider error: {}\n", e.what());
    return 3;
  } catch (const ecc::ClientError& e) {
    fmt::print(stderr, "client error: {}\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 2;
  }
}
