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

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <string>

#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include "ecc/embedding.hpp"
#include "ecc/evaluation.hpp"
#include "ecc/pipeline.hpp"
#include "support/temp_dir.hpp"

namespace fs = std::filesystem;
using ecc::testing::slurp;
using ecc::testing::spit;
using ecc::testing::TempDir;
using ::testing::HasSubstr;

namespace {

struct Outcome {
  int code = -1;
  std::string out;
};

// stderr goes to the test log; stdout is captured.
Outcome run(const std::string& args) {
  const std::string cmd = std::string("\"") + ECC_CLI_PATH + "\" " + args;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return {};
  Outcome o;
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) o.out.append(buf.data(), n);
  const int status = pclose(pipe);
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return o;
}

// Fixture config with absolute input paths, a private work dir and a tiny
// training budget.
fs::path write_config(const TempDir& dir, int epochs) {
  const fs::path fx = ECC_FIXTURE_DIR;
  std::string text = slurp(fx / "config.toml");
  auto replace = [&](const std::string& from, const std::string& to) {
    const auto pos = text.find(from);
    ASSERT_NE(pos, std::string::npos) << from;
    text.replace(pos, from.size(), to);
  };
  replace("\"transcripts.jsonl\"", "\"" + (fx / "transcripts.jsonl").string() + "\"");
  replace("\"prices.csv\"", "\"" + (fx / "prices.csv").string() + "\"");
  replace("work_dir = \"work\"", "work_dir = \"" + (dir / "work").string() + "\"");
  replace("batch_sizes = [2, 4]", "batch_sizes = [2]");
  replace("learning_rates = [1e-3, 1e-5]", "learning_rates = [1e-3]");
  replace("epochs = 10", "epochs = " + std::to_string(epochs));
  spit(dir / "config.toml", text);
  return dir / "config.toml";
}

std::string cfg_arg(const fs::path& p) { return "-c \"" + p.string() + "\""; }

}  // namespace

TEST(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(run("2>/dev/null").code, 1);
  EXPECT_EQ(run("frobnicate 2>/dev/null").code, 1);
  EXPECT_EQ(run("eval --format xml 2>/dev/null").code, 1);
  EXPECT_EQ(run("inspect 2>/dev/null").code, 1);
}

TEST(Cli, HelpExitsZero) {
  const auto o = run("--help");
  EXPECT_EQ(o.code, 0);
  EXPECT_THAT(o.out, HasSubstr("ablate"));
}

TEST(Cli, BadConfigExitsOne) {
  TempDir dir;
  spit(dir / "config.toml", "[paths]\ntranscripts = 'x'\n");
  EXPECT_EQ(run("ingest " + cfg_arg(dir / "config.toml") + " 2>/dev/null").code, 1);
  EXPECT_EQ(run("ingest " + cfg_arg(dir / "missing.toml") + " 2>/dev/null").code, 1);
}

TEST(Cli, MissingStageInputExitsTwo) {
  TempDir dir;
  const auto cfg = write_config(dir, 1);
  EXPECT_EQ(run("label " + cfg_arg(cfg) + " 2>/dev/null").code, 2);
  EXPECT_EQ(run("inspect \"" + (dir / "nothing.ecce").string() + "\" 2>/dev/null").code, 2);
}

TEST(Cli, RemoteWithoutServerExitsThree) {
  TempDir dir;
  const auto cfg = write_config(dir, 1);
  for (const char* stage : {"ingest", "label", "embed"})
    ASSERT_EQ(run(std::string(stage) + " " + cfg_arg(cfg) + " 2>/dev/null").code, 0) << stage;
  spit(cfg, slurp(cfg) + "\n[llm.remote]\nbase_url = \"http://127.0.0.1:9/v1\"\nretries = 0\n"
                          "retry_backoff_seconds = 0\n");
  EXPECT_EQ(run("analyze --llm remote " + cfg_arg(cfg) + " 2>/dev/null").code, 3);
}

TEST(Cli, EmbedStubIsDeterministicAndInspectable) {
  TempDir a, b;
  for (const TempDir* d : {&a, &b}) {
    const auto cfg = write_config(*d, 1);
    ASSERT_EQ(run("ingest " + cfg_arg(cfg) + " 2>/dev/null").code, 0);
    ASSERT_EQ(run("embed --seed 11 " + cfg_arg(cfg) + " 2>/dev/null").code, 0);
  }
  const auto fa = a / "work" / "embeddings" / "ACME-2023Q1.sentences.ecce";
  const auto fb = b / "work" / "embeddings" / "ACME-2023Q1.sentences.ecce";
  ASSERT_TRUE(fs::exists(fa));
  EXPECT_EQ(slurp(fa), slurp(fb));

  const auto o = run("inspect \"" + fa.string() + "\"");
  EXPECT_EQ(o.code, 0);
  EXPECT_THAT(o.out, HasSubstr("cols: 768"));
  EXPECT_THAT(o.out, HasSubstr("valid rows: "));
}

TEST(Cli, StagesThenEvalCsvParsesBack) {
  TempDir dir;
  const auto cfg = write_config(dir, 1);
  for (const char* stage : {"ingest", "label", "embed", "analyze", "train"})
    ASSERT_EQ(run(std::string(stage) + " " + cfg_arg(cfg) + " 2>/dev/null").code, 0) << stage;

  const auto o = run("eval --format csv " + cfg_arg(cfg) + " 2>/dev/null");
  ASSERT_EQ(o.code, 0);
  const auto table = ecc::results_from_csv(o.out);
  ASSERT_EQ(table.rows.size(), 1u);
  EXPECT_EQ(table.rows[0].config, ecc::kHeadlineConfigName);
  EXPECT_EQ(o.out, slurp(dir / "work" / "results.csv"));

  const auto text = run("eval " + cfg_arg(cfg) + " 2>/dev/null");
  EXPECT_THAT(text.out, HasSubstr("MSE_avg"));

  const auto ck = run("inspect \"" + (dir / "work" / "models" / "tau_7.eccm").string() + "\"");
  EXPECT_EQ(ck.code, 0);
  EXPECT_THAT(ck.out, HasSubstr("tau: 7"));
  EXPECT_THAT(ck.out, HasSubstr("fusion_dim: 32"));

  const auto ab = run("ablate --format csv " + cfg_arg(cfg) + " 2>/dev/null");
  ASSERT_EQ(ab.code, 0);
  const auto ablation = ecc::results_from_csv(ab.out);
  EXPECT_EQ(ablation.rows.size(), 7u);
  EXPECT_EQ(ablation, ecc::results_from_csv(slurp(dir / "work" / "ablation.csv")));
}

TEST(Cli, RunMatchesItself) {
  TempDir a, b;
  const auto oa = run("run --format csv " + cfg_arg(write_config(a, 1)) + " 2>/dev/null");
  const auto ob = run("run --format csv " + cfg_arg(write_config(b, 1)) + " 2>/dev/null");
  ASSERT_EQ(oa.code, 0);
  ASSERT_EQ(ob.code, 0);
  EXPECT_EQ(oa.out, ob.out);
}
