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

// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "ecc/corpus.hpp"
#include "ecc/embedding.hpp"
#include "ecc/evaluation.hpp"
#include "ecc/model/attention.hpp"
#include "ecc/model/fusion_model.hpp"
#include "ecc/pipeline.hpp"
#include "ecc/rag.hpp"
#include "ecc/training.hpp"
#include "ecc/volatility.hpp"
#include "support/gradient_check.hpp"
#include "support/learnability.hpp"
#include "support/oracles.hpp"
#include "support/random_embeddings.hpp"
#include "support/retrieval_cases.hpp"
#include "support/synthetic.hpp"
#include "support/temp_dir.hpp"

namespace fs = std::filesystem;

namespace {

using namespace ecc;
using Clock = std::chrono::steady_clock;

struct Verdict {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

model::Matrix<double> random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  model::Matrix<double> m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

std::vector<bool> random_mask(std::mt19937_64& rng, Eigen::Index n) {
  std::vector<bool> m(static_cast<std::size_t>(n));
  for (auto&& b : m) b = (rng() % 3) != 0;
  m[rng() % m.size()] = true;
  return m;
}

Verdict volatility_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1001);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int tau = kResultTaus[static_cast<std::size_t>(trial) % kResultTaus.size()];
    const auto s = testing::random_walk_prices("X", parse_date("2019-01-02"), 90, rng, 0.005 + 0.001 * (trial % 30));
    const auto returns = compute_returns(s);
    const std::size_t last = 31 + rng() % 50;
    std::vector<double> closes;
    for (const auto& o : s.observations) closes.push_back(o.adj_close);
    const double got = compute_volatility(returns, returns.returns[last].trading_date, tau);
    worst = std::max(worst, std::abs(got - oracle::log_volatility(closes, last, tau)));
  }
  const double t = seconds_since(t0);
  return {worst <= 1e-12 && t < 1.0, fmt::format("100 windows, max |diff| {:.3g}, {:.3f} s", worst, t)};
}

Verdict volatility_scale_law() {
  std::mt19937_64 rng(1002);
  std::normal_distribution<double> n(0.0, 0.02);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> w(static_cast<std::size_t>(kResultTaus[static_cast<std::size_t>(trial) % 4] + 1));
    for (auto& x : w) x = n(rng);
    const double base = log_volatility(w);
    for (double k : {2.0, 10.0}) {
      std::vector<double> scaled = w;
      for (auto& x : scaled) x *= k;
      worst = std::max(worst, std::abs(log_volatility(scaled) - base - std::log(k)));
    }
  }
  return {worst <= 1e-10, fmt::format("100 windows x k in {{2, 10}}, max |diff| {:.3g}", worst)};
}

Verdict gradient_check() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1003);
  const auto cfg = testing::tiny_config();
  const auto params = model::init_params<double>(cfg, 3);
  std::vector<model::Sample<double>> samples;
  model::ColVector<double> labels(3);
  for (int i = 0; i < 3; ++i) {
    samples.push_back(testing::tiny_sample(rng, cfg, 3));
    labels(i) = std::normal_distribution<double>(-1.0, 1.0)(rng);
  }
  const auto r = testing::check_gradients(params, cfg, samples, labels);
  const double t = seconds_since(t0);
  return {r.entries == params.parameter_count() && r.worst_relative_error < 1e-4 && t < 30.0,
          fmt::format("{} parameters, worst relative error {:.3g} at {}, {:.2f} s", r.entries,
                      r.worst_relative_error, r.worst_entry, t)};
}

Verdict attention_masking() {
  std::mt19937_64 rng(1004);
  double worst_sum = 0.0, worst_masked = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto n = static_cast<Eigen::Index>(1 + rng() % 16);
    const auto q = random_matrix(rng, n, 4, 3.0), k = random_matrix(rng, n, 4, 3.0);
    const auto mask = random_mask(rng, n);
    const auto p = model::attention_weights<double>(q, k, mask);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!mask[static_cast<std::size_t>(i)]) continue;
      worst_sum = std::max(worst_sum, std::abs(p.row(i).sum() - 1.0));
      for (Eigen::Index j = 0; j < n; ++j)
        if (!mask[static_cast<std::size_t>(j)]) worst_masked = std::max(worst_masked, std::abs(p(i, j)));
    }
  }

  // The same call at two padded capacities and as bare valid rows.
  model::ModelConfig cfg;
  cfg.audio = {1, 4, 16, 32};
  cfg.text = {2, 4, 24, 0};
  cfg.feature_dims = {8, 8};
  cfg.fusion_dim = 8;
  cfg.head_hidden = 6;
  const auto params = model::init_params<double>(cfg, 4);
  std::normal_distribution<float> nf(0.0f, 1.0f);
  auto vectors = [&](int count, int dim) {
    std::vector<Eigen::VectorXf> v;
    for (int i = 0; i < count; ++i) v.push_back(Eigen::VectorXf::NullaryExpr(dim, [&] { return nf(rng); }));
    return v;
  };
  double worst_pad = 0.0;
  for (int call = 0; call < 20; ++call) {
    const int rows = 1 + static_cast<int>(rng() % 10);
    const auto a = vectors(rows, 16), s = vectors(rows, 24);
    const std::vector<TextEmbedding> feats{{vectors(1, 8)[0]}, {vectors(1, 8)[0]}};
    const int small = rows + static_cast<int>(rng() % 3), large = small + 5 + static_cast<int>(rng() % 20);
    const auto as = pad_to_capacity(a, small).matrix, ss = pad_to_capacity(s, small).matrix;
    const auto al = pad_to_capacity(a, large).matrix, sl = pad_to_capacity(s, large).matrix;
    const double y_small = model::predict_padded<double>(params, cfg, as, ss, feats);
    const double y_large = model::predict_padded<double>(params, cfg, al, sl, feats);
    const double y_valid = model::predict<double>(params, cfg, model::make_sample<double>(as, ss, feats));
    worst_pad = std::max({worst_pad, std::abs(y_small - y_large), std::abs(y_small - y_valid)});
  }
  return {worst_sum <= 1e-6 && worst_masked < 1e-12 && worst_pad < 1e-6,
          fmt::format("max |row sum - 1| {:.3g}, max masked weight {:.3g}, max padding diff {:.3g} over 20 calls",
                      worst_sum, worst_masked, worst_pad)};
}

Verdict retrieval_oracle() {
  std::mt19937_64 rng(1005);
  std::size_t mismatches = 0, ties = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto c = testing::random_retrieval_case(rng, 64);
    const auto got = retrieve(build_index(c.provider, c.chunks), c.query, c.k);
    const auto want = oracle::brute_force_top_k(c.vectors, c.query, c.k);
    if (got.size() != want.size()) {
      ++mismatches;
      continue;
    }
    for (std::size_t i = 0; i < got.size(); ++i) {
      if (got[i].chunk_index != want[i].id || got[i].score != want[i].score) ++mismatches;
      if (i > 0 && want[i].score == want[i - 1].score) ++ties;
    }
  }
  return {mismatches == 0, fmt::format("100 indices, {} mismatched ranks, {} tied ranks", mismatches, ties)};
}

PipelineConfig fixture_in(const testing::TempDir& dir) {
  auto cfg = PipelineConfig::load(fs::path(ECC_FIXTURE_DIR) / "config.toml");
  cfg.work_dir = dir / "work";
  return cfg;
}

// Shared with the ablation check, which reuses the first run's work dir.
testing::TempDir e2e_dir;

Verdict deterministic_end_to_end() {
  const auto t0 = Clock::now();
  testing::TempDir second;
  run_pipeline(fixture_in(e2e_dir));
  run_pipeline(fixture_in(second));
  const double t = seconds_since(t0);
  const auto a = testing::slurp(WorkLayout(e2e_dir / "work").results_csv());
  const auto b = testing::slurp(WorkLayout(second / "work").results_csv());
  const bool same = !a.empty() && a == b;
  return {same && t < 120.0,
          fmt::format("results.csv {} ({} bytes), two runs in {:.1f} s", same ? "byte-identical" : "DIFFERS",
                      a.size(), t)};
}

Verdict synthetic_learnability() {
  const auto t0 = Clock::now();
  const auto corpus = testing::linear_corpus(64, 3, 21);
  const double residual = testing::least_squares_residual(corpus.design, corpus.labels);
  const auto cfg = testing::learnability_model();
  auto params = model::init_params<float>(cfg, 42);
  int reached = -1;
  double mse = std::nan("");
  fit<float>(params, cfg, corpus.data, nullptr, 8, 1e-3, 200, 42, {}, {},
             [&](int epoch, const model::ModelParams<float>& p) {
               mse = dataset_mse<float>(p, cfg, corpus.data);
               if (mse < 1e-2) reached = epoch;
               return reached >= 0;
             });
  const double t = seconds_since(t0);
  return {residual < 1e-9 && reached >= 0 && t < 120.0,
          fmt::format("least-squares residual {:.3g}; train MSE {:.4g} {} epoch {}, {:.1f} s", residual, mse,
                      reached >= 0 ? "at" : "still above 1e-2 after", reached >= 0 ? reached : 200, t)};
}

Verdict ablation_shape() {
  const auto cfg = fixture_in(e2e_dir);
  const auto outcome = run_ablate(cfg);
  const auto& rows = outcome.table.rows;
  bool ok = rows.size() == 7 && outcome.failures.empty();
  double worst_mean = 0.0;
  for (std::size_t i = 0; i < rows.size() && ok; ++i) {
    ok = rows[i].config == ablation_presets()[i].name && std::isfinite(rows[i].mse_mean);
    worst_mean =
        std::max(worst_mean, std::abs(rows[i].mse_mean - (rows[i].mse[0] + rows[i].mse[1] + rows[i].mse[2] +
                                                           rows[i].mse[3]) / 4.0));
  }
  ok = ok && worst_mean <= 1e-9 &&
       results_from_csv(testing::slurp(WorkLayout(cfg.work_dir).ablation_csv())) == outcome.table;

  // Zero-vector inputs against fusion with the term removed.
  std::mt19937_64 rng(1008);
  auto small = testing::tiny_config();
  small.feature_dims = {4, 4, 4};
  const auto p = model::init_params<double>(small, 8);
  double worst_drop = 0.0;
  for (const auto& preset : ablation_presets()) {
    const auto mask = preset.mask();
    for (int trial = 0; trial < 10; ++trial) {
      const auto s = testing::tiny_sample(rng, small, 1 + static_cast<Eigen::Index>(rng() % 4));
      auto zeroed = s;
      auto dropped_cfg = small;
      dropped_cfg.feature_dims.clear();
      auto dropped = p;
      dropped.fusion.w_features.clear();
      auto dropped_sample = s;
      dropped_sample.features.clear();
      for (std::size_t k = 0; k < 3; ++k) {
        if (mask.feature(k)) {
          dropped_cfg.feature_dims.push_back(small.feature_dims[k]);
          dropped.fusion.w_features.push_back(p.fusion.w_features[k]);
          dropped_sample.features.push_back(s.features[k]);
        } else {
          zeroed.features[k].setZero();
        }
      }
      if (!mask.audio) dropped.fusion.w_audio.setZero();
      if (!mask.text) dropped.fusion.w_text.setZero();
      const model::FeatureMask modality{mask.audio, mask.text, {}};
      const double via_mask = model::predict<double>(p, small, s, mask);
      const double via_zero = model::predict<double>(p, small, zeroed, modality);
      const double via_drop = model::predict<double>(dropped, dropped_cfg, dropped_sample);
      worst_drop = std::max({worst_drop, std::abs(via_mask - via_drop), std::abs(via_zero - via_drop)});
    }
  }
  ok = ok && worst_drop <= 1e-12;
  return {ok, fmt::format("{} rows, {} failures, max |mean - avg(tau)| {:.3g}, max |zeroed - dropped| {:.3g}",
                          rows.size(), outcome.failures.size(), worst_mean, worst_drop)};
}

Verdict split_integrity() {
  const auto calls = testing::dated_calls(572, 1009);
  const auto s = temporal_split(calls, 0.8);
  const auto train = select_calls(calls, s.train_ids);
  const auto test = select_calls(calls, s.test_ids);
  Date latest_train = train.front().call_date, earliest_test = test.front().call_date;
  for (const auto& c : train) latest_train = std::max(latest_train, c.call_date);
  for (const auto& c : test) earliest_test = std::min(earliest_test, c.call_date);
  std::vector<std::string> all = s.train_ids;
  all.insert(all.end(), s.test_ids.begin(), s.test_ids.end());
  std::sort(all.begin(), all.end());
  const bool disjoint = std::adjacent_find(all.begin(), all.end()) == all.end() && all.size() == calls.size();
  const bool ok = train.size() == 457 && test.size() == 115 && latest_train <= earliest_test && disjoint;
  return {ok, fmt::format("{}/{}, latest train {} <= earliest test {}, ids {}", train.size(), test.size(),
                          format_date(latest_train), format_date(earliest_test), disjoint ? "disjoint" : "OVERLAP")};
}

Verdict embedding_round_trip() {
  std::mt19937_64 rng(1010);
  testing::TempDir dir;
  int identical = 0;
  for (int i = 0; i < 50; ++i) {
    const auto shape = static_cast<testing::MaskShape>(i % 3);
    const auto m = testing::random_embedding(rng, 1 + static_cast<int>(rng() % 40),
                                             1 + static_cast<int>(rng() % 64), shape);
    write_embedding_file(m, dir / "a.ecce");
    const auto back = read_embedding_file(dir / "a.ecce");
    write_embedding_file(back, dir / "b.ecce");
    if (back == m && testing::slurp(dir / "a.ecce") == testing::slurp(dir / "b.ecce")) ++identical;
  }
  return {identical == 50, fmt::format("{}/50 byte-identical (random, all-true, single-true masks)", identical)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"volatility oracle", volatility_oracle},
      {"volatility scale law", volatility_scale_law},
      {"gradient check", gradient_check},
      {"attention normalization and masking", attention_masking},
      {"retrieval oracle", retrieval_oracle},
      {"deterministic end-to-end", deterministic_end_to_end},
      {"synthetic learnability", synthetic_learnability},
      {"ablation table shape", ablation_shape},
      {"split integrity", split_integrity},
      {"embedding file round-trip", embedding_round_trip},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    if (!v.pass) ++failed;
    std::printf("%s  %s: %s\n", v.pass ? "PASS" : "FAIL", name.c_str(), v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
