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

#include "ecc/evaluation.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include <fmt/format.h>

#include "ecc/errors.hpp"

namespace ecc {

namespace {

constexpr std::string_view kCsvHeader = "config,mse_mean,mse_3,mse_7,mse_15,mse_30";

double parse_double(std::string_view s, std::size_t line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw FormatError(fmt::format("results line {}: bad number '{}'", line, s));
  return v;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

void AblationConfig::validate() const {
  if (!(use_audio || use_text || use_eos || use_ecs || use_efo))
    throw std::invalid_argument("ablation config '" + name + "' enables no input");
}

model::FeatureMask AblationConfig::mask() const {
  return {use_audio, use_text, {use_eos, use_ecs, use_efo}};
}

const std::vector<AblationConfig>& ablation_presets() {
  static const std::vector<AblationConfig> presets{
      {"Audio+Text", true, true, false, false, false},
      {"Audio+Text+E_os", true, true, true, false, false},
      {"Audio+Text+E_cs", true, true, false, true, false},
      {"Audio+Text+E_os+E_cs", true, true, true, true, false},
      {"Audio+Text+E_fo", true, true, false, false, true},
      {"E_os+E_cs+E_fo", false, false, true, true, true},
      {"Audio+Text+E_os+E_cs+E_fo", true, true, true, true, true},
  };
  return presets;
}

ResultRow ResultRow::from_taus(std::string config, const std::array<double, 4>& mse) {
  return {std::move(config), (mse[0] + mse[1] + mse[2] + mse[3]) / 4.0, mse};
}

std::string results_to_csv(const ResultTable& table) {
  std::string out(kCsvHeader);
  out += '\n';
  for (const auto& r : table.rows) {
    if (r.config.find_first_of(",\"\n\r") != std::string::npos)
      throw std::invalid_argument("config name not representable in CSV: " + r.config);
    out += fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", r.config, r.mse_mean, r.mse[0], r.mse[1],
                       r.mse[2], r.mse[3]);
  }
  return out;
}

ResultTable results_from_csv(std::string_view csv) {
  ResultTable table;
  std::size_t line_no = 0;
  bool header = false;
  while (!csv.empty()) {
    const auto nl = csv.find('\n');
    std::string_view line = csv.substr(0, nl);
    csv = nl == std::string_view::npos ? std::string_view{} : csv.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (!header) {
      if (line != kCsvHeader) throw FormatError("results: unexpected header '" + std::string(line) + "'");
      header = true;
      continue;
    }
    const auto fields = split_commas(line);
    if (fields.size() != 6) throw FormatError(fmt::format("results line {}: expected 6 fields", line_no));
    ResultRow row{std::string(fields[0]), parse_double(fields[1], line_no), {}};
    for (std::size_t i = 0; i < 4; ++i) row.mse[i] = parse_double(fields[i + 2], line_no);
    const double mean = (row.mse[0] + row.mse[1] + row.mse[2] + row.mse[3]) / 4.0;
    if (!(std::abs(mean - row.mse_mean) <= 1e-9))
      throw FormatError(fmt::format("results line {}: mse_mean {} is not the mean of the tau columns", line_no,
                                    row.mse_mean));
    table.rows.push_back(std::move(row));
  }
  if (!header) throw FormatError("results: missing header");
  return table;
}

std::string render_results_text(const ResultTable& table) {
  std::size_t w = 6;
  for (const auto& r : table.rows) w = std::max(w, r.config.size());
  std::string out = fmt::format("{:<{}}  {:>8}  {:>6}  {:>6}  {:>6}  {:>6}\n", "Config", w, "MSE_avg", "MSE_3",
                                "MSE_7", "MSE_15", "MSE_30");
  for (const auto& r : table.rows)
    out += fmt::format("{:<{}}  {:>8.3f}  {:>6.3f}  {:>6.3f}  {:>6.3f}  {:>6.3f}\n", r.config, w, r.mse_mean, r.mse[0],
                       r.mse[1], r.mse[2], r.mse[3]);
  return out;
}

LabelIndex index_labels(const std::vector<VolatilityLabel>& labels) {
  LabelIndex index;
  for (const auto& l : labels) index[{l.call_id, l.tau}] = l.value;
  return index;
}

template <typename Scalar>
Dataset<Scalar> assemble_dataset(const std::vector<std::string>& call_ids,
                                 const std::map<std::string, CallFeatures>& features, const LabelIndex& labels,
                                 int tau) {
  Dataset<Scalar> data;
  for (const auto& id : call_ids) {
    const auto f = features.find(id);
    if (f == features.end()) throw DataError("no features for call " + id);
    const auto l = labels.find({id, tau});
    if (l == labels.end()) throw DataError(fmt::format("no tau={} label for call {}", tau, id));
    data.samples.push_back(model::make_sample<Scalar>(f->second.audio, f->second.sentences, f->second.text));
    data.labels.push_back(static_cast<Scalar>(l->second));
  }
  return data;
}

template <typename Scalar>
ResultRow evaluate(const std::string& name, const model::ModelConfig& cfg,
                   const std::map<int, model::ModelParams<Scalar>>& models,
                   const std::map<int, Dataset<Scalar>>& test, const model::FeatureMask& mask) {
  std::array<double, 4> mse{};
  for (std::size_t i = 0; i < kResultTaus.size(); ++i) {
    const int tau = kResultTaus[i];
    const auto m = models.find(tau);
    if (m == models.end()) throw DataError(fmt::format("no model for tau={}", tau));
    const auto t = test.find(tau);
    if (t == test.end() || t->second.size() == 0) throw DataError(fmt::format("no test data for tau={}", tau));
    mse[i] = dataset_mse<Scalar>(m->second, cfg, t->second, mask);
  }
  return ResultRow::from_taus(name, mse);
}

template <typename Scalar>
AblationOutcome run_ablation(const model::ModelConfig& cfg, const std::map<int, Dataset<Scalar>>& train,
                             const std::map<int, Dataset<Scalar>>& test, const std::vector<AblationConfig>& configs,
                             const TrainConfig& tc) {
  if (cfg.feature_dims.size() != 3) throw DimensionError("ablation model needs three text features");
  AblationOutcome out;
  for (const auto& ac : configs) {
    try {
      ac.validate();
      const auto mask = ac.mask();
      std::map<int, model::ModelParams<Scalar>> models;
      for (int tau : kResultTaus) {
        const auto t = train.find(tau);
        if (t == train.end()) throw DataError(fmt::format("no training data for tau={}", tau));
        TrainConfig cell = tc;
        cell.target_tau = tau;
        models.emplace(tau, train_with_grid<Scalar>(cfg, t->second, cell, mask).params);
      }
      auto row = evaluate<Scalar>(ac.name, cfg, models, test, mask);
      for (double v : row.mse)
        if (!std::isfinite(v)) throw NumericalError("non-finite test MSE");
      out.table.rows.push_back(std::move(row));
    } catch (const std::exception& e) {
      out.failures.push_back(ac.name + ": " + e.what());
    }
  }
  return out;
}

#define ECC_INSTANTIATE(S)                                                                                      \
  template Dataset<S> assemble_dataset<S>(const std::vector<std::string>&,                                    \
                                          const std::map<std::string, CallFeatures>&, const LabelIndex&, int); \
  template ResultRow evaluate<S>(const std::string&, const model::ModelConfig&,                                \
                                 const std::map<int, model::ModelParams<S>>&, const std::map<int, Dataset<S>>&, \
                                 const model::FeatureMask&);                                                   \
  template AblationOutcome run_ablation<S>(const model::ModelConfig&, const std::map<int, Dataset<S>>&,        \
                                           const std::map<int, Dataset<S>>&, const std::vector<AblationConfig>&, \
                                           const TrainConfig&);
ECC_INSTANTIATE(float)
ECC_INSTANTIATE(double)
#undef ECC_INSTANTIATE

}  // namespace ecc
