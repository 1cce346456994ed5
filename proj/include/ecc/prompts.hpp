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
#include <string_view>
#include <vector>

namespace ecc {

/// Prompt templates keyed as in prompts.toml.
struct PromptRegistry {
  std::string chunk_summary;
  std::string overall_summary;
  std::string focus_extraction;
  std::string relevance_filter;
  std::string answer_synthesis;

  /// The shipped data/prompts.toml, compiled in.
  static PromptRegistry defaults();
  static PromptRegistry parse(std::string_view toml_text);
  static PromptRegistry load(const std::filesystem::path& path);
};

/// Substitutes `{payload}` (fenced) and `{question}` in a template.
std::string render_prompt(std::string_view tmpl, std::string_view payload, std::string_view question = {});

struct QuestionItem {
  std::string name;
  std::vector<std::string> questions;
};

struct QuestionCategory {
  std::string name;
  std::vector<QuestionItem> items;
};

struct QuestionBank {
  std::vector<QuestionCategory> categories;

  /// Questions in traversal order: category, then item, then question.
  std::vector<std::string> flatten() const;
  std::size_t question_count() const;

  /// The shipped data/questionbank.toml, compiled in.
  static QuestionBank defaults();
  static QuestionBank parse(std::string_view toml_text);
  static QuestionBank load(const std::filesystem::path& path);
};

}  // namespace ecc
