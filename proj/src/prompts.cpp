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

#include "ecc/prompts.hpp"

#include <fstream>
#include <sstream>

#define TOML_EXCEPTIONS 1
#include <toml.hpp>

#include "ecc/default_data.hpp"
#include "ecc/errors.hpp"
#include "ecc/llm.hpp"

namespace ecc {

namespace {

toml::table parse_toml(std::string_view text, std::string_view source) {
  try {
    return toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << e;
    throw DataError(msg.str());
  }
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string required_string(const toml::table& t, std::string_view key, std::string_view where) {
  const auto* node = t.get(key);
  if (!node) throw DataError(std::string(where) + ": missing key '" + std::string(key) + "'");
  const auto value = node->value<std::string>();
  if (!value || value->empty())
    throw DataError(std::string(where) + ": '" + std::string(key) + "' must be a non-empty string");
  return *value;
}

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  for (auto pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size()))
    s.replace(pos, from.size(), to);
}

}  // namespace

PromptRegistry PromptRegistry::parse(std::string_view toml_text) {
  const auto t = parse_toml(toml_text, "prompts.toml");
  PromptRegistry r;
  r.chunk_summary = required_string(t, "chunk_summary", "prompts.toml");
  r.overall_summary = required_string(t, "overall_summary", "prompts.toml");
  r.focus_extraction = required_string(t, "focus_extraction", "prompts.toml");
  r.relevance_filter = required_string(t, "relevance_filter", "prompts.toml");
  r.answer_synthesis = required_string(t, "answer_synthesis", "prompts.toml");
  for (const auto* tmpl : {&r.chunk_summary, &r.overall_summary, &r.focus_extraction,
                           &r.relevance_filter, &r.answer_synthesis}) {
    if (tmpl->find("{payload}") == std::string::npos)
      throw DataError("prompts.toml: every template needs a {payload} placeholder");
  }
  return r;
}

PromptRegistry PromptRegistry::defaults() { return parse(detail::kDefaultPromptsToml); }

PromptRegistry PromptRegistry::load(const std::filesystem::path& path) { return parse(read_text(path)); }

std::string render_prompt(std::string_view tmpl, std::string_view payload, std::string_view question) {
  std::string out(tmpl);
  // Substitute the question first so a question containing "{payload}" stays literal.
  const auto fenced = wrap_payload(payload);
  const auto pos = out.find("{payload}");
  std::string head = out.substr(0, pos == std::string::npos ? out.size() : pos);
  std::string tail = pos == std::string::npos ? std::string() : out.substr(pos + 9);
  replace_all(head, "{question}", question);
  replace_all(tail, "{question}", question);
  if (pos == std::string::npos) return head;
  return head + fenced + tail;
}

std::vector<std::string> QuestionBank::flatten() const {
  std::vector<std::string> out;
  for (const auto& c : categories)
    for (const auto& i : c.items)
      for (const auto& q : i.questions) out.push_back(q);
  return out;
}

std::size_t QuestionBank::question_count() const {
  std::size_t n = 0;
  for (const auto& c : categories)
    for (const auto& i : c.items) n += i.questions.size();
  return n;
}

QuestionBank QuestionBank::parse(std::string_view toml_text) {
  const auto t = parse_toml(toml_text, "questionbank.toml");
  const auto* cats = t["category"].as_array();
  if (!cats || cats->empty()) throw DataError("questionbank.toml: needs at least one [[category]]");
  QuestionBank bank;
  for (const auto& cnode : *cats) {
    const auto* ct = cnode.as_table();
    if (!ct) throw DataError("questionbank.toml: [[category]] must be a table");
    QuestionCategory cat;
    cat.name = required_string(*ct, "name", "questionbank.toml category");
    const auto* items = (*ct)["item"].as_array();
    if (!items || items->empty())
      throw DataError("questionbank.toml: category '" + cat.name + "' has no items");
    for (const auto& inode : *items) {
      const auto* it = inode.as_table();
      if (!it) throw DataError("questionbank.toml: [[category.item]] must be a table");
      QuestionItem item;
      item.name = required_string(*it, "name", "questionbank.toml item");
      const auto* qs = (*it)["questions"].as_array();
      if (!qs || qs->empty())
        throw DataError("questionbank.toml: item '" + item.name + "' has no questions");
      for (const auto& q : *qs) {
        const auto s = q.value<std::string>();
        if (!s || s->empty())
          throw DataError("questionbank.toml: item '" + item.name + "' has an empty question");
        item.questions.push_back(*s);
      }
      cat.items.push_back(std::move(item));
    }
    bank.categories.push_back(std::move(cat));
  }
  return bank;
}

QuestionBank QuestionBank::defaults() { return parse(detail::kDefaultQuestionBankToml); }

QuestionBank QuestionBank::load(const std::filesystem::path& path) { return parse(read_text(path)); }

}  // namespace ecc
