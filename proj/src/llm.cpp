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

#include "ecc/llm.hpp"

#include "ecc/errors.hpp"

namespace ecc {

namespace {

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

}  // namespace

std::string wrap_payload(std::string_view payload) {
  std::string out(kPayloadOpen);
  out += payload;
  out += kPayloadClose;
  return out;
}

std::string_view payload_section(std::string_view prompt) {
  const auto open = prompt.find(kPayloadOpen);
  if (open == std::string_view::npos) return prompt;
  const auto start = open + kPayloadOpen.size();
  const auto close = prompt.find(kPayloadClose, start);
  return prompt.substr(start, close == std::string_view::npos ? std::string_view::npos : close - start);
}

std::string first_sentence(std::string_view text) {
  text = trim(text);
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '\n') return std::string(trim(text.substr(0, i)));
    if ((c == '.' || c == '!' || c == '?') &&
        (i + 1 == text.size() || text[i + 1] == ' ' || text[i + 1] == '\n' || text[i + 1] == '\t'))
      return std::string(text.substr(0, i + 1));
  }
  return std::string(text);
}

MockLlmClient::MockLlmClient(std::string tag)
    : responder_([tag = std::move(tag)](const std::string&, const std::string& user) {
        return tag + first_sentence(payload_section(user));
      }) {}

MockLlmClient::MockLlmClient(Responder responder) : responder_(std::move(responder)) {}

std::unique_ptr<MockLlmClient> MockLlmClient::constant(std::string reply) {
  return std::make_unique<MockLlmClient>(
      Responder([reply = std::move(reply)](const std::string&, const std::string&) { return reply; }));
}

std::string MockLlmClient::complete(const std::string& system_prompt, const std::string& user_prompt,
                                    double /*temperature*/) const {
  ++calls_;
  return responder_(system_prompt, user_prompt);
}

std::string RemoteChatClient::complete(const std::string& system_prompt, const std::string& user_prompt,
                                       double temperature) const {
  nlohmann::json body = {
      {"model", endpoint_.model},
      {"temperature", temperature},
      {"messages",
       {{{"role", "system"}, {"content", system_prompt}}, {{"role", "user"}, {"content", user_prompt}}}},
  };
  const auto reply = post_json<ClientError>(endpoint_, "/chat/completions", body);
  try {
    return reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ClientError(std::string("malformed chat response: ") + e.what());
  }
}

}  // namespace ecc
