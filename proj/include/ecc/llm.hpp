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

#include <atomic>
#include <functional>
#include <memory>
#include <string>
#include <string_view>

#include "ecc/remote.hpp"

namespace ecc {

/// Chat-completion client. Implementations must be safe for concurrent calls.
class LlmClient {
 public:
  virtual ~LlmClient() = default;
  virtual std::string complete(const std::string& system_prompt, const std::string& user_prompt,
                               double temperature) const = 0;
};

// Payloads are fenced inside user prompts so that they can be located again.
inline constexpr std::string_view kPayloadOpen = "<payload>\n";
inline constexpr std::string_view kPayloadClose = "\n</payload>";

std::string wrap_payload(std::string_view payload);

/// Text between the payload fences, or the whole prompt if there are none.
std::string_view payload_section(std::string_view prompt);

/// Leading text up to and including the first '.', '!' or '?' that is
/// followed by whitespace or the end, or up to the first newline. Trimmed.
std::string first_sentence(std::string_view text);

/// Offline client. By default it answers with `tag` + the first sentence of
/// the user prompt's payload section.
class MockLlmClient final : public LlmClient {
 public:
  using Responder = std::function<std::string(const std::string& system, const std::string& user)>;

  explicit MockLlmClient(std::string tag = "[mock] ");
  explicit MockLlmClient(Responder responder);

  /// Always replies with `reply`.
  static std::unique_ptr<MockLlmClient> constant(std::string reply);

  std::string complete(const std::string& system_prompt, const std::string& user_prompt,
                       double temperature) const override;

  std::size_t calls() const { return calls_.load(); }

 private:
  Responder responder_;
  mutable std::atomic<std::size_t> calls_{0};
};

/// OpenAI-compatible `/chat/completions` client.
class RemoteChatClient final : public LlmClient {
 public:
  explicit RemoteChatClient(RemoteEndpoint endpoint) : endpoint_(std::move(endpoint)) {}

  std::string complete(const std::string& system_prompt, const std::string& user_prompt,
                       double temperature) const override;

 private:
  RemoteEndpoint endpoint_;
};

}  // namespace ecc
