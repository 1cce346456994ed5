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

#include <string>

#include <json.hpp>

namespace ecc {

/// Connection settings for an OpenAI-compatible HTTP API.
struct RemoteEndpoint {
  std::string base_url;  // e.g. https://api.openai.com/v1
  std::string model;
  std::string api_key_env = "OPENAI_API_KEY";
  double timeout_seconds = 60.0;
  int retries = 2;
  double retry_backoff_seconds = 1.0;
  int dimensions = 1024;  // embeddings only
};

/// POSTs `body` to base_url + `route` and returns the parsed JSON reply.
/// Transport failures, 429 and 5xx are retried up to `retries` times; every
/// other failure throws `Exception` immediately.
template <typename Exception>
nlohmann::json post_json(const RemoteEndpoint& endpoint, const std::string& route,
                         const nlohmann::json& body);

}  // namespace ecc
