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

#include "ecc/remote.hpp"

#include <chrono>
#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "ecc/errors.hpp"

namespace ecc {

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path prefix, no trailing slash
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) return {url, ""};
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, ""};
  std::string prefix = url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {url.substr(0, path_start), prefix};
}

}  // namespace

template <typename Exception>
nlohmann::json post_json(const RemoteEndpoint& endpoint, const std::string& route,
                         const nlohmann::json& body) {
  const auto [origin, prefix] = split_url(endpoint.base_url);
  httplib::Client client(origin);
  if (!client.is_valid()) throw Exception("invalid endpoint URL '" + endpoint.base_url + "'");
  const auto timeout = std::chrono::duration<double>(endpoint.timeout_seconds);
  const auto secs = static_cast<time_t>(endpoint.timeout_seconds);
  const auto usecs = static_cast<time_t>((timeout.count() - static_cast<double>(secs)) * 1e6);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);

  httplib::Headers headers;
  if (!endpoint.api_key_env.empty()) {
    if (const char* key = std::getenv(endpoint.api_key_env.c_str()); key && *key)
      headers.emplace("Authorization", std::string("Bearer ") + key);
  }
  const std::string payload =
      body.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);

  std::string last_error;
  for (int attempt = 0; attempt <= endpoint.retries; ++attempt) {
    if (attempt > 0 && endpoint.retry_backoff_seconds > 0)
      std::this_thread::sleep_for(std::chrono::duration<double>(endpoint.retry_backoff_seconds * attempt));
    auto res = client.Post(prefix + route, headers, payload, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200)
      throw Exception("HTTP " + std::to_string(res->status) + " from " + route + ": " +
                      res->body.substr(0, 200));
    try {
      return nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::parse_error&) {
      throw Exception("non-JSON response from " + route);
    }
  }
  throw Exception(route + " failed after " + std::to_string(endpoint.retries + 1) +
                  " attempts (" + last_error + ")");
}

template nlohmann::json post_json<ProviderError>(const RemoteEndpoint&, const std::string&,
                                                 const nlohmann::json&);
template nlohmann::json post_json<ClientError>(const RemoteEndpoint&, const std::string&,
                                               const nlohmann::json&);

}  // namespace ecc
