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

#include "ecc/providers.hpp"

#include "ecc/errors.hpp"

namespace ecc {

namespace {

void check_dim(const Eigen::VectorXf& v, int dim, const std::string& what) {
  if (v.size() != dim)
    throw ProviderError(what + ": got dim " + std::to_string(v.size()) + ", expected " +
                        std::to_string(dim));
  if (!v.allFinite()) throw ProviderError(what + ": non-finite entries");
}

}  // namespace

std::vector<std::string> audio_clip_ids(const EccCall& call) {
  std::vector<std::string> ids;
  ids.reserve(call.sentences.size());
  for (std::size_t i = 0; i < call.sentences.size(); ++i)
    ids.push_back(call.call_id + "#" + std::to_string(i));
  return ids;
}

FileEmbeddingProvider::FileEmbeddingProvider(std::filesystem::path dir, const std::vector<EccCall>& calls)
    : dir_(std::move(dir)) {
  for (const auto& call : calls) {
    const auto audio_path = dir_ / (call.call_id + ".audio.ecce");
    if (std::filesystem::exists(audio_path)) {
      const auto m = read_embedding_file(audio_path);
      if (m.cols() != kAudioDim)
        throw ProviderError(audio_path.string() + ": expected " + std::to_string(kAudioDim) + " columns");
      Eigen::Index clip = 0;
      for (Eigen::Index r = 0; r < m.rows(); ++r) {
        if (!m.mask()[static_cast<std::size_t>(r)]) continue;
        audio_.emplace(call.call_id + "#" + std::to_string(clip++), m.data().row(r).transpose());
      }
    }
    const auto sent_path = dir_ / (call.call_id + ".sentences.ecce");
    if (std::filesystem::exists(sent_path)) {
      const auto m = read_embedding_file(sent_path);
      if (m.cols() != kSentenceDim)
        throw ProviderError(sent_path.string() + ": expected " + std::to_string(kSentenceDim) + " columns");
      std::size_t s = 0;
      for (Eigen::Index r = 0; r < m.rows() && s < call.sentences.size(); ++r) {
        if (!m.mask()[static_cast<std::size_t>(r)]) continue;
        sentences_.emplace(call.sentences[s++].text, m.data().row(r).transpose());
      }
    }
  }
}

std::vector<Eigen::VectorXf> FileEmbeddingProvider::embed_audio_frames(std::span<const std::string> clips) const {
  std::vector<Eigen::VectorXf> out;
  out.reserve(clips.size());
  for (const auto& clip : clips) {
    auto it = audio_.find(clip);
    if (it == audio_.end()) throw ProviderError("no exported audio embedding for clip '" + clip + "'");
    out.push_back(it->second);
  }
  return out;
}

std::vector<Eigen::VectorXf> FileEmbeddingProvider::embed_sentences(std::span<const std::string> texts) const {
  std::vector<Eigen::VectorXf> out;
  out.reserve(texts.size());
  for (const auto& t : texts) {
    auto it = sentences_.find(t);
    if (it == sentences_.end())
      throw ProviderError("no exported sentence embedding for '" + t.substr(0, 60) + "'");
    out.push_back(it->second);
  }
  return out;
}

TextEmbedding FileEmbeddingProvider::embed_text(const std::string& text) const {
  const auto path = dir_ / "text" / (text_embedding_key(text) + ".ecce");
  if (!std::filesystem::exists(path))
    throw ProviderError("no exported text embedding " + path.string());
  TextEmbedding e;
  try {
    e = as_text_embedding(read_embedding_file(path));
  } catch (const DataError& err) {
    throw ProviderError(err.what());
  }
  check_dim(e.data, kTextDim, path.string());
  return e;
}

RemoteEmbeddingProvider::RemoteEmbeddingProvider(RemoteEndpoint endpoint)
    : endpoint_(std::move(endpoint)) {}

std::vector<Eigen::VectorXf> RemoteEmbeddingProvider::embed_audio_frames(std::span<const std::string>) const {
  throw ProviderError("remote provider does not serve audio frame embeddings; export them with the adapter");
}

std::vector<Eigen::VectorXf> RemoteEmbeddingProvider::embed_sentences(std::span<const std::string>) const {
  throw ProviderError("remote provider does not serve sentence embeddings; export them with the adapter");
}

TextEmbedding RemoteEmbeddingProvider::embed_text(const std::string& text) const {
  if (text.empty()) throw std::invalid_argument("embed_text: empty text");
  nlohmann::json body = {{"model", endpoint_.model}, {"input", text}, {"dimensions", endpoint_.dimensions}};
  const auto reply = post_json<ProviderError>(endpoint_, "/embeddings", body);
  try {
    const auto& values = reply.at("data").at(0).at("embedding");
    TextEmbedding e;
    e.data.resize(static_cast<Eigen::Index>(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i) e.data[static_cast<Eigen::Index>(i)] = values[i].get<float>();
    check_dim(e.data, kTextDim, "remote embedding");
    return e;
  } catch (const nlohmann::json::exception& err) {
    throw ProviderError(std::string("malformed embeddings response: ") + err.what());
  }
}

}  // namespace ecc
