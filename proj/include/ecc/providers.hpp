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
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "ecc/corpus.hpp"
#include "ecc/embedding.hpp"
#include "ecc/remote.hpp"

namespace ecc {

/// Audio clip identifiers for a call: "<call_id>#<i>", one per sentence.
std::vector<std::string> audio_clip_ids(const EccCall& call);

/// Reads vectors exported by the model adapter:
///   <dir>/<call_id>.audio.ecce      rows indexed by clip
///   <dir>/<call_id>.sentences.ecce  rows aligned with the call's sentences
///   <dir>/text/<fnv1a64-hex>.ecce   1×1024 whole-text embeddings
/// Sentence lookups are by text, audio lookups by clip id.
class FileEmbeddingProvider final : public EmbeddingProvider {
 public:
  FileEmbeddingProvider(std::filesystem::path dir, const std::vector<EccCall>& calls);

  std::vector<Eigen::VectorXf> embed_audio_frames(std::span<const std::string> clips) const override;
  std::vector<Eigen::VectorXf> embed_sentences(std::span<const std::string> texts) const override;
  TextEmbedding embed_text(const std::string& text) const override;

 private:
  std::filesystem::path dir_;
  std::unordered_map<std::string, Eigen::VectorXf> audio_;
  std::unordered_map<std::string, Eigen::VectorXf> sentences_;
};

/// OpenAI-compatible `/embeddings` endpoint, requested at 1024 dimensions.
/// Only whole-text embeddings are available remotely.
class RemoteEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit RemoteEmbeddingProvider(RemoteEndpoint endpoint);

  std::vector<Eigen::VectorXf> embed_audio_frames(std::span<const std::string> clips) const override;
  std::vector<Eigen::VectorXf> embed_sentences(std::span<const std::string> texts) const override;
  TextEmbedding embed_text(const std::string& text) const override;

 private:
  RemoteEndpoint endpoint_;
};

/// Routes sequence embeddings and whole-text embeddings to different providers.
class CompositeEmbeddingProvider final : public EmbeddingProvider {
 public:
  CompositeEmbeddingProvider(std::shared_ptr<const EmbeddingProvider> sequences,
                             std::shared_ptr<const EmbeddingProvider> text)
      : sequences_(std::move(sequences)), text_(std::move(text)) {}

  std::vector<Eigen::VectorXf> embed_audio_frames(std::span<const std::string> clips) const override {
    return sequences_->embed_audio_frames(clips);
  }
  std::vector<Eigen::VectorXf> embed_sentences(std::span<const std::string> texts) const override {
    return sequences_->embed_sentences(texts);
  }
  TextEmbedding embed_text(const std::string& text) const override { return text_->embed_text(text); }

 private:
  std::shared_ptr<const EmbeddingProvider> sequences_;
  std::shared_ptr<const EmbeddingProvider> text_;
};

}  // namespace ecc
