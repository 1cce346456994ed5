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

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ecc {

inline constexpr int kAudioDim = 512;
inline constexpr int kSentenceDim = 768;
inline constexpr int kTextDim = 1024;
inline constexpr int kDefaultCapacity = 520;

using RowMatrixF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Fixed-capacity, row-padded matrix with a validity mask. Rows whose mask
/// entry is false are exactly zero; the constructor enforces this.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  EmbeddingMatrix(RowMatrixF data, std::vector<bool> mask);

  Eigen::Index rows() const { return data_.rows(); }
  Eigen::Index cols() const { return data_.cols(); }
  const RowMatrixF& data() const { return data_; }
  const std::vector<bool>& mask() const { return mask_; }
  Eigen::Index valid_count() const;

  /// Valid rows in order, converted to `Scalar`.
  template <typename Scalar>
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> valid_rows() const {
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out(valid_count(), cols());
    Eigen::Index k = 0;
    for (Eigen::Index r = 0; r < rows(); ++r)
      if (mask_[static_cast<std::size_t>(r)]) out.row(k++) = data_.row(r).template cast<Scalar>();
    return out;
  }

  friend bool operator==(const EmbeddingMatrix& a, const EmbeddingMatrix& b) {
    return a.mask_ == b.mask_ && a.data_.rows() == b.data_.rows() &&
           a.data_.cols() == b.data_.cols() && a.data_ == b.data_;
  }

 private:
  RowMatrixF data_;
  std::vector<bool> mask_;
};

/// Whole-text embedding vector (T_s, T_f and the ablation parts).
struct TextEmbedding {
  Eigen::VectorXf data;

  int dim() const { return static_cast<int>(data.size()); }
};

struct PadResult {
  EmbeddingMatrix matrix;
  std::size_t truncated = 0;  // input rows dropped beyond capacity
};

/// Stacks `vectors` into a `capacity`-row matrix: real rows first (mask true),
/// zero rows after. Inputs beyond `capacity` are dropped and counted.
PadResult pad_to_capacity(std::span<const Eigen::VectorXf> vectors, int capacity);

/// Wraps a 1×d vector in the embedding file layout (rows = 1, mask = [1]).
EmbeddingMatrix as_matrix(const TextEmbedding& embedding);
TextEmbedding as_text_embedding(const EmbeddingMatrix& matrix);

// ECCE file format, little-endian:
//   "ECCE" | u16 version=1 | u8 dtype=1 (f32) | u32 rows | u32 cols | u32 mask_len
//   | mask_len bytes (0/1) | rows*cols f32, row-major
inline constexpr std::uint16_t kEmbeddingFileVersion = 1;
inline constexpr std::size_t kEmbeddingHeaderBytes = 4 + 2 + 1 + 4 + 4 + 4;

std::vector<std::uint8_t> encode_embedding(const EmbeddingMatrix& matrix);
EmbeddingMatrix decode_embedding(std::span<const std::uint8_t> bytes);

void write_embedding_file(const EmbeddingMatrix& matrix, const std::filesystem::path& path);
EmbeddingMatrix read_embedding_file(const std::filesystem::path& path);

struct EmbeddingFileHeader {
  std::uint16_t version = 0;
  std::uint8_t dtype = 0;
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::uint32_t mask_len = 0;
};
EmbeddingFileHeader read_embedding_header(const std::filesystem::path& path);

/// Source of every vector representation used by the pipeline.
/// Implementations are immutable after construction and safe for concurrent use.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  /// One 512-vector per audio clip.
  virtual std::vector<Eigen::VectorXf> embed_audio_frames(std::span<const std::string> clips) const = 0;
  /// One 768-vector per sentence.
  virtual std::vector<Eigen::VectorXf> embed_sentences(std::span<const std::string> texts) const = 0;
  /// One 1024-vector for a whole text.
  virtual TextEmbedding embed_text(const std::string& text) const = 0;
};

/// Offline provider: each vector is a seeded hash of the input bytes expanded
/// into uniform noise and normalised to unit L2 norm.
class StubEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit StubEmbeddingProvider(std::uint64_t seed) : seed_(seed) {}

  std::vector<Eigen::VectorXf> embed_audio_frames(std::span<const std::string> clips) const override;
  std::vector<Eigen::VectorXf> embed_sentences(std::span<const std::string> texts) const override;
  TextEmbedding embed_text(const std::string& text) const override;

  Eigen::VectorXf vector_for(std::string_view domain, std::string_view input, int dim) const;

 private:
  std::uint64_t seed_;
};

std::unique_ptr<EmbeddingProvider> stub_provider(std::uint64_t seed);

/// 64-bit FNV-1a, used to name per-text embedding files.
std::uint64_t fnv1a64(std::string_view bytes);
std::string text_embedding_key(std::string_view text);

}  // namespace ecc
