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

#include <random>

#include <gtest/gtest.h>

#include "ecc/embedding.hpp"
#include "ecc/errors.hpp"
#include "support/random_embeddings.hpp"
#include "support/temp_dir.hpp"

namespace ecc {
namespace {

std::vector<Eigen::VectorXf> ones(int n, int dim) {
  std::vector<Eigen::VectorXf> v;
  for (int i = 0; i < n; ++i) v.push_back(Eigen::VectorXf::Constant(dim, static_cast<float>(i + 1)));
  return v;
}

TEST(EmbeddingMatrix, MaskedRowsMustBeZero) {
  RowMatrixF data = RowMatrixF::Zero(2, 3);
  data(1, 2) = 1.0f;
  EXPECT_THROW(EmbeddingMatrix(data, {true, false}), DataError);
  EXPECT_THROW(EmbeddingMatrix(data, {true}), DimensionError);
  EXPECT_NO_THROW(EmbeddingMatrix(data, {false, true}));
}

TEST(PadToCapacity, ThreeRowsIntoFive) {
  const auto v = ones(3, 4);
  const auto p = pad_to_capacity(v, 5);
  EXPECT_EQ(p.truncated, 0u);
  EXPECT_EQ(p.matrix.mask(), (std::vector<bool>{true, true, true, false, false}));
  EXPECT_EQ(p.matrix.data()(2, 0), 3.0f);
  EXPECT_TRUE(p.matrix.data().bottomRows(2).isZero(0.0f));
}

TEST(PadToCapacity, TruncatesAndCounts) {
  const auto v = ones(7, 2);
  const auto p = pad_to_capacity(v, 5);
  EXPECT_EQ(p.truncated, 2u);
  EXPECT_EQ(p.matrix.valid_count(), 5);
  EXPECT_EQ(p.matrix.data()(4, 1), 5.0f);
}

TEST(PadToCapacity, Errors) {
  std::vector<Eigen::VectorXf> mixed{Eigen::VectorXf::Ones(3), Eigen::VectorXf::Ones(4)};
  EXPECT_THROW(pad_to_capacity(mixed, 4), DimensionError);
  EXPECT_THROW(pad_to_capacity(std::vector<Eigen::VectorXf>{}, 4), std::invalid_argument);
  EXPECT_THROW(pad_to_capacity(ones(1, 2), 0), std::invalid_argument);
}

TEST(EmbeddingFile, FullSizeFileHasTheDocumentedLength) {
  testing::TempDir dir;
  const auto p = pad_to_capacity(ones(2, kAudioDim), kDefaultCapacity);
  write_embedding_file(p.matrix, dir / "a.ecce");
  EXPECT_EQ(std::filesystem::file_size(dir / "a.ecce"), 19u + 520u + 520u * 512u * 4u);
  const auto h = read_embedding_header(dir / "a.ecce");
  EXPECT_EQ(h.rows, 520u);
  EXPECT_EQ(h.cols, 512u);
  EXPECT_EQ(h.version, 1);
  EXPECT_EQ(read_embedding_file(dir / "a.ecce"), p.matrix);
  EXPECT_FALSE(std::filesystem::exists(dir / "a.ecce.tmp"));
}

TEST(EmbeddingFile, HeaderLayoutIsLittleEndian) {
  const auto bytes = encode_embedding(EmbeddingMatrix(RowMatrixF::Constant(1, 2, 1.0f), {true}));
  const std::vector<std::uint8_t> head(bytes.begin(), bytes.begin() + 19);
  EXPECT_EQ(head, (std::vector<std::uint8_t>{'E', 'C', 'C', 'E', 1, 0, 1, 1, 0, 0, 0, 2, 0, 0, 0, 1, 0, 0, 0}));
  EXPECT_EQ(bytes[19], 1);
  // 1.0f = 0x3F800000
  EXPECT_EQ(std::vector<std::uint8_t>(bytes.begin() + 20, bytes.begin() + 24),
            (std::vector<std::uint8_t>{0x00, 0x00, 0x80, 0x3F}));
}

TEST(EmbeddingFile, RandomRoundTripsAreByteIdentical) {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 30; ++i) {
    const auto shape = static_cast<testing::MaskShape>(i % 3);
    const auto m = testing::random_embedding(rng, 1 + static_cast<int>(rng() % 20), 1 + static_cast<int>(rng() % 9), shape);
    const auto bytes = encode_embedding(m);
    const auto back = decode_embedding(bytes);
    EXPECT_EQ(back, m);
    EXPECT_EQ(encode_embedding(back), bytes);
  }
}

TEST(EmbeddingFile, RejectsCorruptInput) {
  const auto good = encode_embedding(EmbeddingMatrix(RowMatrixF::Constant(2, 2, 0.5f), {true, true}));
  auto bad_magic = good;
  bad_magic[0] = 'X';
  EXPECT_THROW(decode_embedding(bad_magic), FormatError);
  auto bad_version = good;
  bad_version[4] = 2;
  EXPECT_THROW(decode_embedding(bad_version), FormatError);
  auto bad_dtype = good;
  bad_dtype[6] = 2;
  EXPECT_THROW(decode_embedding(bad_dtype), FormatError);
  auto bad_mask_len = good;
  bad_mask_len[15] = 3;
  EXPECT_THROW(decode_embedding(bad_mask_len), FormatError);
  auto truncated = good;
  truncated.pop_back();
  EXPECT_THROW(decode_embedding(truncated), FormatError);
  auto trailing = good;
  trailing.push_back(0);
  EXPECT_THROW(decode_embedding(trailing), FormatError);
  auto bad_mask_byte = good;
  bad_mask_byte[19] = 7;
  EXPECT_THROW(decode_embedding(bad_mask_byte), FormatError);
  auto masked = good;
  masked[20] = 0;  // row 1 masked while its data is non-zero
  EXPECT_THROW(decode_embedding(masked), FormatError);
  EXPECT_THROW(decode_embedding(std::vector<std::uint8_t>{'E', 'C'}), FormatError);
}

TEST(EmbeddingFile, MissingFileIsADataError) {
  EXPECT_THROW(read_embedding_file("/nonexistent/x.ecce"), DataError);
}

TEST(TextEmbedding, OneRowWrapping) {
  TextEmbedding t{Eigen::VectorXf::LinSpaced(5, 0.0f, 1.0f)};
  const auto m = as_matrix(t);
  EXPECT_EQ(m.rows(), 1);
  EXPECT_EQ(as_text_embedding(m).data, t.data);
  EXPECT_THROW(as_text_embedding(EmbeddingMatrix(RowMatrixF::Zero(2, 5), {true, true})), FormatError);
}

TEST(Fnv1a, KnownVectors) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ULL);
  EXPECT_EQ(text_embedding_key("a"), "af63dc4c8601ec8c");
}

TEST(StubProvider, DimensionsNormsAndDeterminism) {
  const StubEmbeddingProvider a(7), b(7), c(8);
  const std::vector<std::string> in{"one", "two"};
  const auto audio = a.embed_audio_frames(in);
  const auto sent = a.embed_sentences(in);
  const auto text = a.embed_text("hello");
  ASSERT_EQ(audio.size(), 2u);
  EXPECT_EQ(audio[0].size(), kAudioDim);
  EXPECT_EQ(sent[0].size(), kSentenceDim);
  EXPECT_EQ(text.dim(), kTextDim);
  EXPECT_NEAR(audio[1].norm(), 1.0f, 1e-5f);
  EXPECT_NEAR(text.data.norm(), 1.0f, 1e-5f);
  EXPECT_EQ(b.embed_text("hello").data, text.data);
  EXPECT_NE(c.embed_text("hello").data, text.data);
  EXPECT_NE(a.embed_text("hello!").data, text.data);
  EXPECT_NE(audio[0], audio[1]);
  // Domains are separated: the same string gives unrelated vectors.
  EXPECT_NE(a.vector_for("audio", "x", 8), a.vector_for("sentence", "x", 8));
}

}  // namespace
}  // namespace ecc
