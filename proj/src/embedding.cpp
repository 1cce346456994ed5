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

#include "ecc/embedding.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "ecc/errors.hpp"

namespace ecc {

namespace {

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int s = 0; s < 32; s += 8) out.push_back(static_cast<std::uint8_t>((v >> s) & 0xFF));
}

std::uint16_t get_u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

EmbeddingFileHeader decode_header(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kEmbeddingHeaderBytes) throw FormatError("embedding file: truncated header");
  if (std::memcmp(bytes.data(), "ECCE", 4) != 0) throw FormatError("embedding file: bad magic");
  EmbeddingFileHeader h;
  h.version = get_u16(bytes.data() + 4);
  h.dtype = bytes[6];
  h.rows = get_u32(bytes.data() + 7);
  h.cols = get_u32(bytes.data() + 11);
  h.mask_len = get_u32(bytes.data() + 15);
  if (h.version != kEmbeddingFileVersion)
    throw FormatError("embedding file: unsupported version " + std::to_string(h.version));
  if (h.dtype != 1) throw FormatError("embedding file: unsupported dtype " + std::to_string(h.dtype));
  if (h.mask_len != h.rows) throw FormatError("embedding file: mask_len differs from rows");
  return h;
}

std::vector<std::uint8_t> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

EmbeddingMatrix::EmbeddingMatrix(RowMatrixF data, std::vector<bool> mask)
    : data_(std::move(data)), mask_(std::move(mask)) {
  if (static_cast<Eigen::Index>(mask_.size()) != data_.rows())
    throw DimensionError("EmbeddingMatrix: mask length " + std::to_string(mask_.size()) +
                         " != rows " + std::to_string(data_.rows()));
  for (Eigen::Index r = 0; r < data_.rows(); ++r) {
    if (!mask_[static_cast<std::size_t>(r)] && !data_.row(r).isZero(0.0f))
      throw DataError("EmbeddingMatrix: masked row " + std::to_string(r) + " is not zero");
  }
}

Eigen::Index EmbeddingMatrix::valid_count() const {
  return static_cast<Eigen::Index>(std::count(mask_.begin(), mask_.end(), true));
}

PadResult pad_to_capacity(std::span<const Eigen::VectorXf> vectors, int capacity) {
  if (vectors.empty()) throw std::invalid_argument("pad_to_capacity: no vectors");
  if (capacity < 1) throw std::invalid_argument("pad_to_capacity: capacity must be positive");
  const auto dim = vectors.front().size();
  const auto kept = std::min<std::size_t>(vectors.size(), static_cast<std::size_t>(capacity));
  RowMatrixF data = RowMatrixF::Zero(capacity, dim);
  std::vector<bool> mask(static_cast<std::size_t>(capacity), false);
  for (std::size_t i = 0; i < kept; ++i) {
    if (vectors[i].size() != dim)
      throw DimensionError("pad_to_capacity: vector " + std::to_string(i) + " has dim " +
                           std::to_string(vectors[i].size()) + ", expected " + std::to_string(dim));
    data.row(static_cast<Eigen::Index>(i)) = vectors[i].transpose();
    mask[i] = true;
  }
  return {EmbeddingMatrix(std::move(data), std::move(mask)), vectors.size() - kept};
}

EmbeddingMatrix as_matrix(const TextEmbedding& embedding) {
  RowMatrixF data = embedding.data.transpose();
  return EmbeddingMatrix(std::move(data), {true});
}

TextEmbedding as_text_embedding(const EmbeddingMatrix& matrix) {
  if (matrix.rows() != 1 || !matrix.mask()[0])
    throw FormatError("text embedding file must hold exactly one valid row");
  return {matrix.data().row(0).transpose()};
}

std::vector<std::uint8_t> encode_embedding(const EmbeddingMatrix& matrix) {
  const auto rows = static_cast<std::uint32_t>(matrix.rows());
  const auto cols = static_cast<std::uint32_t>(matrix.cols());
  std::vector<std::uint8_t> out;
  out.reserve(kEmbeddingHeaderBytes + rows + std::size_t{rows} * cols * 4);
  for (char ch : std::string_view("ECCE")) out.push_back(static_cast<std::uint8_t>(ch));
  put_u16(out, kEmbeddingFileVersion);
  out.push_back(1);
  put_u32(out, rows);
  put_u32(out, cols);
  put_u32(out, rows);
  for (bool m : matrix.mask()) out.push_back(m ? 1 : 0);
  const auto& data = matrix.data();
  for (Eigen::Index r = 0; r < data.rows(); ++r)
    for (Eigen::Index c = 0; c < data.cols(); ++c) put_u32(out, std::bit_cast<std::uint32_t>(data(r, c)));
  return out;
}

EmbeddingMatrix decode_embedding(std::span<const std::uint8_t> bytes) {
  const auto h = decode_header(bytes);
  const std::size_t expected =
      kEmbeddingHeaderBytes + h.mask_len + std::size_t{h.rows} * h.cols * 4;
  if (bytes.size() != expected)
    throw FormatError("embedding file: payload is " + std::to_string(bytes.size()) +
                      " bytes, header implies " + std::to_string(expected));
  std::vector<bool> mask(h.rows);
  const std::uint8_t* p = bytes.data() + kEmbeddingHeaderBytes;
  for (std::uint32_t r = 0; r < h.rows; ++r) {
    if (p[r] > 1) throw FormatError("embedding file: mask byte must be 0 or 1");
    mask[r] = p[r] == 1;
  }
  p += h.rows;
  RowMatrixF data(h.rows, h.cols);
  for (std::uint32_t r = 0; r < h.rows; ++r)
    for (std::uint32_t c = 0; c < h.cols; ++c, p += 4) data(r, c) = std::bit_cast<float>(get_u32(p));
  try {
    return EmbeddingMatrix(std::move(data), std::move(mask));
  } catch (const DataError& e) {
    throw FormatError(std::string("embedding file: ") + e.what());
  }
}

void write_embedding_file(const EmbeddingMatrix& matrix, const std::filesystem::path& path) {
  const auto bytes = encode_embedding(matrix);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("short write to " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

EmbeddingMatrix read_embedding_file(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  try {
    return decode_embedding(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

EmbeddingFileHeader read_embedding_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::uint8_t buf[kEmbeddingHeaderBytes] = {};
  in.read(reinterpret_cast<char*>(buf), sizeof buf);
  return decode_header({buf, static_cast<std::size_t>(in.gcount())});
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::string text_embedding_key(std::string_view text) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(text)));
  return buf;
}

Eigen::VectorXf StubEmbeddingProvider::vector_for(std::string_view domain, std::string_view input,
                                                  int dim) const {
  std::uint64_t state = seed_ ^ fnv1a64(domain);
  state ^= splitmix64(state) ^ fnv1a64(input);
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) {
    const double u = static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
    v[i] = 2.0 * u - 1.0;
  }
  v /= v.norm();
  return v.cast<float>();
}

std::vector<Eigen::VectorXf> StubEmbeddingProvider::embed_audio_frames(std::span<const std::string> clips) const {
  std::vector<Eigen::VectorXf> out;
  out.reserve(clips.size());
  for (const auto& clip : clips) out.push_back(vector_for("audio", clip, kAudioDim));
  return out;
}

std::vector<Eigen::VectorXf> StubEmbeddingProvider::embed_sentences(std::span<const std::string> texts) const {
  std::vector<Eigen::VectorXf> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(vector_for("sentence", t, kSentenceDim));
  return out;
}

TextEmbedding StubEmbeddingProvider::embed_text(const std::string& text) const {
  return {vector_for("text", text, kTextDim)};
}

std::unique_ptr<EmbeddingProvider> stub_provider(std::uint64_t seed) {
  return std::make_unique<StubEmbeddingProvider>(seed);
}

}  // namespace ecc
