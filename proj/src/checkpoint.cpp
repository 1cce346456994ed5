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

#include "ecc/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "ecc/errors.hpp"

namespace ecc {

namespace {

class Writer {
 public:
  void u16(std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
  }
  void u32(std::uint32_t v) {
    for (int s = 0; s < 32; s += 8) out.push_back(static_cast<std::uint8_t>((v >> s) & 0xFF));
  }
  void f32(float f) { u32(std::bit_cast<std::uint32_t>(f)); }

  std::vector<std::uint8_t> out;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint16_t u16() {
    need(2);
    const auto v = static_cast<std::uint16_t>(bytes_[pos_] | (bytes_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  int dim() {
    const std::uint32_t v = u32();
    if (v > (1u << 24)) throw FormatError("checkpoint: implausible dimension " + std::to_string(v));
    return static_cast<int>(v);
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw FormatError("checkpoint: truncated");
  }
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

void put_mhsa(Writer& w, const model::MhsaConfig& c) {
  w.u32(static_cast<std::uint32_t>(c.num_blocks));
  w.u32(static_cast<std::uint32_t>(c.num_heads));
  w.u32(static_cast<std::uint32_t>(c.model_dim));
  w.u32(static_cast<std::uint32_t>(c.ffn_width()));
}

model::MhsaConfig get_mhsa(Reader& r) {
  model::MhsaConfig c;
  c.num_blocks = r.dim();
  c.num_heads = r.dim();
  c.model_dim = r.dim();
  const int width = r.dim();
  c.ffn_hidden = width == 4 * c.model_dim ? 0 : width;
  return c;
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ck) {
  ck.config.validate();
  Writer w;
  w.out.insert(w.out.end(), {'E', 'C', 'C', 'M'});
  w.u16(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(ck.tau));
  put_mhsa(w, ck.config.audio);
  put_mhsa(w, ck.config.text);
  w.u32(static_cast<std::uint32_t>(ck.config.fusion_dim));
  w.u32(static_cast<std::uint32_t>(ck.config.head_hidden));
  w.u32(static_cast<std::uint32_t>(ck.config.feature_dims.size()));
  for (int d : ck.config.feature_dims) w.u32(static_cast<std::uint32_t>(d));
  ck.params.for_each([&](const std::string&, const auto& t) {
    w.u32(static_cast<std::uint32_t>(t.rows()));
    w.u32(static_cast<std::uint32_t>(t.cols()));
    for (Eigen::Index r = 0; r < t.rows(); ++r)
      for (Eigen::Index c = 0; c < t.cols(); ++c) w.f32(t(r, c));
  });
  return std::move(w.out);
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "ECCM", 4) != 0) throw FormatError("checkpoint: bad magic");
  Reader r(bytes.subspan(4));
  const std::uint16_t version = r.u16();
  if (version != kCheckpointVersion) throw FormatError("checkpoint: unsupported version " + std::to_string(version));
  Checkpoint ck;
  ck.tau = r.dim();
  ck.config.audio = get_mhsa(r);
  ck.config.text = get_mhsa(r);
  ck.config.fusion_dim = r.dim();
  ck.config.head_hidden = r.dim();
  const int n = r.dim();
  if (n > 64) throw FormatError("checkpoint: too many text features");
  ck.config.feature_dims.resize(static_cast<std::size_t>(n));
  for (auto& d : ck.config.feature_dims) d = r.dim();
  try {
    ck.config.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
  // Shapes come from the config; the stored ones must agree.
  ck.params = model::zero_params<float>(ck.config);
  ck.params.for_each([&](const std::string& name, auto& t) {
    const auto rows = r.u32();
    const auto cols = r.u32();
    if (rows != t.rows() || cols != t.cols())
      throw FormatError("checkpoint: tensor " + name + " has shape " + std::to_string(rows) + "x" +
                        std::to_string(cols) + ", expected " + std::to_string(t.rows()) + "x" +
                        std::to_string(t.cols()));
    for (Eigen::Index i = 0; i < t.rows(); ++i)
      for (Eigen::Index j = 0; j < t.cols(); ++j) t(i, j) = r.f32();
  });
  if (!r.done()) throw FormatError("checkpoint: trailing bytes");
  return ck;
}

void write_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  const auto bytes = encode_checkpoint(checkpoint);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return decode_checkpoint(bytes);
}

}  // namespace ecc
