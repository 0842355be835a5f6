// Copyright (c) 2025 svkit contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "svkit/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "svkit/dataio.hpp"
#include "svkit/error.hpp"

namespace svkit::dataio {

namespace {

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(out, bits);
}

void put_matrix(std::string& out, const Matrix& m) {
  put_u64(out, static_cast<std::uint64_t>(m.rows()));
  put_u64(out, static_cast<std::uint64_t>(m.cols()));
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) put_f64(out, m(r, c));
  }
}

void put_vector(std::string& out, const Vector& v) {
  put_u64(out, static_cast<std::uint64_t>(v.size()));
  for (Index i = 0; i < v.size(); ++i) put_f64(out, v[i]);
}

class CkptReader {
 public:
  explicit CkptReader(const std::string& path) : in_(path, std::ios::binary) {
    require_data(in_.good(), "truncated file", "cannot open " + path);
  }

  void bytes(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    require_data(static_cast<std::size_t>(in_.gcount()) == n, "truncated file",
                 "unexpected end of file");
  }

  std::uint16_t u16() {
    unsigned char b[2];
    bytes(b, 2);
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
  }

  std::uint32_t u32() {
    unsigned char b[4];
    bytes(b, 4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
    return v;
  }

  std::uint64_t u64() {
    unsigned char b[8];
    bytes(b, 8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return v;
  }

  double f64() {
    const std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }

  Matrix matrix() {
    const auto rows = static_cast<Index>(u64());
    const auto cols = static_cast<Index>(u64());
    Matrix m(rows, cols);
    for (Index r = 0; r < rows; ++r) {
      for (Index c = 0; c < cols; ++c) m(r, c) = f64();
    }
    return m;
  }

  Vector vector() {
    const auto n = static_cast<Index>(u64());
    Vector v(n);
    for (Index i = 0; i < n; ++i) v[i] = f64();
    return v;
  }

 private:
  std::ifstream in_;
};

}  // namespace

void save_checkpoint(const std::string& path, const trainer::Checkpoint& ckpt) {
  const auto& cfg = ckpt.net.cfg;
  std::string out;
  out.append("SVCK", 4);
  put_u16(out, 1);
  out.push_back(cfg.pooling == model::PoolingKind::gsp ? 0 : 1);
  put_u32(out, static_cast<std::uint32_t>(cfg.feat_dim));
  put_u32(out, static_cast<std::uint32_t>(cfg.hidden_dim));
  put_u32(out, static_cast<std::uint32_t>(cfg.channels));
  put_u32(out, static_cast<std::uint32_t>(cfg.embed_dim));
  put_u32(out, static_cast<std::uint32_t>(cfg.n_heads));
  put_u32(out, static_cast<std::uint32_t>(cfg.n_queries));
  put_matrix(out, ckpt.net.w1);
  put_vector(out, ckpt.net.b1);
  put_matrix(out, ckpt.net.w2);
  put_vector(out, ckpt.net.b2);
  put_matrix(out, ckpt.net.pool.query_weights);
  put_matrix(out, ckpt.net.w3);
  put_vector(out, ckpt.net.b3);
  put_u32(out, static_cast<std::uint32_t>(ckpt.bank.n_classes));
  put_u32(out, static_cast<std::uint32_t>(ckpt.bank.n_subcenters));
  put_matrix(out, ckpt.bank.weights);
  out.push_back(ckpt.loss_kind == losses::MarginKind::am ? 0 : 1);
  put_f64(out, ckpt.scale);
  put_u64(out, static_cast<std::uint64_t>(ckpt.step));
  put_u64(out, ckpt.seed);
  atomic_write(path, out);
}

trainer::Checkpoint load_checkpoint(const std::string& path) {
  CkptReader r(path);
  char magic[4];
  r.bytes(magic, 4);
  require_data(std::memcmp(magic, "SVCK", 4) == 0, "bad magic",
               "not a checkpoint file");
  require_data(r.u16() == 1, "bad magic", "unsupported checkpoint version");

  trainer::Checkpoint ckpt;
  std::uint8_t pooling = 0;
  r.bytes(&pooling, 1);
  auto& cfg = ckpt.net.cfg;
  cfg.pooling = pooling == 0 ? model::PoolingKind::gsp
                             : model::PoolingKind::mqmha;
  cfg.feat_dim = static_cast<int>(r.u32());
  cfg.hidden_dim = static_cast<int>(r.u32());
  cfg.channels = static_cast<int>(r.u32());
  cfg.embed_dim = static_cast<int>(r.u32());
  cfg.n_heads = static_cast<int>(r.u32());
  cfg.n_queries = static_cast<int>(r.u32());

  ckpt.net.w1 = r.matrix();
  ckpt.net.b1 = r.vector();
  ckpt.net.w2 = r.matrix();
  ckpt.net.b2 = r.vector();
  ckpt.net.pool.n_heads = cfg.n_heads;
  ckpt.net.pool.n_queries = cfg.n_queries;
  ckpt.net.pool.query_weights = r.matrix();
  ckpt.net.w3 = r.matrix();
  ckpt.net.b3 = r.vector();

  require_data(ckpt.net.w1.rows() == cfg.hidden_dim &&
                   ckpt.net.w1.cols() == cfg.feat_dim &&
                   ckpt.net.w2.rows() == cfg.channels &&
                   ckpt.net.w3.rows() == cfg.embed_dim &&
                   ckpt.net.w3.cols() == cfg.pooled_dim(),
               "dim mismatch", "checkpoint tensor shapes");

  const int n_classes = static_cast<int>(r.u32());
  const int n_subcenters = static_cast<int>(r.u32());
  Matrix bank_weights = r.matrix();
  require_data(bank_weights.rows() ==
                   static_cast<Index>(n_classes) * n_subcenters,
               "dim mismatch", "checkpoint bank shape");
  ckpt.bank = losses::make_bank(std::move(bank_weights), n_classes,
                                n_subcenters);

  std::uint8_t loss_kind = 0;
  r.bytes(&loss_kind, 1);
  ckpt.loss_kind = loss_kind == 0 ? losses::MarginKind::am
                                  : losses::MarginKind::aam;
  ckpt.scale = r.f64();
  ckpt.step = static_cast<std::int64_t>(r.u64());
  ckpt.seed = r.u64();
  return ckpt;
}

}  // namespace svkit::dataio
