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

#include "svkit/model.hpp"

#include <cmath>

#include "svkit/error.hpp"
#include "svkit/rng.hpp"

namespace svkit::model {

namespace {

// He-style fan-in scaling for the ReLU layers.
Matrix random_layer(Index rows, Index cols, Rng& rng) {
  Matrix w(rows, cols);
  const double scale = std::sqrt(2.0 / static_cast<double>(cols));
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) w(r, c) = scale * rng.normal();
  }
  return w;
}

}  // namespace

ToyModel init_model(const ToyModelConfig& cfg, std::uint64_t seed) {
  require_data(cfg.feat_dim >= 1 && cfg.hidden_dim >= 1 && cfg.channels >= 1 &&
                   cfg.embed_dim >= 1,
               "invalid config", "model dimensions must be positive");
  require_data(cfg.pooling == PoolingKind::gsp ||
                   cfg.channels % cfg.n_heads == 0,
               "invalid head split", "channels not divisible by n_heads");
  Rng rng(hash_combine(seed, 0x6d6f64656cULL));  // "model"
  ToyModel m;
  m.cfg = cfg;
  m.w1 = random_layer(cfg.hidden_dim, cfg.feat_dim, rng);
  m.b1 = Vector::Zero(cfg.hidden_dim);
  m.w2 = random_layer(cfg.channels, cfg.hidden_dim, rng);
  m.b2 = Vector::Zero(cfg.channels);
  m.pool = pooling::MqmhaParams::zeros(cfg.channels, cfg.n_heads,
                                       cfg.n_queries);
  if (cfg.pooling == PoolingKind::mqmha) {
    // Small nonzero init so heads differentiate from step one.
    for (Index r = 0; r < m.pool.query_weights.rows(); ++r) {
      for (Index c = 0; c < m.pool.query_weights.cols(); ++c) {
        m.pool.query_weights(r, c) = 0.1 * rng.normal();
      }
    }
  }
  m.w3 = random_layer(cfg.embed_dim, cfg.pooled_dim(), rng);
  m.b3 = Vector::Zero(cfg.embed_dim);
  return m;
}

Vector forward(const ToyModel& m, const Matrix& frames, ForwardCache& cache) {
  require_data(frames.cols() == m.cfg.feat_dim, "dim mismatch",
               "frame dim does not match model feat_dim");
  cache.x = frames;
  cache.h1 = ((frames * m.w1.transpose()).rowwise() + m.b1.transpose())
                 .cwiseMax(0.0);
  cache.h2 = ((cache.h1 * m.w2.transpose()).rowwise() + m.b2.transpose())
                 .cwiseMax(0.0);
  cache.pooled = m.cfg.pooling == PoolingKind::gsp
                     ? pooling::gsp(cache.h2)
                     : pooling::mqmha(cache.h2, m.pool);
  cache.embedding = m.w3 * cache.pooled + m.b3;
  return cache.embedding;
}

Vector embed(const ToyModel& m, const Matrix& frames) {
  ForwardCache cache;
  return forward(m, frames, cache);
}

ModelGrad::ModelGrad(const ToyModel& m)
    : w1(Matrix::Zero(m.w1.rows(), m.w1.cols())),
      w2(Matrix::Zero(m.w2.rows(), m.w2.cols())),
      w3(Matrix::Zero(m.w3.rows(), m.w3.cols())),
      pool_qw(Matrix::Zero(m.pool.query_weights.rows(),
                           m.pool.query_weights.cols())),
      b1(Vector::Zero(m.b1.size())),
      b2(Vector::Zero(m.b2.size())),
      b3(Vector::Zero(m.b3.size())) {}

void ModelGrad::set_zero() {
  w1.setZero();
  w2.setZero();
  w3.setZero();
  pool_qw.setZero();
  b1.setZero();
  b2.setZero();
  b3.setZero();
}

ModelGrad& ModelGrad::operator+=(const ModelGrad& other) {
  w1 += other.w1;
  w2 += other.w2;
  w3 += other.w3;
  pool_qw += other.pool_qw;
  b1 += other.b1;
  b2 += other.b2;
  b3 += other.b3;
  return *this;
}

void backward(const ToyModel& m, const ForwardCache& cache,
              const Vector& d_embedding, ModelGrad& acc) {
  require_data(d_embedding.size() == m.cfg.embed_dim, "gradient shape error",
               "embedding gradient size mismatch");

  acc.w3 += d_embedding * cache.pooled.transpose();
  acc.b3 += d_embedding;
  const Vector d_pooled = m.w3.transpose() * d_embedding;

  Matrix d_h2;
  if (m.cfg.pooling == PoolingKind::gsp) {
    d_h2 = pooling::gsp_backward(cache.h2, d_pooled);
  } else {
    pooling::MqmhaGrad pg = pooling::mqmha_backward(cache.h2, m.pool, d_pooled);
    d_h2 = std::move(pg.frames);
    acc.pool_qw += pg.query_weights;
  }

  const Matrix d_a2 =
      ((cache.h2.array() > 0.0).cast<double>() * d_h2.array()).matrix();
  acc.w2 += d_a2.transpose() * cache.h1;
  acc.b2 += d_a2.colwise().sum().transpose();

  const Matrix d_h1 = d_a2 * m.w2;
  const Matrix d_a1 =
      ((cache.h1.array() > 0.0).cast<double>() * d_h1.array()).matrix();
  acc.w1 += d_a1.transpose() * cache.x;
  acc.b1 += d_a1.colwise().sum().transpose();
}

}  // namespace svkit::model
