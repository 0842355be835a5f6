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

#pragma once

#include <cstdint>

#include "svkit/pooling.hpp"
#include "svkit/types.hpp"

namespace svkit::model {

enum class PoolingKind { gsp, mqmha };

struct ToyModelConfig {
  int feat_dim = 81;
  int hidden_dim = 128;
  int channels = 64;
  int embed_dim = 128;
  PoolingKind pooling = PoolingKind::mqmha;
  int n_heads = 2;
  int n_queries = 2;

  int pooled_dim() const {
    return pooling == PoolingKind::gsp ? 2 * channels
                                       : 2 * channels * n_queries;
  }
};

// Desk-scale embedding network: per-frame two-layer ReLU head, statistics
// pooling (GSP or MQMHA), linear projection to the embedding space.
struct ToyModel {
  ToyModelConfig cfg;
  Matrix w1;  // hidden x feat
  Vector b1;
  Matrix w2;  // channels x hidden
  Vector b2;
  pooling::MqmhaParams pool;  // used when cfg.pooling == mqmha
  Matrix w3;  // embed x pooled
  Vector b3;
};

ToyModel init_model(const ToyModelConfig& cfg, std::uint64_t seed);

struct ForwardCache {
  Matrix x;   // T x feat
  Matrix h1;  // T x hidden
  Matrix h2;  // T x channels
  Vector pooled;
  Vector embedding;
};

// Forward pass for a single utterance (frames: T x feat_dim).
Vector forward(const ToyModel& m, const Matrix& frames, ForwardCache& cache);
Vector embed(const ToyModel& m, const Matrix& frames);

// Parameter-shaped gradient accumulator.
struct ModelGrad {
  Matrix w1, w2, w3, pool_qw;
  Vector b1, b2, b3;

  explicit ModelGrad(const ToyModel& m);
  void set_zero();
  ModelGrad& operator+=(const ModelGrad& other);
};

// Accumulates d(loss)/d(params) into acc given d(loss)/d(embedding).
void backward(const ToyModel& m, const ForwardCache& cache,
              const Vector& d_embedding, ModelGrad& acc);

}  // namespace svkit::model
