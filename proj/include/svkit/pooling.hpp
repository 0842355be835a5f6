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

#include "svkit/types.hpp"

namespace svkit::pooling {

// Variance is floored here before every sqrt, which keeps outputs and
// gradients finite on constant input.
inline constexpr double kVarianceFloor = 1e-10;

// Multi-query multi-head attention pooling parameters.  One learned
// attention vector per (query, head); row index = query * n_heads + head.
struct MqmhaParams {
  int n_heads = 1;
  int n_queries = 1;
  Matrix query_weights;  // (n_queries * n_heads) x head_dim

  int head_dim() const { return static_cast<int>(query_weights.cols()); }
  int channels() const { return n_heads * head_dim(); }

  static MqmhaParams zeros(int channels, int n_heads, int n_queries);
};

// Global statistics pooling: concatenated per-channel mean (first C) and
// population standard deviation (last C) over time.
Vector gsp(const Matrix& frames);

// Attention weights, one column per (query, head) in row-index order;
// each column is a softmax over the T frames.
Matrix attention_weights(const Matrix& frames, const MqmhaParams& p);

// MQMHA pooling: per query, attention-weighted per-head means (C values)
// followed by attention-weighted stds (C values); output size 2 * C * q.
Vector mqmha(const Matrix& frames, const MqmhaParams& p);

// d(loss)/d(frames) for gsp given upstream = d(loss)/d(output).
Matrix gsp_backward(const Matrix& frames, const Vector& upstream);

struct MqmhaGrad {
  Matrix frames;         // T x C
  Matrix query_weights;  // same shape as params
};

MqmhaGrad mqmha_backward(const Matrix& frames, const MqmhaParams& p,
                         const Vector& upstream);

}  // namespace svkit::pooling
