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

#include "svkit/pooling.hpp"

#include <cmath>

#include "svkit/error.hpp"

namespace svkit::pooling {

namespace {

void check_shapes(const Matrix& frames, const MqmhaParams& p) {
  require_data(frames.rows() >= 1, "input too short", "need at least one frame");
  require_data(p.n_heads >= 1 && p.n_queries >= 1, "invalid head split",
               "need n_heads >= 1 and n_queries >= 1");
  require_data(frames.cols() % p.n_heads == 0, "invalid head split",
               "channels not divisible by n_heads");
  require_data(p.query_weights.rows() ==
                       static_cast<Index>(p.n_queries) * p.n_heads &&
                   p.query_weights.cols() == frames.cols() / p.n_heads,
               "invalid head split", "query weight shape mismatch");
}

Vector softmax(const Vector& z) {
  const Vector e = (z.array() - z.maxCoeff()).exp();
  return e / e.sum();
}

}  // namespace

MqmhaParams MqmhaParams::zeros(int channels, int n_heads, int n_queries) {
  MqmhaParams p;
  p.n_heads = n_heads;
  p.n_queries = n_queries;
  p.query_weights = Matrix::Zero(static_cast<Index>(n_queries) * n_heads,
                                 channels / n_heads);
  return p;
}

Vector gsp(const Matrix& frames) {
  require_data(frames.rows() >= 1, "input too short", "need at least one frame");
  const Index c = frames.cols();
  Vector out(2 * c);
  const Vector mean = frames.colwise().mean();
  const Vector var =
      (frames.rowwise() - mean.transpose()).array().square().colwise().mean();
  out.head(c) = mean;
  out.tail(c) = var.array().max(kVarianceFloor).sqrt();
  return out;
}

Matrix attention_weights(const Matrix& frames, const MqmhaParams& p) {
  check_shapes(frames, p);
  const Index d = frames.cols() / p.n_heads;
  Matrix weights(frames.rows(), p.query_weights.rows());
  for (int q = 0; q < p.n_queries; ++q) {
    for (int h = 0; h < p.n_heads; ++h) {
      const Index row = static_cast<Index>(q) * p.n_heads + h;
      const Vector logits =
          frames.middleCols(h * d, d) * p.query_weights.row(row).transpose();
      weights.col(row) = softmax(logits);
    }
  }
  return weights;
}

Vector mqmha(const Matrix& frames, const MqmhaParams& p) {
  check_shapes(frames, p);
  const Index c = frames.cols();
  const Index d = c / p.n_heads;
  Vector out(2 * c * p.n_queries);
  for (int q = 0; q < p.n_queries; ++q) {
    for (int h = 0; h < p.n_heads; ++h) {
      const Index row = static_cast<Index>(q) * p.n_heads + h;
      const auto slice = frames.middleCols(h * d, d);
      const Vector alpha = softmax(slice * p.query_weights.row(row).transpose());
      const Vector mean = slice.transpose() * alpha;
      const Matrix dev = slice.rowwise() - mean.transpose();
      const Vector var = dev.array().square().matrix().transpose() * alpha;
      out.segment(q * 2 * c + h * d, d) = mean;
      out.segment(q * 2 * c + c + h * d, d) =
          var.array().max(kVarianceFloor).sqrt();
    }
  }
  return out;
}

Matrix gsp_backward(const Matrix& frames, const Vector& upstream) {
  const Index t = frames.rows();
  const Index c = frames.cols();
  require_data(upstream.size() == 2 * c, "gradient shape error",
               "upstream size must be 2*channels");
  const double inv_t = 1.0 / static_cast<double>(t);
  const Vector mean = frames.colwise().mean();
  const Matrix dev = frames.rowwise() - mean.transpose();
  const Vector var = dev.array().square().colwise().mean();

  Matrix grad = Matrix::Zero(t, c);
  grad.rowwise() += upstream.head(c).transpose() * inv_t;
  for (Index j = 0; j < c; ++j) {
    if (var[j] <= kVarianceFloor) continue;  // sqrt(floor) is constant here
    const double s = std::sqrt(var[j]);
    grad.col(j) += upstream[c + j] * inv_t / s * dev.col(j);
  }
  return grad;
}

MqmhaGrad mqmha_backward(const Matrix& frames, const MqmhaParams& p,
                         const Vector& upstream) {
  check_shapes(frames, p);
  const Index c = frames.cols();
  const Index d = c / p.n_heads;
  require_data(upstream.size() == 2 * c * p.n_queries, "gradient shape error",
               "upstream size must be 2*channels*n_queries");

  MqmhaGrad grad;
  grad.frames = Matrix::Zero(frames.rows(), c);
  grad.query_weights = Matrix::Zero(p.query_weights.rows(), d);

  for (int q = 0; q < p.n_queries; ++q) {
    for (int h = 0; h < p.n_heads; ++h) {
      const Index row = static_cast<Index>(q) * p.n_heads + h;
      const auto slice = frames.middleCols(h * d, d);
      const Vector w = p.query_weights.row(row).transpose();
      const Vector alpha = softmax(slice * w);
      const Vector mean = slice.transpose() * alpha;
      const Matrix dev = slice.rowwise() - mean.transpose();
      const Vector var = dev.array().square().matrix().transpose() * alpha;

      const Vector g_mean = upstream.segment(q * 2 * c + h * d, d);
      const Vector g_std = upstream.segment(q * 2 * c + c + h * d, d);
      Vector d_var(d);
      for (Index j = 0; j < d; ++j) {
        d_var[j] = var[j] > kVarianceFloor
                       ? g_std[j] / (2.0 * std::sqrt(var[j]))
                       : 0.0;
      }

      // Direct paths, holding the attention weights fixed.
      Matrix d_slice = alpha * g_mean.transpose();
      for (Index j = 0; j < d; ++j) {
        d_slice.col(j) +=
            (2.0 * d_var[j]) * (alpha.array() * dev.col(j).array()).matrix();
      }

      // Path through the attention weights and the softmax.
      const Vector d_alpha =
          slice * g_mean + dev.array().square().matrix() * d_var;
      const Vector d_logits =
          alpha.array() * (d_alpha.array() - alpha.dot(d_alpha));
      d_slice += d_logits * w.transpose();
      grad.query_weights.row(row) += (slice.transpose() * d_logits).transpose();

      grad.frames.middleCols(h * d, d) += d_slice;
    }
  }
  return grad;
}

}  // namespace svkit::pooling
