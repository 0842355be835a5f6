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
#include <vector>

#include "svkit/types.hpp"

namespace svkit::losses {

enum class MarginKind { am, aam };

struct MarginLossConfig {
  MarginKind kind = MarginKind::am;
  double scale = 32.0;   // s
  double margin = 0.2;   // m, in [0, 1)
  bool valid() const { return scale > 0 && margin >= 0 && margin < 1; }
};

// K sub-center weight vectors per class, flattened: row(j * n_subcenters + k)
// holds sub-center k of class j.  Rows are stored unnormalized; cosine
// computations L2-normalize on read, while consolidate_dominated uses the
// raw norms.
struct SubCenterBank {
  Matrix weights;  // (n_classes * n_subcenters) x dim
  int n_classes = 0;
  int n_subcenters = 1;

  int dim() const { return static_cast<int>(weights.cols()); }
  Eigen::Block<const Matrix, 1> subcenter(int j, int k) const {
    return weights.row(j * n_subcenters + k);
  }
};

SubCenterBank make_bank(Matrix weights, int n_classes, int n_subcenters);

// Unit-norm rows drawn from a seeded stream.
SubCenterBank random_bank(int n_classes, int n_subcenters, int dim,
                          std::uint64_t seed);

// max over k of cos(x, W_{j,k}): the nearest sub-center decides the class
// cosine.
double subcenter_cosine(const Vector& x, const SubCenterBank& bank, int j);

// Index k of the sub-center selected by the max above (first max on ties).
int selected_subcenter(const Vector& x, const SubCenterBank& bank, int j);

// Scaled logits over all classes.  Non-target classes get s*cos; the target
// gets s*(cos - m) for AM and s*cos(theta + m) for AAM.
Vector margin_logits(const Vector& x, const SubCenterBank& bank, int label,
                     const MarginLossConfig& cfg);

struct LossGrad {
  double loss = 0.0;
  Matrix d_embeddings;  // batch x dim
  Matrix d_weights;     // same shape as bank.weights
};

// Mean cross-entropy over the batch on margin logits, with analytic
// gradients.  Gradients flow only through each sample's selected (argmax)
// sub-center per class.
LossGrad loss_and_grad(const Matrix& embeddings, const std::vector<int>& labels,
                       const SubCenterBank& bank, const MarginLossConfig& cfg);

// Keeps, per class, the sub-center with the largest raw norm and discards
// the rest.  Result has n_subcenters == 1.
SubCenterBank consolidate_dominated(const SubCenterBank& bank);

// Sums all sub-centers of each class into a single center.  Classes whose
// summed center has norm < 1e-8 are reported through degenerate_classes
// (never renormalized silently).
SubCenterBank consolidate_sum(const SubCenterBank& bank,
                              std::vector<int>* degenerate_classes = nullptr);

}  // namespace svkit::losses
