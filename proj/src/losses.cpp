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

#include "svkit/losses.hpp"

#include <cmath>

#include "svkit/error.hpp"
#include "svkit/rng.hpp"

namespace svkit::losses {

namespace {

constexpr double kNormGuard = 1e-12;

void check_bank(const SubCenterBank& bank) {
  require_data(bank.n_classes >= 1 && bank.n_subcenters >= 1 &&
                   bank.weights.rows() == static_cast<Index>(bank.n_classes) *
                                              bank.n_subcenters,
               "dim mismatch", "bank shape inconsistent");
}

void check_config(const MarginLossConfig& cfg) {
  require_data(cfg.valid(), "invalid config", "need s > 0 and 0 <= m < 1");
}

double unit_cosine(const Vector& x_hat, const Vector& w_hat) {
  return std::clamp(x_hat.dot(w_hat), -1.0, 1.0);
}

// Target-class cosine after the margin.  AM: c - m.  AAM: cos(theta + m)
// while theta + m <= pi, otherwise the monotone surrogate c - m*sin(m).
double apply_margin(double c, const MarginLossConfig& cfg) {
  if (cfg.kind == MarginKind::am) return c - cfg.margin;
  if (c > std::cos(3.14159265358979323846 - cfg.margin)) {
    const double sine = std::sqrt(std::max(1.0 - c * c, 0.0));
    return c * std::cos(cfg.margin) - sine * std::sin(cfg.margin);
  }
  return c - cfg.margin * std::sin(cfg.margin);
}

double apply_margin_derivative(double c, const MarginLossConfig& cfg) {
  if (cfg.kind == MarginKind::am) return 1.0;
  if (c > std::cos(3.14159265358979323846 - cfg.margin)) {
    const double sine = std::sqrt(std::max(1.0 - c * c, kNormGuard));
    return std::cos(cfg.margin) + c * std::sin(cfg.margin) / sine;
  }
  return 1.0;
}

Vector stable_softmax(const Vector& logits) {
  const Vector e = (logits.array() - logits.maxCoeff()).exp();
  return e / e.sum();
}

}  // namespace

SubCenterBank make_bank(Matrix weights, int n_classes, int n_subcenters) {
  SubCenterBank bank{std::move(weights), n_classes, n_subcenters};
  check_bank(bank);
  return bank;
}

SubCenterBank random_bank(int n_classes, int n_subcenters, int dim,
                          std::uint64_t seed) {
  Rng rng(hash_combine(seed, 0x62616e6bULL));  // "bank"
  Matrix w(static_cast<Index>(n_classes) * n_subcenters, dim);
  for (Index r = 0; r < w.rows(); ++r) {
    Vector v = rng.normal_vector(dim);
    w.row(r) = v / std::max(v.norm(), kNormGuard);
  }
  return make_bank(std::move(w), n_classes, n_subcenters);
}

double subcenter_cosine(const Vector& x, const SubCenterBank& bank, int j) {
  check_bank(bank);
  require_data(j >= 0 && j < bank.n_classes, "bad label");
  const double xn = x.norm();
  require_data(xn > kNormGuard, "degenerate embedding", "zero-norm embedding");
  const Vector x_hat = x / xn;
  double best = -2.0;
  for (int k = 0; k < bank.n_subcenters; ++k) {
    const Vector w = bank.subcenter(j, k).transpose();
    const double c = unit_cosine(x_hat, w / std::max(w.norm(), kNormGuard));
    if (c > best) best = c;
  }
  return best;
}

int selected_subcenter(const Vector& x, const SubCenterBank& bank, int j) {
  check_bank(bank);
  require_data(j >= 0 && j < bank.n_classes, "bad label");
  const double xn = x.norm();
  require_data(xn > kNormGuard, "degenerate embedding", "zero-norm embedding");
  const Vector x_hat = x / xn;
  double best = -2.0;
  int best_k = 0;
  for (int k = 0; k < bank.n_subcenters; ++k) {
    const Vector w = bank.subcenter(j, k).transpose();
    const double c = unit_cosine(x_hat, w / std::max(w.norm(), kNormGuard));
    if (c > best) {
      best = c;
      best_k = k;
    }
  }
  return best_k;
}

Vector margin_logits(const Vector& x, const SubCenterBank& bank, int label,
                     const MarginLossConfig& cfg) {
  check_bank(bank);
  check_config(cfg);
  require_data(label >= 0 && label < bank.n_classes, "bad label");
  Vector logits(bank.n_classes);
  for (int j = 0; j < bank.n_classes; ++j) {
    double c = subcenter_cosine(x, bank, j);
    if (j == label) c = apply_margin(c, cfg);
    logits[j] = cfg.scale * c;
  }
  return logits;
}

LossGrad loss_and_grad(const Matrix& embeddings, const std::vector<int>& labels,
                       const SubCenterBank& bank, const MarginLossConfig& cfg) {
  check_bank(bank);
  check_config(cfg);
  const Index batch = embeddings.rows();
  require_data(batch >= 1, "no data", "empty batch");
  require_data(static_cast<Index>(labels.size()) == batch, "dim mismatch",
               "labels/batch size mismatch");
  require_data(embeddings.allFinite(), "non-finite input",
               "NaN or inf in embeddings");
  require_data(bank.weights.allFinite(), "non-finite input",
               "NaN or inf in bank weights");

  const int n_classes = bank.n_classes;
  const int k_sub = bank.n_subcenters;

  // Normalize sub-center rows once; keep the raw norms for the chain rule.
  Matrix w_hat(bank.weights.rows(), bank.dim());
  Vector w_norm(bank.weights.rows());
  for (Index r = 0; r < bank.weights.rows(); ++r) {
    w_norm[r] = std::max(bank.weights.row(r).norm(), kNormGuard);
    w_hat.row(r) = bank.weights.row(r) / w_norm[r];
  }

  LossGrad out;
  out.d_embeddings = Matrix::Zero(batch, embeddings.cols());
  out.d_weights = Matrix::Zero(bank.weights.rows(), bank.dim());

  const double inv_batch = 1.0 / static_cast<double>(batch);
  double total_loss = 0.0;

  Vector cosines(n_classes);
  std::vector<int> selected(n_classes);

  for (Index b = 0; b < batch; ++b) {
    const int label = labels[static_cast<std::size_t>(b)];
    require_data(label >= 0 && label < n_classes, "bad label");
    const Vector x = embeddings.row(b).transpose();
    const double xn = x.norm();
    require_data(xn > kNormGuard, "degenerate embedding",
                 "zero-norm embedding in batch");
    const Vector x_hat = x / xn;

    const Vector all = w_hat * x_hat;  // cosines against every sub-center
    for (int j = 0; j < n_classes; ++j) {
      int best_k = 0;
      double best = -2.0;
      for (int k = 0; k < k_sub; ++k) {
        const double c =
            std::clamp(all[static_cast<Index>(j) * k_sub + k], -1.0, 1.0);
        if (c > best) {
          best = c;
          best_k = k;
        }
      }
      cosines[j] = best;
      selected[static_cast<std::size_t>(j)] = best_k;
    }

    Vector logits(n_classes);
    for (int j = 0; j < n_classes; ++j) {
      logits[j] = cfg.scale *
                  (j == label ? apply_margin(cosines[j], cfg) : cosines[j]);
    }
    const Vector probs = stable_softmax(logits);
    total_loss -= std::log(std::max(probs[label], 1e-300));

    // dL/dlogit = (p - onehot) / batch; chain through scale, margin and the
    // selected sub-center's cosine.
    Vector d_x_hat = Vector::Zero(embeddings.cols());
    double radial = 0.0;  // coefficient of x_hat in d(cos)/dx
    for (int j = 0; j < n_classes; ++j) {
      double d_logit = probs[j] * inv_batch;
      if (j == label) d_logit -= inv_batch;
      if (d_logit == 0.0) continue;
      double dc = d_logit * cfg.scale;
      if (j == label) dc *= apply_margin_derivative(cosines[j], cfg);
      const Index row = static_cast<Index>(j) * k_sub +
                        selected[static_cast<std::size_t>(j)];
      d_x_hat += dc * w_hat.row(row).transpose();
      radial += dc * cosines[j];
      out.d_weights.row(row) +=
          dc / w_norm[row] * (x_hat - cosines[j] * w_hat.row(row).transpose())
                                 .transpose();
    }
    out.d_embeddings.row(b) = ((d_x_hat - radial * x_hat) / xn).transpose();
  }

  out.loss = total_loss * inv_batch;
  return out;
}

SubCenterBank consolidate_dominated(const SubCenterBank& bank) {
  check_bank(bank);
  Matrix w(bank.n_classes, bank.dim());
  for (int j = 0; j < bank.n_classes; ++j) {
    int best_k = 0;
    double best = -1.0;
    for (int k = 0; k < bank.n_subcenters; ++k) {
      const double norm = bank.subcenter(j, k).norm();
      if (norm > best) {
        best = norm;
        best_k = k;
      }
    }
    w.row(j) = bank.subcenter(j, best_k);
  }
  return make_bank(std::move(w), bank.n_classes, 1);
}

SubCenterBank consolidate_sum(const SubCenterBank& bank,
                              std::vector<int>* degenerate_classes) {
  check_bank(bank);
  if (degenerate_classes != nullptr) degenerate_classes->clear();
  Matrix w = Matrix::Zero(bank.n_classes, bank.dim());
  for (int j = 0; j < bank.n_classes; ++j) {
    for (int k = 0; k < bank.n_subcenters; ++k) {
      w.row(j) += bank.subcenter(j, k);
    }
    if (w.row(j).norm() < 1e-8 && degenerate_classes != nullptr) {
      degenerate_classes->push_back(j);
    }
  }
  return make_bank(std::move(w), bank.n_classes, 1);
}

}  // namespace svkit::losses
