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

#include "svkit/trainer.hpp"

#include <algorithm>
#include <cmath>

#include "svkit/error.hpp"
#include "svkit/rng.hpp"

namespace svkit::trainer {

double margin_at(const MarginSchedule& schedule, std::int64_t step) {
  require_data(schedule.start_m >= 0 && schedule.start_m <= schedule.end_m &&
                   schedule.end_m < 1,
               "invalid config", "need 0 <= start_m <= end_m < 1");
  require_data(schedule.total_steps >= 1, "invalid config",
               "schedule total_steps must be >= 1");
  if (schedule.shape == ScheduleShape::exponential) {
    require_data(schedule.start_m > 0, "invalid exponential schedule",
                 "exponential ramp needs start_m > 0");
  }
  const double t = std::min(
      1.0, std::max(0.0, static_cast<double>(step) /
                             static_cast<double>(schedule.total_steps)));
  double m;
  if (schedule.shape == ScheduleShape::linear) {
    m = schedule.start_m + (schedule.end_m - schedule.start_m) * t;
  } else {
    m = schedule.start_m * std::pow(schedule.end_m / schedule.start_m, t);
  }
  return std::clamp(m, schedule.start_m, schedule.end_m);
}

PlateauScheduler plateau_step(PlateauScheduler s, double val_metric) {
  if (val_metric < s.best_metric - kPlateauImprovementTol) {
    s.best_metric = val_metric;
    s.bad_count = 0;
    return s;
  }
  if (++s.bad_count > s.patience) {
    s.lr = std::max(s.lr * s.decay_factor, s.min_lr);
    s.bad_count = 0;
  }
  return s;
}

StageConfig stage1_defaults() {
  StageConfig cfg;
  cfg.lr0 = 0.08;
  cfg.momentum = 0.9;
  cfg.weight_decay = 1e-3;
  cfg.batch_size = 1024;
  cfg.frames = 200;
  cfg.margin = {0.0, 0.2, 0, ScheduleShape::linear};
  cfg.loss_kind = losses::MarginKind::am;
  cfg.patience = 2;
  cfg.decay_factor = 0.1;
  cfg.min_lr = 1e-6;
  cfg.validate_every = 2000;
  cfg.total_steps = 1000;
  return cfg;
}

StageConfig lmft_defaults() {
  StageConfig cfg;
  cfg.lr0 = 8e-5;
  cfg.momentum = 0.9;
  cfg.weight_decay = 1e-3;
  cfg.batch_size = 256;
  cfg.frames = 1200;
  cfg.margin = {0.2, 0.8, 0, ScheduleShape::exponential};
  cfg.loss_kind = losses::MarginKind::aam;
  cfg.patience = 2;
  cfg.decay_factor = 0.5;
  cfg.min_lr = 1e-6;
  cfg.validate_every = 2000;
  cfg.total_steps = 300;
  return cfg;
}

namespace {

// A trainable view: utterance indices into the corpus plus remapped labels.
struct CorpusView {
  const dataio::SynthCorpus* corpus = nullptr;
  std::vector<std::size_t> utt_indices;
  std::vector<int> labels;  // parallel to utt_indices
  int n_classes = 0;
};

CorpusView full_view(const dataio::SynthCorpus& corpus) {
  CorpusView view;
  view.corpus = &corpus;
  view.n_classes = static_cast<int>(corpus.class_ids.size());
  view.utt_indices.reserve(corpus.utts.size());
  view.labels.reserve(corpus.utts.size());
  for (std::size_t i = 0; i < corpus.utts.size(); ++i) {
    view.utt_indices.push_back(i);
    view.labels.push_back(corpus.utts[i].label);
  }
  return view;
}

// Keeps only non-speed classes; returns the kept original class indices so
// the bank rows can be sliced to match.
CorpusView clean_view(const dataio::SynthCorpus& corpus,
                      std::vector<int>* kept_classes) {
  kept_classes->clear();
  std::vector<int> remap(corpus.class_ids.size(), -1);
  for (std::size_t c = 0; c < corpus.class_ids.size(); ++c) {
    if (corpus.class_ids[c].find(dataio::kSpeedTag) == std::string::npos) {
      remap[c] = static_cast<int>(kept_classes->size());
      kept_classes->push_back(static_cast<int>(c));
    }
  }
  CorpusView view;
  view.corpus = &corpus;
  view.n_classes = static_cast<int>(kept_classes->size());
  for (std::size_t i = 0; i < corpus.utts.size(); ++i) {
    const int label = corpus.utts[i].label;
    if (remap[static_cast<std::size_t>(label)] >= 0) {
      view.utt_indices.push_back(i);
      view.labels.push_back(remap[static_cast<std::size_t>(label)]);
    }
  }
  return view;
}

struct SgdState {
  model::ModelGrad velocity;
  Matrix bank_velocity;

  SgdState(const model::ToyModel& m, const losses::SubCenterBank& bank)
      : velocity(m),
        bank_velocity(Matrix::Zero(bank.weights.rows(), bank.weights.cols())) {
  }
};

void sgd_update_tensor(Matrix& param, Matrix& vel, const Matrix& grad,
                       double lr, double momentum, double weight_decay) {
  vel = momentum * vel + (grad + weight_decay * param);
  param -= lr * vel;
}

void sgd_update_tensor(Vector& param, Vector& vel, const Vector& grad,
                       double lr, double momentum, double weight_decay) {
  vel = momentum * vel + (grad + weight_decay * param);
  param -= lr * vel;
}

Matrix crop_for(const dataio::SynthCorpus& corpus,
                const dataio::SynthUtterance& utt, int frames, Index start) {
  require_data(corpus.frames_per_utt >= 1, "invalid config",
               "training needs a feature corpus (frames_per_utt > 0)");
  return dataio::materialize_crop(utt, corpus.frames_per_utt,
                                  corpus.frame_noise, start, frames);
}

double validation_loss(const model::ToyModel& net,
                       const losses::SubCenterBank& bank, double scale,
                       const CorpusView& view,
                       const std::vector<std::size_t>& val_slots, int frames) {
  // Margin-free cross entropy on fixed crops: measures separability without
  // the moving margin shifting the plateau comparison.
  Matrix embeddings(static_cast<Index>(val_slots.size()), net.cfg.embed_dim);
  std::vector<int> labels;
  labels.reserve(val_slots.size());
  for (std::size_t i = 0; i < val_slots.size(); ++i) {
    const auto slot = val_slots[i];
    const auto& utt = view.corpus->utts[view.utt_indices[slot]];
    embeddings.row(static_cast<Index>(i)) =
        model::embed(net, crop_for(*view.corpus, utt, frames, 0)).transpose();
    labels.push_back(view.labels[slot]);
  }
  losses::MarginLossConfig cfg{losses::MarginKind::am, scale, 0.0};
  // Only the loss value is needed; gradients are discarded.
  return losses::loss_and_grad(embeddings, labels, bank, cfg).loss;
}

TrainResult run_stage(model::ToyModel net, losses::SubCenterBank bank,
                      const CorpusView& view, StageConfig stage,
                      std::uint64_t seed, std::uint64_t stage_tag,
                      double val_fraction, int val_max_samples) {
  require_data(!view.utt_indices.empty(), "no data", "empty training corpus");
  require_data(bank.n_classes == view.n_classes, "dim mismatch",
               "bank classes vs corpus classes");
  if (stage.margin.total_steps == 0) {
    // Default ramp: reach the end margin at 60% of the run, then stay flat.
    stage.margin.total_steps =
        std::max<std::int64_t>(1, (stage.total_steps * 6) / 10);
  }

  // Deterministic validation split: every k-th sample, capped.
  std::vector<std::size_t> train_slots, val_slots;
  const int stride = val_fraction > 0
                         ? std::max(2, static_cast<int>(1.0 / val_fraction))
                         : 0;
  for (std::size_t i = 0; i < view.utt_indices.size(); ++i) {
    if (stride > 0 && i % static_cast<std::size_t>(stride) == 0 &&
        static_cast<int>(val_slots.size()) < val_max_samples) {
      val_slots.push_back(i);
    } else {
      train_slots.push_back(i);
    }
  }
  if (train_slots.empty()) train_slots = val_slots;

  SgdState sgd(net, bank);
  PlateauScheduler sched;
  sched.lr = stage.lr0;
  sched.patience = stage.patience;
  sched.decay_factor = stage.decay_factor;
  sched.min_lr = stage.min_lr;

  TrainResult result;
  result.loss_trace.reserve(static_cast<std::size_t>(stage.total_steps));

  const int batch =
      std::min<int>(stage.batch_size, static_cast<int>(train_slots.size()));

  for (std::int64_t step = 0; step < stage.total_steps; ++step) {
    const double margin = margin_at(stage.margin, step);
    Rng rng(hash_combine(hash_combine(seed, stage_tag),
                         static_cast<std::uint64_t>(step)));

    Matrix embeddings(batch, net.cfg.embed_dim);
    std::vector<int> labels(static_cast<std::size_t>(batch));
    std::vector<model::ForwardCache> caches(static_cast<std::size_t>(batch));
    for (int b = 0; b < batch; ++b) {
      const auto slot = train_slots[rng.integer(train_slots.size())];
      const auto& utt = view.corpus->utts[view.utt_indices[slot]];
      const Index start = static_cast<Index>(
          rng.integer(static_cast<std::uint64_t>(view.corpus->frames_per_utt)));
      const Matrix crop = crop_for(*view.corpus, utt, stage.frames, start);
      model::forward(net, crop, caches[static_cast<std::size_t>(b)]);
      embeddings.row(b) =
          caches[static_cast<std::size_t>(b)].embedding.transpose();
      labels[static_cast<std::size_t>(b)] = view.labels[slot];
    }

    losses::MarginLossConfig loss_cfg{stage.loss_kind, stage.scale, margin};
    losses::LossGrad lg = losses::loss_and_grad(embeddings, labels, bank,
                                                loss_cfg);
    if (!std::isfinite(lg.loss)) throw_data("diverged", "loss is not finite");
    result.loss_trace.push_back(lg.loss);

    model::ModelGrad grad(net);
    for (int b = 0; b < batch; ++b) {
      model::backward(net, caches[static_cast<std::size_t>(b)],
                      lg.d_embeddings.row(b).transpose(), grad);
    }

    const double lr = sched.lr;
    sgd_update_tensor(net.w1, sgd.velocity.w1, grad.w1, lr, stage.momentum,
                      stage.weight_decay);
    sgd_update_tensor(net.b1, sgd.velocity.b1, grad.b1, lr, stage.momentum,
                      stage.weight_decay);
    sgd_update_tensor(net.w2, sgd.velocity.w2, grad.w2, lr, stage.momentum,
                      stage.weight_decay);
    sgd_update_tensor(net.b2, sgd.velocity.b2, grad.b2, lr, stage.momentum,
                      stage.weight_decay);
    if (net.cfg.pooling == model::PoolingKind::mqmha) {
      sgd_update_tensor(net.pool.query_weights, sgd.velocity.pool_qw,
                        grad.pool_qw, lr, stage.momentum, stage.weight_decay);
    }
    sgd_update_tensor(net.w3, sgd.velocity.w3, grad.w3, lr, stage.momentum,
                      stage.weight_decay);
    sgd_update_tensor(net.b3, sgd.velocity.b3, grad.b3, lr, stage.momentum,
                      stage.weight_decay);
    sgd_update_tensor(bank.weights, sgd.bank_velocity, lg.d_weights, lr,
                      stage.momentum, stage.weight_decay);

    if (!val_slots.empty() && stage.validate_every > 0 &&
        (step + 1) % stage.validate_every == 0) {
      sched = plateau_step(sched, validation_loss(net, bank, stage.scale, view,
                                                  val_slots, stage.frames));
    }
  }

  result.ckpt.net = std::move(net);
  result.ckpt.bank = std::move(bank);
  result.ckpt.loss_kind = stage.loss_kind;
  result.ckpt.scale = stage.scale;
  result.ckpt.step = stage.total_steps;
  result.ckpt.seed = seed;
  return result;
}

}  // namespace

TrainResult train_stage1(const dataio::SynthCorpus& corpus,
                         const TrainConfig& cfg) {
  require_data(cfg.net.feat_dim == corpus.dim, "dim mismatch",
               "model feat_dim vs corpus dim");
  const CorpusView view = full_view(corpus);
  model::ToyModel net = model::init_model(cfg.net, cfg.seed);
  losses::SubCenterBank bank = losses::random_bank(
      view.n_classes, cfg.subcenters, cfg.net.embed_dim, cfg.seed);
  StageConfig stage = cfg.stage1;
  stage.loss_kind = losses::MarginKind::am;
  return run_stage(std::move(net), std::move(bank), view, stage, cfg.seed,
                   0x5331ULL, cfg.val_fraction, cfg.val_max_samples);
}

TrainResult train_lmft(const Checkpoint& ckpt,
                       const dataio::SynthCorpus& corpus,
                       const TrainConfig& cfg, Consolidation consolidation) {
  losses::SubCenterBank bank = ckpt.bank;
  switch (consolidation) {
    case Consolidation::dominated:
      bank = losses::consolidate_dominated(bank);
      break;
    case Consolidation::sum:
      bank = losses::consolidate_sum(bank);
      break;
    case Consolidation::keep_k3:
      require_data(bank.n_subcenters > 1, "inconsistent K",
                   "keep_k3 on a K=1 checkpoint");
      break;
  }

  std::vector<int> kept_classes;
  const CorpusView view = clean_view(corpus, &kept_classes);
  require_data(!view.utt_indices.empty(), "no data",
               "no clean utterances for LM-FT");
  require_data(static_cast<Index>(ckpt.bank.n_classes) ==
                   static_cast<Index>(corpus.class_ids.size()),
               "dim mismatch", "checkpoint classes vs corpus classes");

  // Slice the bank rows down to the kept (non-speed) classes.
  Matrix kept_weights(static_cast<Index>(kept_classes.size()) *
                          bank.n_subcenters,
                      bank.dim());
  for (std::size_t i = 0; i < kept_classes.size(); ++i) {
    for (int k = 0; k < bank.n_subcenters; ++k) {
      kept_weights.row(static_cast<Index>(i) * bank.n_subcenters + k) =
          bank.weights.row(
              static_cast<Index>(kept_classes[i]) * bank.n_subcenters + k);
    }
  }
  bank = losses::make_bank(std::move(kept_weights),
                           static_cast<int>(kept_classes.size()),
                           bank.n_subcenters);

  StageConfig stage = cfg.lmft;
  stage.loss_kind = losses::MarginKind::aam;
  if (stage.margin.total_steps == 0) {
    stage.margin.total_steps = std::max<std::int64_t>(1, stage.total_steps);
  }
  return run_stage(ckpt.net, std::move(bank), view, stage, cfg.seed,
                   0x4c4d4654ULL, cfg.val_fraction, cfg.val_max_samples);
}

Checkpoint extend_classifier(const Checkpoint& ckpt, int n_new,
                             std::uint64_t seed) {
  require_data(n_new > 0, "nothing to add", "n_new must be positive");
  Checkpoint out = ckpt;
  const int k_sub = ckpt.bank.n_subcenters;
  const losses::SubCenterBank extra =
      losses::random_bank(n_new, k_sub, ckpt.bank.dim(),
                          hash_combine(seed, 0x657874ULL));  // "ext"
  Matrix w(ckpt.bank.weights.rows() + extra.weights.rows(), ckpt.bank.dim());
  w.topRows(ckpt.bank.weights.rows()) = ckpt.bank.weights;
  w.bottomRows(extra.weights.rows()) = extra.weights;
  out.bank = losses::make_bank(std::move(w), ckpt.bank.n_classes + n_new,
                               k_sub);
  return out;
}

}  // namespace svkit::trainer
