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

#include "svkit/checkpoint.hpp"
#include "svkit/dataio.hpp"
#include "svkit/losses.hpp"
#include "svkit/model.hpp"

namespace svkit::trainer {

enum class ScheduleShape { linear, exponential };

struct MarginSchedule {
  double start_m = 0.0;
  double end_m = 0.2;
  std::int64_t total_steps = 1;
  ScheduleShape shape = ScheduleShape::linear;
};

// Margin at a step: linear start + (end-start)*t, exponential
// start*(end/start)^t, t = min(step/total, 1).
double margin_at(const MarginSchedule& schedule, std::int64_t step);

// ReduceLROnPlateau-style scheduler.  "Improvement" means the validation
// metric drops by at least 1e-4 absolute; after `patience` consecutive
// non-improvements the lr decays by decay_factor and clamps at min_lr.
struct PlateauScheduler {
  double lr = 0.08;
  int patience = 2;
  double decay_factor = 0.1;
  double min_lr = 1e-6;
  double best_metric = std::numeric_limits<double>::infinity();
  int bad_count = 0;
};

inline constexpr double kPlateauImprovementTol = 1e-4;

PlateauScheduler plateau_step(PlateauScheduler s, double val_metric);

// Per-stage settings.  Defaults mirror the full-scale recipe (8 GPUs, 1024
// batch); desk-scale runs override batch/frames/steps.
struct StageConfig {
  double lr0 = 0.08;
  double momentum = 0.9;
  double weight_decay = 1e-3;
  int batch_size = 1024;
  int frames = 200;
  MarginSchedule margin{0.0, 0.2, 0, ScheduleShape::linear};
  losses::MarginKind loss_kind = losses::MarginKind::am;
  double scale = 32.0;
  int patience = 2;
  double decay_factor = 0.1;
  double min_lr = 1e-6;
  int validate_every = 2000;
  std::int64_t total_steps = 1000;
};

StageConfig stage1_defaults();
StageConfig lmft_defaults();

struct TrainConfig {
  model::ToyModelConfig net;  // feat_dim must match the corpus dim
  StageConfig stage1 = stage1_defaults();
  StageConfig lmft = lmft_defaults();
  int subcenters = 3;  // K in stage 1
  std::uint64_t seed = 1;
  double val_fraction = 0.1;
  int val_max_samples = 256;
};

struct TrainResult {
  Checkpoint ckpt;
  std::vector<double> loss_trace;
};

enum class Consolidation { dominated, sum, keep_k3 };

// Stage 1: Sub-Center AM-Softmax (K = subcenters), margin ramp 0 -> 0.2,
// SGD with momentum and weight decay, plateau LR decay on validation loss.
TrainResult train_stage1(const dataio::SynthCorpus& corpus,
                         const TrainConfig& cfg);

// Large-margin fine-tuning: applies the chosen sub-center consolidation,
// drops speed-augmented classes from corpus and bank, switches to
// AAM-Softmax with an exponential 0.2 -> 0.8 margin ramp and the smaller
// fine-tuning learning rate.
TrainResult train_lmft(const Checkpoint& ckpt, const dataio::SynthCorpus& corpus,
                       const TrainConfig& cfg, Consolidation consolidation);

// Appends n_new randomly initialized classes (unit-norm sub-centers) to the
// classifier; existing weights are untouched.
Checkpoint extend_classifier(const Checkpoint& ckpt, int n_new,
                             std::uint64_t seed);

}  // namespace svkit::trainer
