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
#include <string>

#include "svkit/losses.hpp"
#include "svkit/model.hpp"

namespace svkit::trainer {

// Full training state: network, classifier bank, loss settings, step count
// and the root seed (per-step streams are derived from seed + step, so a
// reloaded checkpoint resumes bit-exactly).
struct Checkpoint {
  model::ToyModel net;
  losses::SubCenterBank bank;
  losses::MarginKind loss_kind = losses::MarginKind::am;
  double scale = 32.0;
  std::int64_t step = 0;
  std::uint64_t seed = 0;
};

}  // namespace svkit::trainer

namespace svkit::dataio {

// Binary checkpoint, magic "SVCK", f64 payloads; round-trips bit-exactly.
void save_checkpoint(const std::string& path, const trainer::Checkpoint& ckpt);
trainer::Checkpoint load_checkpoint(const std::string& path);

}  // namespace svkit::dataio
