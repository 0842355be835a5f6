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

#include <Eigen/Dense>
#include <cstdint>

namespace svkit {

// All numerics run in double; f32 appears only at serialization boundaries.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using VectorF = Eigen::VectorXf;
using Index = Eigen::Index;

}  // namespace svkit
