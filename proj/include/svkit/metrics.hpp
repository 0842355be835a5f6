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

#include <string>
#include <vector>

#include "svkit/dataio.hpp"

namespace svkit::metrics {

struct OperatingPoint {
  double threshold = 0.0;
  double p_miss = 0.0;
  double p_fa = 0.0;
};

// Operating points at every distinct score (decision rule: score >=
// threshold accepts), thresholds ascending, plus the reject-all endpoint.
// P_miss is nondecreasing and P_fa nonincreasing along the curve.
struct DetCurve {
  std::vector<OperatingPoint> points;
};

DetCurve det_curve(const dataio::ScoreSet& scores);

// Error rate where P_miss crosses P_fa, linearly interpolated between the
// two adjacent operating points when the crossing falls between them.
double eer(const DetCurve& curve);

// min over operating points of
//   (c_miss*p_tar*P_miss + c_fa*(1-p_tar)*P_fa) / min(c_miss*p_tar,
//   c_fa*(1-p_tar)).
double min_dcf(const DetCurve& curve, double p_tar = 0.01,
               double c_miss = 1.0, double c_fa = 1.0);

struct RankedCandidate {
  std::string id;
  double score = 0.0;
  bool relevant = false;
};

struct TargetRanking {
  std::string target_id;                  // enrollment id
  std::vector<RankedCandidate> ranked;    // descending score, ties by id
};

struct RetrievalRun {
  std::vector<TargetRanking> targets;
};

// Joins a labeled manifest with its scores and ranks per target.
RetrievalRun make_run(const dataio::TrialList& manifest,
                      const dataio::ScoreSet& scores);

// Mean over relevant items of precision at that item's rank.
double average_precision(const TargetRanking& ranking);
double mean_average_precision(const RetrievalRun& run);

}  // namespace svkit::metrics
