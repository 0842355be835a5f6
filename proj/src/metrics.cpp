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

#include "svkit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "svkit/error.hpp"

namespace svkit::metrics {

DetCurve det_curve(const dataio::ScoreSet& scores) {
  std::vector<double> targets, nontargets;
  for (const auto& t : scores.trials) {
    require_data(t.label == 0 || t.label == 1, "unlabeled trials",
                 t.enroll + " " + t.test);
    (t.label == 1 ? targets : nontargets).push_back(t.score);
  }
  require_data(!targets.empty() && !nontargets.empty(), "degenerate score set",
               "need at least one target and one nontarget trial");
  std::sort(targets.begin(), targets.end());
  std::sort(nontargets.begin(), nontargets.end());

  std::vector<double> thresholds;
  thresholds.reserve(targets.size() + nontargets.size());
  thresholds.insert(thresholds.end(), targets.begin(), targets.end());
  thresholds.insert(thresholds.end(), nontargets.begin(), nontargets.end());
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()),
                   thresholds.end());

  const double nt = static_cast<double>(targets.size());
  const double nn = static_cast<double>(nontargets.size());
  DetCurve curve;
  curve.points.reserve(thresholds.size() + 1);
  for (const double tau : thresholds) {
    // Decision rule: score >= tau accepts.
    const auto missed = std::lower_bound(targets.begin(), targets.end(), tau) -
                        targets.begin();
    const auto accepted_non =
        nontargets.end() -
        std::lower_bound(nontargets.begin(), nontargets.end(), tau);
    curve.points.push_back({tau, static_cast<double>(missed) / nt,
                            static_cast<double>(accepted_non) / nn});
  }
  // Reject-all endpoint.
  curve.points.push_back(
      {std::numeric_limits<double>::infinity(), 1.0, 0.0});
  return curve;
}

double eer(const DetCurve& curve) {
  require_data(!curve.points.empty(), "degenerate score set", "empty curve");
  OperatingPoint prev = curve.points.front();
  for (const auto& pt : curve.points) {
    if (pt.p_miss >= pt.p_fa) {
      if (pt.p_miss == pt.p_fa) return pt.p_miss;
      // Crossing lies between prev and pt; interpolate linearly.
      const double dm = pt.p_miss - prev.p_miss;
      const double df = pt.p_fa - prev.p_fa;
      const double t = (prev.p_fa - prev.p_miss) / (dm - df);
      return prev.p_miss + t * dm;
    }
    prev = pt;
  }
  return curve.points.back().p_miss;
}

double min_dcf(const DetCurve& curve, double p_tar, double c_miss,
               double c_fa) {
  require_data(p_tar > 0.0 && p_tar < 1.0, "invalid config",
               "p_tar must be in (0, 1)");
  require_data(c_miss > 0.0 && c_fa > 0.0, "invalid config",
               "costs must be positive");
  require_data(!curve.points.empty(), "degenerate score set", "empty curve");
  const double denom = std::min(c_miss * p_tar, c_fa * (1.0 - p_tar));
  double best = std::numeric_limits<double>::infinity();
  for (const auto& pt : curve.points) {
    const double cost =
        (c_miss * p_tar * pt.p_miss + c_fa * (1.0 - p_tar) * pt.p_fa) / denom;
    best = std::min(best, cost);
  }
  return best;
}

RetrievalRun make_run(const dataio::TrialList& manifest,
                      const dataio::ScoreSet& scores) {
  require_data(manifest.trials.size() == scores.trials.size(),
               "unaligned score sets", "manifest vs score counts");
  RetrievalRun run;
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < manifest.trials.size(); ++i) {
    const auto& trial = manifest.trials[i];
    const auto& scored = scores.trials[i];
    require_data(trial.enroll == scored.enroll && trial.test == scored.test,
                 "unaligned score sets",
                 "trial keys differ at line " + std::to_string(i + 1));
    require_data(trial.label == 0 || trial.label == 1, "unlabeled trials",
                 trial.enroll + " " + trial.test);
    auto it = index.find(trial.enroll);
    if (it == index.end()) {
      it = index.emplace(trial.enroll, run.targets.size()).first;
      run.targets.push_back({trial.enroll, {}});
    }
    run.targets[it->second].ranked.push_back(
        {trial.test, scored.score, trial.label == 1});
  }
  for (auto& target : run.targets) {
    std::sort(target.ranked.begin(), target.ranked.end(),
              [](const RankedCandidate& a, const RankedCandidate& b) {
                if (a.score != b.score) return a.score > b.score;
                return a.id < b.id;  // deterministic tie order
              });
  }
  return run;
}

double average_precision(const TargetRanking& ranking) {
  int relevant_seen = 0;
  double ap = 0.0;
  for (std::size_t rank = 0; rank < ranking.ranked.size(); ++rank) {
    if (ranking.ranked[rank].relevant) {
      ++relevant_seen;
      ap += static_cast<double>(relevant_seen) /
            static_cast<double>(rank + 1);
    }
  }
  require_data(relevant_seen > 0, "undefined AP",
               "target " + ranking.target_id + " has no relevant items");
  return ap / relevant_seen;
}

double mean_average_precision(const RetrievalRun& run) {
  require_data(!run.targets.empty(), "no data", "empty retrieval run");
  double sum = 0.0;
  for (const auto& target : run.targets) sum += average_precision(target);
  return sum / static_cast<double>(run.targets.size());
}

}  // namespace svkit::metrics
