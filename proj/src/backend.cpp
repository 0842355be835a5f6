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

#include "svkit/backend.hpp"

#include <algorithm>
#include <cmath>

#include "svkit/error.hpp"
#include "svkit/rng.hpp"

namespace svkit::backend {

namespace {

constexpr double kNormGuard = 1e-12;

// Mean and population standard deviation of the top_k largest values.
void top_k_stats(std::vector<double> scores, int top_k, double* mean,
                 double* std_dev) {
  std::nth_element(scores.begin(), scores.begin() + (top_k - 1), scores.end(),
                   std::greater<double>());
  double sum = 0.0;
  for (int i = 0; i < top_k; ++i) sum += scores[static_cast<std::size_t>(i)];
  const double mu = sum / top_k;
  double ss = 0.0;
  for (int i = 0; i < top_k; ++i) {
    const double d = scores[static_cast<std::size_t>(i)] - mu;
    ss += d * d;
  }
  *mean = mu;
  *std_dev = std::sqrt(ss / top_k);
}

std::vector<double> cohort_cosines(const Vector& x, const Cohort& cohort) {
  const double xn = x.norm();
  require_data(xn > kNormGuard, "degenerate embedding", "zero-norm embedding");
  std::vector<double> out(static_cast<std::size_t>(cohort.centers.rows()));
  for (Index i = 0; i < cohort.centers.rows(); ++i) {
    const double cn = cohort.centers.row(i).norm();
    require_data(cn > kNormGuard, "degenerate cohort", "zero-norm center");
    out[static_cast<std::size_t>(i)] =
        cohort.centers.row(i).dot(x.transpose()) / (cn * xn);
  }
  return out;
}

}  // namespace

double cosine(const Vector& a, const Vector& b) {
  const double na = a.norm();
  const double nb = b.norm();
  require_data(na > kNormGuard && nb > kNormGuard, "degenerate embedding",
               "zero-norm embedding");
  return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

double cosine(const Embedding& a, const Embedding& b) {
  return cosine(a.vec, b.vec);
}

std::string genre_of(const Embedding& e) {
  if (!e.segment_genres.empty()) {
    // Modal genre; lexicographically smallest name wins ties.
    std::map<std::string, int> counts;
    for (const auto& g : e.segment_genres) ++counts[g];
    std::string best;
    int best_count = 0;
    for (const auto& [genre, count] : counts) {
      if (count > best_count) {
        best = genre;
        best_count = count;
      }
    }
    return best;
  }
  require_data(!e.genre.empty(), "genre unavailable",
               "embedding " + e.id + " has no genre info");
  return e.genre;
}

GenreMeans compute_genre_means(const std::vector<Embedding>& embeddings) {
  require_data(!embeddings.empty(), "no data", "no embeddings");
  GenreMeans means;
  std::map<std::string, int> counts;
  for (const auto& e : embeddings) {
    const std::string genre = genre_of(e);
    auto [it, inserted] = means.try_emplace(genre, Vector::Zero(e.vec.size()));
    require_data(it->second.size() == e.vec.size(), "dim mismatch",
                 "embedding dims differ within genre " + genre);
    it->second += e.vec;
    ++counts[genre];
  }
  for (auto& [genre, sum] : means) sum /= counts[genre];
  return means;
}

double sub_mean_score(const Embedding& e, const Embedding& t,
                      const GenreMeans& means) {
  const std::string ge = genre_of(e);
  const std::string gt = genre_of(t);
  const auto ie = means.find(ge);
  const auto it = means.find(gt);
  require_data(ie != means.end(), "unknown genre", ge);
  require_data(it != means.end(), "unknown genre", gt);
  return cosine(e.vec - ie->second, t.vec - it->second);
}

Cohort build_cohort(const std::vector<std::vector<Embedding>>& speakers,
                    int top_k, std::uint64_t seed) {
  require_data(top_k >= 1, "invalid config", "top_k must be >= 1");
  require_data(static_cast<int>(speakers.size()) >= top_k, "cohort too small",
               "need at least top_k speakers");
  Rng rng(hash_combine(seed, 0x636f68ULL));  // "coh"
  Cohort cohort;
  cohort.top_k = top_k;
  Index dim = -1;
  for (std::size_t s = 0; s < speakers.size(); ++s) {
    const auto& utts = speakers[s];
    require_data(!utts.empty(), "no data", "speaker with no utterances");
    const auto& pick = utts[rng.integer(utts.size())];
    if (dim < 0) {
      dim = pick.vec.size();
      cohort.centers.resize(static_cast<Index>(speakers.size()), dim);
    }
    require_data(pick.vec.size() == dim, "dim mismatch",
                 "cohort embedding dims differ");
    cohort.centers.row(static_cast<Index>(s)) = pick.vec.transpose();
  }
  return cohort;
}

double asnorm(double raw, const Embedding& e, const Embedding& t,
              const Cohort& cohort) {
  require_data(cohort.top_k >= 1 &&
                   cohort.centers.rows() >= cohort.top_k,
               "cohort too small", "cohort smaller than top_k");
  double mu_e, sd_e, mu_t, sd_t;
  top_k_stats(cohort_cosines(e.vec, cohort), cohort.top_k, &mu_e, &sd_e);
  top_k_stats(cohort_cosines(t.vec, cohort), cohort.top_k, &mu_t, &sd_t);
  require_data(sd_e > 1e-12 && sd_t > 1e-12, "degenerate cohort",
               "zero variance in top-k cohort scores");
  return 0.5 * ((raw - mu_e) / sd_e + (raw - mu_t) / sd_t);
}

dataio::ScoreSet fuse(const std::vector<dataio::ScoreSet>& score_sets,
                      const std::vector<double>& weights) {
  require_data(!score_sets.empty(), "no data", "no score sets");
  require_data(score_sets.size() == weights.size(), "unaligned score sets",
               "one weight per score set required");
  double weight_sum = 0.0;
  for (const double w : weights) {
    require_data(w >= 0.0, "invalid config", "weights must be nonnegative");
    weight_sum += w;
  }
  require_data(weight_sum > 0.0, "invalid config", "weights sum to zero");

  const auto& first = score_sets.front();
  for (const auto& set : score_sets) {
    require_data(set.trials.size() == first.trials.size(),
                 "unaligned score sets", "trial counts differ");
    for (std::size_t i = 0; i < set.trials.size(); ++i) {
      require_data(set.trials[i].enroll == first.trials[i].enroll &&
                       set.trials[i].test == first.trials[i].test,
                   "unaligned score sets",
                   "trial keys differ at line " + std::to_string(i + 1));
    }
  }

  dataio::ScoreSet fused = first;
  for (std::size_t i = 0; i < fused.trials.size(); ++i) {
    double acc = 0.0;
    for (std::size_t s = 0; s < score_sets.size(); ++s) {
      acc += weights[s] * score_sets[s].trials[i].score;
    }
    fused.trials[i].score = acc / weight_sum;
  }
  return fused;
}

}  // namespace svkit::backend
