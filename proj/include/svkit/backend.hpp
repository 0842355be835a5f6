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
#include <map>
#include <string>
#include <vector>

#include "svkit/dataio.hpp"
#include "svkit/types.hpp"

namespace svkit::backend {

struct Embedding {
  std::string id;
  Vector vec;
  std::string genre;                        // single-utterance genre
  std::vector<std::string> segment_genres;  // concatenated enrollments
};

double cosine(const Vector& a, const Vector& b);
double cosine(const Embedding& a, const Embedding& b);

// Single-genre embeddings return their genre; concatenated ones return the
// modal genre of their segments, ties broken by lexicographically smallest
// name.
std::string genre_of(const Embedding& e);

using GenreMeans = std::map<std::string, Vector>;

GenreMeans compute_genre_means(const std::vector<Embedding>& embeddings);

// cos(e - mean[genre(e)], t - mean[genre(t)]).
double sub_mean_score(const Embedding& e, const Embedding& t,
                      const GenreMeans& means);

struct Cohort {
  Matrix centers;  // one row per cohort speaker
  int top_k = 300;
};

// One seeded-random utterance embedding per speaker becomes a center.
Cohort build_cohort(const std::vector<std::vector<Embedding>>& speakers,
                    int top_k, std::uint64_t seed);

// Adaptive symmetric score normalization: standardizes the raw score by the
// mean/population-std of the top-k cohort cosines on each side.
double asnorm(double raw, const Embedding& e, const Embedding& t,
              const Cohort& cohort);

// Per trial, weighted mean of the input scores.  All sets must carry
// identical trial keys in identical order.
dataio::ScoreSet fuse(const std::vector<dataio::ScoreSet>& score_sets,
                      const std::vector<double>& weights);

}  // namespace svkit::backend
