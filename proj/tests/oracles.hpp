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
//
// Test-only oracles: brute-force reference computations kept independent of
// the library code paths they check.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "svkit/dataio.hpp"
#include "svkit/types.hpp"

namespace svkit::oracles {

// Central finite difference d f / d theta_i with step h for every entry of a
// parameter vector accessed through get/set callbacks.
inline Vector finite_difference(const std::function<double()>& f,
                                const std::function<double(Index)>& get,
                                const std::function<void(Index, double)>& set,
                                Index n, double h = 1e-4) {
  Vector grad(n);
  for (Index i = 0; i < n; ++i) {
    const double orig = get(i);
    set(i, orig + h);
    const double plus = f();
    set(i, orig - h);
    const double minus = f();
    set(i, orig);
    grad[i] = (plus - minus) / (2.0 * h);
  }
  return grad;
}

// Max relative disagreement between analytic and numeric gradients.
inline double grad_disagreement(const Vector& analytic, const Vector& numeric) {
  double worst = 0.0;
  for (Index i = 0; i < analytic.size(); ++i) {
    const double denom =
        std::max({1.0, std::abs(analytic[i]), std::abs(numeric[i])});
    worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / denom);
  }
  return worst;
}

// Two-pass mean / population std per column.
inline void naive_stats(const Matrix& frames, Vector* mean, Vector* stddev) {
  const Index t = frames.rows();
  const Index c = frames.cols();
  mean->resize(c);
  stddev->resize(c);
  for (Index j = 0; j < c; ++j) {
    double sum = 0.0;
    for (Index i = 0; i < t; ++i) sum += frames(i, j);
    const double mu = sum / static_cast<double>(t);
    double ss = 0.0;
    for (Index i = 0; i < t; ++i) {
      ss += (frames(i, j) - mu) * (frames(i, j) - mu);
    }
    (*mean)[j] = mu;
    (*stddev)[j] = std::sqrt(std::max(ss / static_cast<double>(t), 1e-10));
  }
}

// Direct O(n^2) DFT power spectrum of one frame (windowed externally).
inline std::vector<double> direct_power_spectrum(const std::vector<double>& x,
                                                 int n_fft) {
  const int bins = n_fft / 2 + 1;
  std::vector<double> power(static_cast<std::size_t>(bins));
  for (int k = 0; k < bins; ++k) {
    std::complex<double> acc(0.0, 0.0);
    for (std::size_t n = 0; n < x.size(); ++n) {
      const double ang = -2.0 * 3.14159265358979323846 *
                         static_cast<double>(k) * static_cast<double>(n) /
                         n_fft;
      acc += x[n] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    power[static_cast<std::size_t>(k)] = std::norm(acc);
  }
  return power;
}

struct SweepPoint {
  double threshold;
  double p_miss;
  double p_fa;
};

// Exhaustive O(n^2) threshold sweep: direct counting at every distinct score
// plus the reject-all endpoint.
inline std::vector<SweepPoint> brute_force_sweep(
    const std::vector<double>& targets, const std::vector<double>& nontargets) {
  std::vector<double> thresholds = targets;
  thresholds.insert(thresholds.end(), nontargets.begin(), nontargets.end());
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()),
                   thresholds.end());
  std::vector<SweepPoint> points;
  for (const double tau : thresholds) {
    long missed = 0;
    for (const double s : targets) {
      if (s < tau) ++missed;
    }
    long accepted = 0;
    for (const double s : nontargets) {
      if (s >= tau) ++accepted;
    }
    points.push_back({tau,
                      static_cast<double>(missed) /
                          static_cast<double>(targets.size()),
                      static_cast<double>(accepted) /
                          static_cast<double>(nontargets.size())});
  }
  points.push_back({std::numeric_limits<double>::infinity(), 1.0, 0.0});
  return points;
}

inline double brute_force_eer(const std::vector<double>& targets,
                              const std::vector<double>& nontargets) {
  const auto points = brute_force_sweep(targets, nontargets);
  SweepPoint prev = points.front();
  for (const auto& pt : points) {
    if (pt.p_miss >= pt.p_fa) {
      if (pt.p_miss == pt.p_fa) return pt.p_miss;
      const double dm = pt.p_miss - prev.p_miss;
      const double df = pt.p_fa - prev.p_fa;
      const double t = (prev.p_fa - prev.p_miss) / (dm - df);
      return prev.p_miss + t * dm;
    }
    prev = pt;
  }
  return points.back().p_miss;
}

inline double brute_force_min_dcf(const std::vector<double>& targets,
                                  const std::vector<double>& nontargets,
                                  double p_tar = 0.01, double c_miss = 1.0,
                                  double c_fa = 1.0) {
  const double denom = std::min(c_miss * p_tar, c_fa * (1.0 - p_tar));
  double best = std::numeric_limits<double>::infinity();
  for (const auto& pt : brute_force_sweep(targets, nontargets)) {
    best = std::min(best, (c_miss * p_tar * pt.p_miss +
                           c_fa * (1.0 - p_tar) * pt.p_fa) /
                              denom);
  }
  return best;
}

// Direct AP: items given as (score, id, relevant), ranked here by descending
// score with ascending-id ties.
struct OracleItem {
  double score;
  std::string id;
  bool relevant;
};

inline double direct_average_precision(std::vector<OracleItem> items) {
  std::sort(items.begin(), items.end(),
            [](const OracleItem& a, const OracleItem& b) {
              if (a.score != b.score) return a.score > b.score;
              return a.id < b.id;
            });
  int seen = 0;
  double ap = 0.0;
  for (std::size_t rank = 0; rank < items.size(); ++rank) {
    if (items[rank].relevant) {
      ++seen;
      ap += static_cast<double>(seen) / static_cast<double>(rank + 1);
    }
  }
  return seen > 0 ? ap / seen : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace svkit::oracles
