// vaereg/metrics.hpp

// Copyright 2026  The vaereg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vaereg/backend.hpp"
#include "vaereg/data.hpp"
#include "vaereg/error.hpp"
#include "vaereg/linalg.hpp"

namespace vaereg {

struct DetPoint {
  double threshold;
  double far;
  double frr;
};

struct EvalResult {
  double eer = 0.0;
  double threshold_at_eer = 0.0;
  std::vector<DetPoint> det_points;  // thresholds ascending
};

/**
   Sweeps every distinct score as a threshold (plus one point above the
   highest score). At threshold t, FAR is the fraction of nontarget scores
   >= t and FRR the fraction of target scores < t. The EER is read off where
   FAR - FRR changes sign, interpolating linearly between the two operating
   points that bracket the crossing.
*/
inline EvalResult compute_eer(const ScoreSet &scores, const TrialList &trials) {
  if (scores.size() != trials.size())
    fail(Errc::kShapeMismatch, "score count does not match trial count");
  std::vector<double> tgt, non;
  for (std::size_t i = 0; i < trials.size(); ++i)
    (trials[i].target ? tgt : non).push_back(scores.scores[i]);
  if (tgt.empty() || non.empty())
    fail(Errc::kDegenerateTrials, "need at least one target and one nontarget trial");
  std::sort(tgt.begin(), tgt.end());
  std::sort(non.begin(), non.end());

  std::vector<double> thresholds(tgt);
  thresholds.insert(thresholds.end(), non.begin(), non.end());
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  const double nt = static_cast<double>(tgt.size());
  const double nn = static_cast<double>(non.size());
  EvalResult res;
  res.det_points.reserve(thresholds.size() + 1);
  std::size_t below_t = 0;  // targets < threshold
  std::size_t below_n = 0;  // nontargets < threshold
  for (double th : thresholds) {
    while (below_t < tgt.size() && tgt[below_t] < th) ++below_t;
    while (below_n < non.size() && non[below_n] < th) ++below_n;
    res.det_points.push_back({th, (nn - static_cast<double>(below_n)) / nn,
                              static_cast<double>(below_t) / nt});
  }
  res.det_points.push_back({std::numeric_limits<double>::infinity(), 0.0, 1.0});

  const auto &p = res.det_points;
  std::size_t k = 0;
  while (p[k].far - p[k].frr > 0.0) ++k;  // terminates: last point has d = -1
  if (k == 0) {
    res.eer = p[0].far;
    res.threshold_at_eer = p[0].threshold;
    return res;
  }
  const double d0 = p[k - 1].far - p[k - 1].frr;
  const double d1 = p[k].far - p[k].frr;
  const double t = d0 / (d0 - d1);
  res.eer = p[k - 1].far + t * (p[k].far - p[k - 1].far);
  res.threshold_at_eer =
      std::isfinite(p[k].threshold)
          ? p[k - 1].threshold + t * (p[k].threshold - p[k - 1].threshold)
          : p[k - 1].threshold;
  return res;
}

// ---------------------------------------------------------------------------
// Gaussianity diagnostics. Population (1/N) moments.

namespace detail {

struct CentralMoments {
  double m2, m3, m4;
};

inline CentralMoments central_moments(std::span<const double> x) {
  if (x.size() < 3) fail(Errc::kTooFewSamples, "need at least 3 samples");
  const double n = static_cast<double>(x.size());
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0, sq = 0.0;
  for (double v : x) {
    const double d = v - mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
    sq += v * v;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  // Round-off in the mean leaves a tiny residual variance for constant input.
  if (!(m2 > 1e-24 * (sq / n)) || m2 == 0.0)
    fail(Errc::kZeroVariance, "samples have zero variance");
  return {m2, m3, m4};
}

}  // namespace detail

inline double skewness(std::span<const double> x) {
  const auto m = detail::central_moments(x);
  return m.m3 / std::pow(m.m2, 1.5);
}

/// Excess kurtosis.
inline double kurtosis(std::span<const double> x) {
  const auto m = detail::central_moments(x);
  return m.m4 / (m.m2 * m.m2) - 3.0;
}

enum class MomentLevel { kUtterance, kSpeaker };

/// Per-dimension skewness and excess kurtosis. Dimensions with zero variance
/// are NaN, listed in `missing`, and left out of the pooled values.
struct MomentReport {
  MomentLevel level = MomentLevel::kUtterance;
  Vector skew;
  Vector kurt;
  std::vector<std::size_t> missing;
  double pooled_skew = 0.0;      // mean over dimensions
  double pooled_kurt = 0.0;
  double mean_abs_skew = 0.0;    // mean of |value| over dimensions
  double mean_abs_kurt = 0.0;
};

inline MomentReport moments_of_rows(const Matrix &x, MomentLevel level) {
  MomentReport rep;
  rep.level = level;
  rep.skew.assign(x.cols(), std::numeric_limits<double>::quiet_NaN());
  rep.kurt.assign(x.cols(), std::numeric_limits<double>::quiet_NaN());
  std::size_t used = 0;
  for (std::size_t j = 0; j < x.cols(); ++j) {
    const Vector col = x.col_vector(j);
    try {
      const auto m = detail::central_moments(col);
      rep.skew[j] = m.m3 / std::pow(m.m2, 1.5);
      rep.kurt[j] = m.m4 / (m.m2 * m.m2) - 3.0;
    } catch (const Error &e) {
      if (e.code() != Errc::kZeroVariance) throw;
      rep.missing.push_back(j);
      continue;
    }
    rep.pooled_skew += rep.skew[j];
    rep.pooled_kurt += rep.kurt[j];
    rep.mean_abs_skew += std::abs(rep.skew[j]);
    rep.mean_abs_kurt += std::abs(rep.kurt[j]);
    ++used;
  }
  if (used > 0) {
    const double inv = 1.0 / static_cast<double>(used);
    rep.pooled_skew *= inv;
    rep.pooled_kurt *= inv;
    rep.mean_abs_skew *= inv;
    rep.mean_abs_kurt *= inv;
  } else {
    rep.pooled_skew = rep.pooled_kurt = std::numeric_limits<double>::quiet_NaN();
    rep.mean_abs_skew = rep.mean_abs_kurt = std::numeric_limits<double>::quiet_NaN();
  }
  return rep;
}

/// Utterance level uses every vector; speaker level first replaces each
/// speaker by the mean of its vectors.
inline MomentReport moments_report(const EmbeddingSet &data, MomentLevel level) {
  if (level == MomentLevel::kUtterance) {
    if (data.size() < 3)
      fail(Errc::kTooFewSamples, "utterance-level moments need >= 3 vectors");
    return moments_of_rows(data.matrix(), level);
  }
  const auto groups = data.speaker_groups();
  if (groups.size() < 3)
    fail(Errc::kTooFewSamples, "speaker-level moments need >= 3 speakers");
  Matrix means(groups.size(), data.dim());
  for (std::size_t s = 0; s < groups.size(); ++s) {
    auto row = means.row(s);
    for (auto i : groups[s])
      for (std::size_t j = 0; j < data.dim(); ++j) row[j] += data[i].vec[j];
    for (auto &v : row) v /= static_cast<double>(groups[s].size());
  }
  return moments_of_rows(means, level);
}

/// Mean squared distance of each vector to its speaker's mean vector.
inline double within_speaker_scatter(const EmbeddingSet &data) {
  double total = 0.0;
  for (const auto &group : data.speaker_groups()) {
    Vector mu(data.dim(), 0.0);
    for (auto i : group)
      for (std::size_t j = 0; j < data.dim(); ++j) mu[j] += data[i].vec[j];
    for (auto &v : mu) v /= static_cast<double>(group.size());
    for (auto i : group)
      for (std::size_t j = 0; j < data.dim(); ++j) {
        const double d = data[i].vec[j] - mu[j];
        total += d * d;
      }
  }
  return total / static_cast<double>(data.size());
}

// ---------------------------------------------------------------------------
// Reports.

inline std::string format_eer_line(double eer) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "EER %.2f", 100.0 * eer);
  return buf;
}

inline void write_det_csv(std::ostream &os, const EvalResult &r) {
  os << "far,frr\n";
  for (const auto &p : r.det_points)
    os << format_double(p.far) << ',' << format_double(p.frr) << '\n';
}

inline const char *moment_level_name(MomentLevel l) {
  return l == MomentLevel::kUtterance ? "utterance" : "speaker";
}

inline void write_moment_report(std::ostream &os, const MomentReport &r) {
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "level %s\npooled_skew %.6f\npooled_kurt %.6f\n"
                "mean_abs_skew %.6f\nmean_abs_kurt %.6f\n",
                moment_level_name(r.level), r.pooled_skew, r.pooled_kurt,
                r.mean_abs_skew, r.mean_abs_kurt);
  os << buf << "dim,skew,kurt\n";
  for (std::size_t j = 0; j < r.skew.size(); ++j)
    os << j << ',' << format_double(r.skew[j]) << ',' << format_double(r.kurt[j])
       << '\n';
}

}  // namespace vaereg
