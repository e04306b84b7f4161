/*
 * Copyright 2026 The unlink-eval Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "unlink/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace unlinkeval {

const char* to_string(Orientation o) {
  return o == Orientation::Similarity ? "similarity" : "dissimilarity";
}

const char* to_string(CurveMode m) {
  switch (m) {
    case CurveMode::Accuracy: return "accuracy";
    case CurveMode::CrossKey: return "cross_key";
    case CurveMode::Renewable: return "renewable";
  }
  return "unknown";
}

KlResult kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) {
    throw Error(ErrorCode::LengthMismatch, "KL inputs differ in length");
  }
  for (auto dist : {p, q}) {
    double total = 0.0;
    for (double v : dist) {
      if (!(v >= 0.0) || !std::isfinite(v)) {
        throw Error(ErrorCode::NotNormalized, "KL input has a negative entry");
      }
      total += v;
    }
    if (std::abs(total - 1.0) > 1e-9) {
      throw Error(ErrorCode::NotNormalized,
                  "KL input sums to " + std::to_string(total));
    }
  }
  bool identical = true;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0 && q[i] == 0.0) return std::nullopt;
    if (std::abs(p[i] - q[i]) > 1e-12) identical = false;
  }
  if (identical) return 0.0;
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) kl += p[i] * std::log(p[i] / q[i]);
  }
  return std::max(kl, 0.0);
}

std::string format_kl(const KlResult& kl, int precision) {
  if (!kl) return "undefined";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, *kl);
  return buf;
}

namespace {

void require_scores(std::span<const double> xs, Label side) {
  if (xs.size() < kMinScoresPerSide) throw TooFewScoresError(side, xs.size());
}

std::vector<double> sorted_copy(std::span<const double> xs) {
  std::vector<double> out(xs.begin(), xs.end());
  std::sort(out.begin(), out.end());
  return out;
}

// Count of sorted values v with v < t and with v <= t.
std::size_t count_below(const std::vector<double>& s, double t) {
  return static_cast<std::size_t>(std::lower_bound(s.begin(), s.end(), t) - s.begin());
}
std::size_t count_at_or_below(const std::vector<double>& s, double t) {
  return static_cast<std::size_t>(std::upper_bound(s.begin(), s.end(), t) - s.begin());
}

}  // namespace

DetCurve det_curve(std::span<const double> mated,
                   std::span<const double> non_mated, Orientation orientation,
                   CurveMode mode) {
  require_scores(mated, Label::Mated);
  require_scores(non_mated, Label::NonMated);
  const auto m = sorted_copy(mated);
  const auto nm = sorted_copy(non_mated);
  const double n_m = static_cast<double>(m.size());
  const double n_nm = static_cast<double>(nm.size());

  std::vector<double> thresholds(m);
  thresholds.insert(thresholds.end(), nm.begin(), nm.end());
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()),
                   thresholds.end());
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (orientation == Orientation::Similarity) {
    thresholds.push_back(std::nextafter(thresholds.back(), inf));
  } else {
    thresholds.insert(thresholds.begin(), std::nextafter(thresholds.front(), -inf));
  }

  DetCurve curve;
  curve.orientation = orientation;
  curve.mode = mode;
  curve.thresholds = thresholds;
  curve.fmr.reserve(thresholds.size());
  curve.fnmr.reserve(thresholds.size());
  for (double t : thresholds) {
    if (orientation == Orientation::Similarity) {
      curve.fmr.push_back(static_cast<double>(nm.size() - count_below(nm, t)) / n_nm);
      curve.fnmr.push_back(static_cast<double>(count_below(m, t)) / n_m);
    } else {
      curve.fmr.push_back(static_cast<double>(count_at_or_below(nm, t)) / n_nm);
      curve.fnmr.push_back(static_cast<double>(m.size() - count_at_or_below(m, t)) / n_m);
    }
  }

  // The first and last operating points sit on opposite sides of the
  // FMR = FNMR diagonal, so a crossing always exists.
  const auto diff = [&](std::size_t i) { return curve.fmr[i] - curve.fnmr[i]; };
  const bool start_positive = diff(0) > 0.0;
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    const double d = diff(i);
    if (d == 0.0) {
      curve.eer = curve.fmr[i];
      curve.eer_threshold = thresholds[i];
      return curve;
    }
    if ((d > 0.0) != start_positive) {
      const double d0 = diff(i - 1);
      const double alpha = d0 / (d0 - d);
      curve.eer = curve.fmr[i - 1] + alpha * (curve.fmr[i] - curve.fmr[i - 1]);
      curve.eer_threshold =
          thresholds[i - 1] + alpha * (thresholds[i] - thresholds[i - 1]);
      return curve;
    }
  }
  throw Error(ErrorCode::InvariantViolation, "DET curve has no FMR=FNMR crossing");
}

std::pair<DetCurve, DetCurve> cross_key_det(const ScoreSet& single_key,
                                            const ScoreSet& cross_key,
                                            Orientation orientation) {
  return {det_curve(single_key.mated(), single_key.non_mated(), orientation,
                    CurveMode::Accuracy),
          det_curve(cross_key.mated(), cross_key.non_mated(), orientation,
                    CurveMode::CrossKey)};
}

DetCurve rtmr_curve(std::span<const double> same_key_mated,
                    std::span<const double> cross_key_non_mated,
                    Orientation orientation) {
  return det_curve(same_key_mated, cross_key_non_mated, orientation,
                   CurveMode::Renewable);
}

DetCurve thin_curve(const DetCurve& curve, std::size_t max_points) {
  const std::size_t n = curve.thresholds.size();
  if (n <= max_points || max_points < 2) return curve;
  DetCurve out = curve;
  out.thresholds.clear();
  out.fmr.clear();
  out.fnmr.clear();
  for (std::size_t k = 0; k < max_points; ++k) {
    const std::size_t i = k * (n - 1) / (max_points - 1);
    out.thresholds.push_back(curve.thresholds[i]);
    out.fmr.push_back(curve.fmr[i]);
    out.fnmr.push_back(curve.fnmr[i]);
  }
  return out;
}

}  // namespace unlinkeval
