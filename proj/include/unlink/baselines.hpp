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

#ifndef UNLINK_BASELINES_HPP
#define UNLINK_BASELINES_HPP

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "unlink/score_model.hpp"

namespace unlinkeval {

/// Kullback-Leibler divergence; nullopt when some bin has Q = 0 but P > 0,
/// where the divergence is not defined.
using KlResult = std::optional<double>;

/// D_KL(P || Q) = sum_s P(s) ln(P(s)/Q(s)) over bins with P(s) > 0.
/// Both inputs must have equal length and sum to 1 within 1e-9.
KlResult kl_divergence(std::span<const double> p, std::span<const double> q);

/// "undefined" or the value with `precision` decimals.
std::string format_kl(const KlResult& kl, int precision = 5);

/// Whether a higher score means "more likely the same instance".
enum class Orientation { Similarity, Dissimilarity };

/// What the two rate columns of a DetCurve mean.
///  - Accuracy: FMR/FNMR of single-key comparisons.
///  - CrossKey: CMR/FCMR, the same rates over comparisons across keys.
///  - Renewable: `fmr` holds the renewable template matching rate (RTMR)
///    and `fnmr` the single-key FNMR.
enum class CurveMode { Accuracy, CrossKey, Renewable };

const char* to_string(Orientation o);
const char* to_string(CurveMode m);

/// Empirical error-rate curve over every distinct score value plus one
/// threshold past the extreme, so both (FMR=1, FNMR=0) and (FMR=0, FNMR=1)
/// corners are present.
///
/// A comparison is accepted when s >= t (Similarity) or s <= t
/// (Dissimilarity). For Similarity fmr is non-increasing and fnmr
/// non-decreasing in the threshold; Dissimilarity reverses both.
struct DetCurve {
  std::vector<double> thresholds;
  std::vector<double> fmr;
  std::vector<double> fnmr;
  double eer = 0.0;
  double eer_threshold = 0.0;
  Orientation orientation = Orientation::Similarity;
  CurveMode mode = CurveMode::Accuracy;
};

/// Empirical DET with EER by linear interpolation between the two operating
/// points that bracket FMR = FNMR. An exact crossing is preferred; ties go
/// to the lowest threshold.
DetCurve det_curve(std::span<const double> mated,
                   std::span<const double> non_mated, Orientation orientation,
                   CurveMode mode = CurveMode::Accuracy);

/// Single-key accuracy curve and cross-key (CMR/FCMR) curve from the same
/// score files, for the EER-increase comparison.
std::pair<DetCurve, DetCurve> cross_key_det(const ScoreSet& single_key,
                                            const ScoreSet& cross_key,
                                            Orientation orientation);

/// FNMR of single-key mated comparisons against the rate at which cross-key
/// comparisons of different instances are accepted (RTMR). `eer` of the
/// result is the equal-rate point of those two curves.
DetCurve rtmr_curve(std::span<const double> same_key_mated,
                    std::span<const double> cross_key_non_mated,
                    Orientation orientation);

/// Keeps at most `max_points` operating points, evenly spaced by index and
/// always including both ends; EER fields are preserved.
DetCurve thin_curve(const DetCurve& curve, std::size_t max_points);

}  // namespace unlinkeval

#endif  // UNLINK_BASELINES_HPP
