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

#ifndef UNLINK_LINKABILITY_HPP
#define UNLINK_LINKABILITY_HPP

#include <Eigen/Core>
#include <cmath>
#include <concepts>
#include <limits>
#include <string>
#include <vector>

#include "unlink/density.hpp"
#include "unlink/error.hpp"
#include "unlink/score_model.hpp"

namespace unlinkeval {

/// Sentinel returned by likelihood_ratio() when both densities vanish. It is
/// a quiet NaN so that it propagates through Eigen expressions; test with
/// is_no_evidence().
template <typename Scalar = double>
constexpr Scalar no_evidence() {
  return std::numeric_limits<Scalar>::quiet_NaN();
}

template <std::floating_point Scalar>
bool is_no_evidence(Scalar lr) {
  return std::isnan(lr);
}

/// Point-wise likelihood ratio p(s|H_m) / p(s|H_nm).
///
/// Total over non-negative inputs: a mated density with no non-mated
/// counterpart yields +inf, and two zero densities yield no_evidence().
template <std::floating_point Scalar>
Scalar likelihood_ratio(Scalar p_mated, Scalar p_non_mated) {
  if (p_non_mated > Scalar(0)) return p_mated / p_non_mated;
  if (p_mated > Scalar(0)) return std::numeric_limits<Scalar>::infinity();
  return no_evidence<Scalar>();
}

/// Local linkability D(s) for a given LR(s) and prior ratio omega:
///
///   D = 0                        if LR*omega <= 1
///   D = 2*LR*omega/(1+LR*omega)-1 otherwise
///
/// The second branch is evaluated as 1 - 2/(1+LR*omega), which is the same
/// quantity but monotone under IEEE rounding and maps LR = +inf to exactly 1.
/// no_evidence() maps to 0.
template <std::floating_point Scalar>
Scalar local_linkability(Scalar lr, Scalar omega) {
  if (is_no_evidence(lr)) return Scalar(0);
  const Scalar odds = lr * omega;
  if (!(odds > Scalar(1))) return Scalar(0);
  return Scalar(1) - Scalar(2) / (Scalar(1) + odds);
}

/// Coefficient-wise likelihood ratio over aligned density arrays.
template <typename DerivedM, typename DerivedN>
auto likelihood_ratio(const Eigen::ArrayBase<DerivedM>& p_mated,
                      const Eigen::ArrayBase<DerivedN>& p_non_mated) {
  using Scalar = typename DerivedM::Scalar;
  return p_mated.binaryExpr(p_non_mated, [](Scalar m, Scalar n) {
    return likelihood_ratio<Scalar>(m, n);
  });
}

/// Coefficient-wise local linkability.
template <typename Derived>
auto local_linkability(const Eigen::ArrayBase<Derived>& lr,
                       typename Derived::Scalar omega) {
  using Scalar = typename Derived::Scalar;
  return lr.unaryExpr(
      [omega](Scalar v) { return local_linkability<Scalar>(v, omega); });
}

/// Tolerance beyond [0, 1] that global_linkability() treats as a bug rather
/// than rounding.
inline constexpr double kGlobalRangeTolerance = 1e-9;

/// Global linkability: integral of p(s|H_m) * D(s) over the shared grid,
/// i.e. the sum over bins of p_mated * d_local * width. Evaluated from the
/// bin masses, which is exact for piecewise-constant densities.
template <typename Scalar, typename Derived>
Scalar global_linkability(const BasicDensityPair<Scalar>& dp,
                          const Eigen::ArrayBase<Derived>& d_local) {
  if (d_local.size() != dp.bins() || dp.weight_mated.size() != dp.bins()) {
    throw Error(ErrorCode::GridMismatch,
                "local linkability has " + std::to_string(d_local.size()) +
                    " entries for " + std::to_string(dp.bins()) + " bins");
  }
  if ((d_local < Scalar(0)).any() || (d_local > Scalar(1)).any()) {
    throw Error(ErrorCode::InvalidConfig, "local linkability outside [0, 1]");
  }
  // Neumaier summation: weights are counts for histograms, so the fully
  // linkable case sums to the total exactly.
  Scalar sum = 0;
  Scalar comp = 0;
  for (Eigen::Index b = 0; b < dp.bins(); ++b) {
    const Scalar term = dp.weight_mated[b] * d_local[b];
    const Scalar t = sum + term;
    comp += std::abs(sum) >= std::abs(term) ? (sum - t) + term : (term - t) + sum;
    sum = t;
  }
  Scalar d_sys = (sum + comp) / dp.weight_mated.sum();
  if (d_sys < -Scalar(kGlobalRangeTolerance) ||
      d_sys > Scalar(1) + Scalar(kGlobalRangeTolerance)) {
    throw Error(ErrorCode::InvariantViolation,
                "global linkability out of range: " + std::to_string(d_sys));
  }
  if (d_sys < Scalar(0)) d_sys = Scalar(0);
  if (d_sys > Scalar(1)) d_sys = Scalar(1);
  return d_sys;
}

/// Everything computed for one linkage function's score distributions.
struct LinkabilityProfile {
  Eigen::ArrayXd edges;
  Eigen::ArrayXd lr;       // may hold +inf and no_evidence()
  Eigen::ArrayXd d_local;
  double d_sys = 0.0;
  double omega = 1.0;
  /// Grid positions where LR*omega crosses 1 between consecutive bins that
  /// carry evidence. Each entry is the left edge of the first bin on the new
  /// side of the crossing.
  std::vector<double> boundary_scores;
  std::vector<std::string> warnings;
};

/// Locates the LR*omega = 1 crossings; bins without evidence are skipped.
std::vector<double> boundary_scores(const Eigen::ArrayXd& edges,
                                    const Eigen::ArrayXd& lr, double omega);

/// Builds the profile for an already-estimated density pair.
LinkabilityProfile linkability_profile(const DensityPair& dp, double omega);

/// Estimates densities from `scores` and computes the full profile.
LinkabilityProfile evaluate(const ScoreSet& scores, const PriorConfig& prior,
                            const DensityConfig& density_cfg = {});

/// As evaluate(), also handing back the estimated densities.
LinkabilityProfile evaluate(const ScoreSet& scores, const PriorConfig& prior,
                            const DensityConfig& density_cfg,
                            DensityPair& densities_out);

}  // namespace unlinkeval

#endif  // UNLINK_LINKABILITY_HPP
