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

#ifndef UNLINK_DENSITY_HPP
#define UNLINK_DENSITY_HPP

#include <Eigen/Core>
#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "unlink/score_model.hpp"

namespace unlinkeval {

/// Estimator settings for estimate_densities().
///
/// `bins` counts the bins covering the pooled support; one extra bin is
/// appended on each side unless an explicit `range` is given, in which case
/// the grid is exactly `bins` equal bins over [range.first, range.second).
/// Leaving `bins` empty selects Freedman-Diaconis on the pooled sample,
/// clamped to [kMinAutoBins, kMaxAutoBins].
struct DensityConfig {
  std::optional<std::size_t> bins;
  std::optional<std::pair<double, double>> range;
  bool kde = false;         // Gaussian smoothing, Silverman bandwidth per side
  bool point_mass = true;   // allow one-point supports as an epsilon-wide bin
};

inline constexpr std::size_t kMinAutoBins = 20;
inline constexpr std::size_t kMaxAutoBins = 400;

/// Conditional densities p(s|H_m) and p(s|H_nm) as piecewise-constant
/// functions on one shared grid of half-open bins [edges[b], edges[b+1]).
///
/// `weight_*` is the probability mass of each bin in sample units (raw counts
/// for histograms), so that mass fractions can be formed without a
/// density-times-width round trip.
template <typename Scalar>
struct BasicDensityPair {
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  Array edges;
  Array p_mated;
  Array p_non_mated;
  Array bin_width;
  Array weight_mated;
  Array weight_non_mated;

  Eigen::Index bins() const { return p_mated.size(); }

  Array mass_mated() const { return weight_mated / weight_mated.sum(); }
  Array mass_non_mated() const {
    return weight_non_mated / weight_non_mated.sum();
  }
  Array centers() const {
    return (edges.head(bins()) + edges.tail(bins())) / Scalar(2);
  }
};

using DensityPair = BasicDensityPair<double>;

/// Estimates both class-conditional densities on a shared grid spanning the
/// union of both supports.
///
/// Zero-count bins keep density exactly 0. A side whose scores are all equal
/// is represented by a bin of width 1e-6*max(1,|s|) centered on the value;
/// with `point_mass` disabled that case throws DegenerateSupport.
DensityPair estimate_densities(const ScoreSet& scores,
                               const DensityConfig& config = {});

/// Wraps two discrete pmfs as densities on unit-width bins [b, b+1).
DensityPair density_pair_from_pmfs(std::span<const double> p_mated,
                                   std::span<const double> p_non_mated);

/// Index of the half-open bin containing s, or nullopt outside the grid.
std::optional<Eigen::Index> find_bin(const Eigen::ArrayXd& edges, double s);

/// (p_m, p_nm) at s; (0, 0) outside the grid.
std::pair<double, double> evaluate_density(const DensityPair& dp, double s);

/// Freedman-Diaconis bin count for the pooled sample, clamped.
std::size_t freedman_diaconis_bins(std::span<const double> pooled);

/// Linear-interpolation quantile (type 7) of an ascending sample.
double quantile_sorted(std::span<const double> sorted, double q);

/// Throws InvariantViolation unless both densities are finite, non-negative
/// and integrate to 1 within `tol`.
void check_density_pair(const DensityPair& dp, double tol = 1e-9);

}  // namespace unlinkeval

#endif  // UNLINK_DENSITY_HPP
