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

#include "unlink/density.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace unlinkeval {

namespace {

double point_mass_width(double v) { return 1e-6 * std::max(1.0, std::abs(v)); }

bool all_equal(std::span<const double> xs) {
  return std::all_of(xs.begin(), xs.end(),
                     [&](double x) { return x == xs.front(); });
}

std::vector<double> sorted_copy(std::span<const double> xs) {
  std::vector<double> out(xs.begin(), xs.end());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<double> uniform_edges(double lo, double hi, std::size_t bins) {
  std::vector<double> edges(bins + 1);
  const double h = (hi - lo) / static_cast<double>(bins);
  for (std::size_t i = 0; i <= bins; ++i) {
    edges[i] = lo + static_cast<double>(i) * h;
  }
  edges.back() = hi;
  return edges;
}

// Replaces whatever edges fall inside the epsilon interval around v with the
// interval's own bounds.
void insert_point_mass_bin(std::vector<double>& edges, double v) {
  const double half = point_mass_width(v) / 2.0;
  const double a = v - half;
  const double b = v + half;
  std::erase_if(edges, [&](double e) { return e > a && e < b; });
  edges.push_back(a);
  edges.push_back(b);
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double sample_sd(std::span<const double> xs) {
  const double n = static_cast<double>(xs.size());
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / (n - 1.0));
}

double silverman_bandwidth(std::span<const double> xs) {
  const auto sorted = sorted_copy(xs);
  const double sd = sample_sd(sorted);
  const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
  double spread = std::min(sd, iqr / 1.34);
  if (!(spread > 0.0)) spread = std::max(sd, iqr / 1.34);
  return 0.9 * spread * std::pow(static_cast<double>(xs.size()), -0.2);
}

Eigen::ArrayXd histogram_weights(const Eigen::ArrayXd& edges,
                                 std::span<const double> xs) {
  Eigen::ArrayXd w = Eigen::ArrayXd::Zero(edges.size() - 1);
  for (double x : xs) {
    if (auto b = find_bin(edges, x)) w[*b] += 1.0;
  }
  return w;
}

Eigen::ArrayXd kernel_weights(const Eigen::ArrayXd& edges,
                              std::span<const double> xs) {
  const double bw = silverman_bandwidth(xs);
  if (!(bw > 0.0)) return histogram_weights(edges, xs);

  const Eigen::Index bins = edges.size() - 1;
  Eigen::ArrayXd w = Eigen::ArrayXd::Zero(bins);
  const auto* begin = edges.data();
  const auto* end = edges.data() + edges.size();
  for (double x : xs) {
    const double reach = 8.0 * bw;
    auto lo = std::upper_bound(begin, end, x - reach) - begin - 1;
    auto hi = std::upper_bound(begin, end, x + reach) - begin;
    lo = std::max<Eigen::Index>(lo, 0);
    hi = std::min<Eigen::Index>(hi, bins);
    double prev = normal_cdf((edges[lo] - x) / bw);
    for (Eigen::Index b = lo; b < hi; ++b) {
      const double next = normal_cdf((edges[b + 1] - x) / bw);
      w[b] += next - prev;
      prev = next;
    }
  }
  // Mass beyond the grid is redistributed proportionally.
  const double total = w.sum();
  if (!(total > 0.0)) return histogram_weights(edges, xs);
  return w * (static_cast<double>(xs.size()) / total);
}

}  // namespace

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(i);
  if (i + 1 >= sorted.size()) return sorted.back();
  return sorted[i] + frac * (sorted[i + 1] - sorted[i]);
}

std::size_t freedman_diaconis_bins(std::span<const double> pooled) {
  const auto sorted = sorted_copy(pooled);
  const double range = sorted.back() - sorted.front();
  const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
  const double h = 2.0 * iqr * std::cbrt(1.0 / static_cast<double>(sorted.size()));
  if (!(h > 0.0) || !(range > 0.0)) return kMinAutoBins;
  const double bins = std::ceil(range / h);
  return static_cast<std::size_t>(
      std::clamp(bins, static_cast<double>(kMinAutoBins),
                 static_cast<double>(kMaxAutoBins)));
}

std::optional<Eigen::Index> find_bin(const Eigen::ArrayXd& edges, double s) {
  const auto* begin = edges.data();
  const auto* end = edges.data() + edges.size();
  if (edges.size() < 2 || !(s >= *begin) || !(s < *(end - 1))) {
    return std::nullopt;
  }
  return static_cast<Eigen::Index>(std::upper_bound(begin, end, s) - begin - 1);
}

DensityPair estimate_densities(const ScoreSet& scores,
                               const DensityConfig& config) {
  if (config.bins && *config.bins < 2) {
    throw Error(ErrorCode::InvalidConfig, "bins must be at least 2");
  }
  const auto mated = scores.mated();
  const auto non_mated = scores.non_mated();
  const bool mated_point = all_equal(mated);
  const bool non_mated_point = all_equal(non_mated);
  if ((mated_point || non_mated_point) && !config.point_mass) {
    throw Error(ErrorCode::DegenerateSupport,
                std::string("all ") +
                    (mated_point ? "mated" : "non-mated") +
                    " scores are identical and point-mass handling is off");
  }

  std::vector<double> pooled(mated.begin(), mated.end());
  pooled.insert(pooled.end(), non_mated.begin(), non_mated.end());
  const auto [min_it, max_it] = std::minmax_element(pooled.begin(), pooled.end());
  const double lo = *min_it;
  const double hi = *max_it;

  std::vector<double> edges;
  if (config.range) {
    const auto [r_lo, r_hi] = *config.range;
    if (!(r_lo < r_hi) || lo < r_lo || hi >= r_hi) {
      throw Error(ErrorCode::InvalidConfig,
                  "explicit density range does not cover all scores");
    }
    edges = uniform_edges(r_lo, r_hi,
                          config.bins.value_or(freedman_diaconis_bins(pooled)));
  } else if (hi > lo) {
    const std::size_t inner = config.bins.value_or(freedman_diaconis_bins(pooled));
    const double h = (hi - lo) / static_cast<double>(inner);
    edges = uniform_edges(lo, hi, inner);
    edges.insert(edges.begin(), lo - h);
    edges.push_back(hi + h);
  }
  // An empty grid here means every score equals lo; the point-mass bin below
  // becomes the whole grid.
  if (mated_point) insert_point_mass_bin(edges, mated.front());
  if (non_mated_point) insert_point_mass_bin(edges, non_mated.front());

  DensityPair dp;
  dp.edges = Eigen::Map<const Eigen::ArrayXd>(edges.data(),
                                              static_cast<Eigen::Index>(edges.size()));
  const Eigen::Index bins = dp.edges.size() - 1;
  dp.bin_width = dp.edges.tail(bins) - dp.edges.head(bins);

  if (config.kde) {
    dp.weight_mated = mated_point ? histogram_weights(dp.edges, mated)
                                  : kernel_weights(dp.edges, mated);
    dp.weight_non_mated = non_mated_point
                              ? histogram_weights(dp.edges, non_mated)
                              : kernel_weights(dp.edges, non_mated);
  } else {
    dp.weight_mated = histogram_weights(dp.edges, mated);
    dp.weight_non_mated = histogram_weights(dp.edges, non_mated);
  }
  dp.p_mated = dp.weight_mated / (dp.weight_mated.sum() * dp.bin_width);
  dp.p_non_mated = dp.weight_non_mated / (dp.weight_non_mated.sum() * dp.bin_width);
  check_density_pair(dp);
  return dp;
}

DensityPair density_pair_from_pmfs(std::span<const double> p_mated,
                                   std::span<const double> p_non_mated) {
  if (p_mated.size() != p_non_mated.size() || p_mated.empty()) {
    throw Error(ErrorCode::GridMismatch, "pmfs must have equal, non-zero length");
  }
  const auto bins = static_cast<Eigen::Index>(p_mated.size());
  DensityPair dp;
  dp.edges = Eigen::ArrayXd::LinSpaced(bins + 1, 0.0, static_cast<double>(bins));
  dp.bin_width = Eigen::ArrayXd::Ones(bins);
  dp.weight_mated = Eigen::Map<const Eigen::ArrayXd>(p_mated.data(), bins);
  dp.weight_non_mated = Eigen::Map<const Eigen::ArrayXd>(p_non_mated.data(), bins);
  dp.p_mated = dp.weight_mated;
  dp.p_non_mated = dp.weight_non_mated;
  check_density_pair(dp);
  return dp;
}

std::pair<double, double> evaluate_density(const DensityPair& dp, double s) {
  if (auto b = find_bin(dp.edges, s)) {
    return {dp.p_mated[*b], dp.p_non_mated[*b]};
  }
  return {0.0, 0.0};
}

void check_density_pair(const DensityPair& dp, double tol) {
  const auto bins = dp.bins();
  if (dp.edges.size() != bins + 1 || dp.p_non_mated.size() != bins ||
      dp.bin_width.size() != bins) {
    throw Error(ErrorCode::GridMismatch, "density pair arrays are misaligned");
  }
  for (Eigen::Index b = 0; b < bins; ++b) {
    if (!(dp.edges[b + 1] > dp.edges[b])) {
      throw Error(ErrorCode::InvariantViolation, "grid edges not increasing");
    }
  }
  for (const auto* p : {&dp.p_mated, &dp.p_non_mated}) {
    if (!p->isFinite().all() || (*p < 0.0).any()) {
      throw Error(ErrorCode::InvariantViolation,
                  "density values must be finite and non-negative");
    }
    const double integral = (*p * dp.bin_width).sum();
    if (std::abs(integral - 1.0) > tol) {
      throw Error(ErrorCode::NotNormalized,
                  "density integrates to " + std::to_string(integral));
    }
  }
}

}  // namespace unlinkeval
