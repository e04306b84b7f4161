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

#include "unlink/linkability.hpp"

namespace unlinkeval {

std::vector<double> boundary_scores(const Eigen::ArrayXd& edges,
                                    const Eigen::ArrayXd& lr, double omega) {
  std::vector<double> out;
  int previous = -1;  // -1 unknown, 0 unlinkable side, 1 linkable side
  for (Eigen::Index b = 0; b < lr.size(); ++b) {
    if (is_no_evidence(lr[b])) continue;
    const int side = lr[b] * omega > 1.0 ? 1 : 0;
    if (previous >= 0 && side != previous) out.push_back(edges[b]);
    previous = side;
  }
  return out;
}

LinkabilityProfile linkability_profile(const DensityPair& dp, double omega) {
  if (!(omega > 0.0) || !std::isfinite(omega)) {
    throw Error(ErrorCode::InvalidConfig, "omega must be positive");
  }
  LinkabilityProfile profile;
  profile.omega = omega;
  profile.edges = dp.edges;
  profile.lr = likelihood_ratio(dp.p_mated, dp.p_non_mated);
  profile.d_local = local_linkability(profile.lr, omega);
  profile.d_sys = global_linkability(dp, profile.d_local);
  profile.boundary_scores = boundary_scores(dp.edges, profile.lr, omega);
  if (omega > 1.0) {
    profile.warnings.push_back(
        "omega > 1 assumes mated comparisons are more likely than non-mated "
        "ones; with N >= 2 enrolled subjects omega = 1/(N-1) <= 1");
  }
  return profile;
}

LinkabilityProfile evaluate(const ScoreSet& scores, const PriorConfig& prior,
                            const DensityConfig& density_cfg,
                            DensityPair& densities_out) {
  densities_out = estimate_densities(scores, density_cfg);
  auto profile = linkability_profile(densities_out, prior.omega);
  auto adequacy = adequacy_warnings(scores);
  profile.warnings.insert(profile.warnings.begin(), adequacy.begin(),
                          adequacy.end());
  return profile;
}

LinkabilityProfile evaluate(const ScoreSet& scores, const PriorConfig& prior,
                            const DensityConfig& density_cfg) {
  DensityPair unused;
  return evaluate(scores, prior, density_cfg, unused);
}

}  // namespace unlinkeval
