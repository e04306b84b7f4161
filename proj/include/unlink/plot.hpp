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

#ifndef UNLINK_PLOT_HPP
#define UNLINK_PLOT_HPP

#include <Eigen/Core>
#include <string>
#include <vector>

#include "unlink/baselines.hpp"
#include "unlink/density.hpp"
#include "unlink/linkability.hpp"

namespace unlinkeval {

/// Content of a linkability figure: both densities as step functions, D(s)
/// on a secondary [0, 1] axis, dashed markers where LR*omega = 1 and the
/// global value in the title. `sweep` optionally overlays D(s) for further
/// omega values.
struct PlotSpec {
  DensityPair densities;
  LinkabilityProfile profile;
  std::string title;
  std::string x_label = "linkage score s";
  std::vector<LinkabilityProfile> sweep = {};
};

/// Self-contained SVG. Every plotted series also carries its raw values in a
/// `data-values` attribute (shortest round-trip decimal text), so the figure
/// can be checked against the JSON report without rasterizing.
std::string render_linkability_svg(const PlotSpec& spec);

struct CurveSeries {
  const DetCurve* curve;
  std::string label;
  std::string color;
  bool dashed = false;
};

/// Error-rate curves, x = fmr column, y = fnmr column, raw rates on both axes.
std::string render_det_svg(const std::vector<CurveSeries>& series,
                           const std::string& title, const std::string& x_label,
                           const std::string& y_label);

}  // namespace unlinkeval

#endif  // UNLINK_PLOT_HPP
