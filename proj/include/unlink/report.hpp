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

#ifndef UNLINK_REPORT_HPP
#define UNLINK_REPORT_HPP

#include <filesystem>
#include <string>

#include <json.hpp>

#include "unlink/baselines.hpp"
#include "unlink/density.hpp"
#include "unlink/linkability.hpp"
#include "unlink/protocol.hpp"

namespace unlinkeval {

// JSON forms. Non-finite LR values are written as the string "inf" and
// no-evidence bins as null; everything else keeps full double precision.

nlohmann::json to_json(const DensityPair& dp);
nlohmann::json to_json(const LinkabilityProfile& profile);
nlohmann::json to_json(const DetCurve& curve);
nlohmann::json kl_to_json(const KlResult& kl);
nlohmann::json to_json(const FunctionResult& result);
nlohmann::json to_json(const EvaluationReport& report);

LinkabilityProfile profile_from_json(const nlohmann::json& j);
DensityPair density_pair_from_json(const nlohmann::json& j);

/// Pretty-printed with a trailing newline.
void write_json(const std::filesystem::path& path, const nlohmann::json& j);
void write_text(const std::filesystem::path& path, const std::string& text);

/// Two columns with header `fmr,fnmr` (or `rtmr,fnmr` for renewable curves).
void write_curve_csv(const std::filesystem::path& path, const DetCurve& curve);

/// Fixed 4-decimal rendering used on the console.
std::string format_d_sys(double d_sys);

/// Side-by-side summary of the accuracy-oriented baselines and the
/// linkability measure for one set of score files.
struct ComparisonSummary {
  double eer_accuracy = 0.0;
  double eer_cross_key = 0.0;
  double rtmr_equal_rate = 0.0;
  KlResult kl;
  double d_sys = 0.0;
};

std::string comparison_table(const ComparisonSummary& s);

/// Plain-text digest of a protocol run.
std::string report_text(const EvaluationReport& report);

}  // namespace unlinkeval

#endif  // UNLINK_REPORT_HPP
