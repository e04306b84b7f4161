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

#ifndef UNLINK_SCORE_MODEL_HPP
#define UNLINK_SCORE_MODEL_HPP

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "unlink/error.hpp"

namespace unlinkeval {

enum class Label { Mated, NonMated };

const char* to_string(Label label);

/// A single linkage-function output s = LS(T1, T2) with its ground-truth
/// hypothesis label.
struct LinkageScore {
  double value;
  Label label;
};

/// Below this many scores per side an estimate is still computed, but a
/// statistical-adequacy warning is attached.
inline constexpr std::size_t kAdequateScoreCount = 1000;

/// Minimum number of scores per side for a valid ScoreSet.
inline constexpr std::size_t kMinScoresPerSide = 2;

class TooFewScoresError : public Error {
 public:
  TooFewScoresError(Label side, std::size_t count);

  Label side() const noexcept { return side_; }
  std::size_t count() const noexcept { return count_; }

 private:
  Label side_;
  std::size_t count_;
};

/// Labeled empirical linkage scores. Immutable once constructed; the
/// constructor enforces finiteness and the per-side minimum count.
/// Duplicate values are kept since the empirical densities depend on
/// multiplicity.
class ScoreSet {
 public:
  ScoreSet(std::vector<double> mated, std::vector<double> non_mated,
           std::string source = {});

  std::span<const double> mated() const noexcept { return mated_; }
  std::span<const double> non_mated() const noexcept { return non_mated_; }
  std::span<const double> side(Label label) const noexcept {
    return label == Label::Mated ? mated() : non_mated();
  }
  const std::string& source() const noexcept { return source_; }

  std::size_t size() const noexcept { return mated_.size() + non_mated_.size(); }

 private:
  std::vector<double> mated_;
  std::vector<double> non_mated_;
  std::string source_;
};

/// Human-readable warnings for sides with fewer than kAdequateScoreCount
/// scores. Empty when both sides are large enough.
std::vector<std::string> adequacy_warnings(const ScoreSet& scores);

/// Ratio of prior probabilities p(H_m)/p(H_nm) and where it came from.
struct PriorConfig {
  enum class Derivation { Explicit, FromEnrollmentCount, Default };

  double omega = 1.0;
  Derivation derivation = Derivation::Default;
  long enrollment_count = 0;  // only meaningful for FromEnrollmentCount

  static PriorConfig explicit_omega(double omega);
  static PriorConfig from_enrollment(long n);
  static PriorConfig worst_case() { return {}; }
};

const char* to_string(PriorConfig::Derivation d);

/// p(H_m)/p(H_nm) when N subjects are enrolled and a probe is compared
/// against each of them: (1/N) / ((N-1)/N) = 1/(N-1).
double omega_from_enrollment(long n);

// --- score files -----------------------------------------------------------

/// Parses a headerless single-column score file.
std::vector<double> read_score_column(const std::filesystem::path& path);

/// Loads a ScoreSet from two headerless single-column files.
ScoreSet load_score_set(const std::filesystem::path& mated_path,
                        const std::filesystem::path& non_mated_path);

/// Loads a ScoreSet from one `score,label` CSV.
ScoreSet load_labeled_scores(const std::filesystem::path& path);

/// Shortest decimal text that parses back to exactly `value`.
std::string format_score(double value);

void write_score_column(const std::filesystem::path& path,
                        std::span<const double> values);

void write_labeled_scores(const std::filesystem::path& path,
                          const ScoreSet& scores);

// Parses one CSV/column field; exposed for tests.
double parse_score_field(std::string_view field, std::size_t line);

}  // namespace unlinkeval

#endif  // UNLINK_SCORE_MODEL_HPP
