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

#include "unlink/score_model.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace unlinkeval {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::NonFiniteScore: return "NonFiniteScore";
    case ErrorCode::TooFewScores: return "TooFewScores";
    case ErrorCode::InvalidEnrollmentCount: return "InvalidEnrollmentCount";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::DegenerateSupport: return "DegenerateSupport";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::NotNormalized: return "NotNormalized";
    case ErrorCode::NotDivisible: return "NotDivisible";
    case ErrorCode::NotBijective: return "NotBijective";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::SchemeMismatch: return "SchemeMismatch";
    case ErrorCode::SchemeNotInvertible: return "SchemeNotInvertible";
    case ErrorCode::InconsistentDatabases: return "InconsistentDatabases";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
  }
  return "Unknown";
}

const char* to_string(Label label) {
  return label == Label::Mated ? "mated" : "nonmated";
}

const char* to_string(PriorConfig::Derivation d) {
  switch (d) {
    case PriorConfig::Derivation::Explicit: return "explicit";
    case PriorConfig::Derivation::FromEnrollmentCount: return "enrollment_count";
    case PriorConfig::Derivation::Default: return "default";
  }
  return "unknown";
}

TooFewScoresError::TooFewScoresError(Label side, std::size_t count)
    : Error(ErrorCode::TooFewScores,
            std::string("too few ") + to_string(side) + " scores: " +
                std::to_string(count) + " (need at least " +
                std::to_string(kMinScoresPerSide) + ")"),
      side_(side),
      count_(count) {}

namespace {

void validate_side(const std::vector<double>& values, Label side) {
  if (values.size() < kMinScoresPerSide) {
    throw TooFewScoresError(side, values.size());
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw Error(ErrorCode::NonFiniteScore,
                  std::string("non-finite ") + to_string(side) +
                      " score at index " + std::to_string(i));
    }
  }
}

std::string_view trim(std::string_view s) {
  constexpr std::string_view ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::ifstream open_or_throw(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::MissingFile,
                "cannot open score file: " + path.string());
  }
  return in;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

}  // namespace

ScoreSet::ScoreSet(std::vector<double> mated, std::vector<double> non_mated,
                   std::string source)
    : mated_(std::move(mated)),
      non_mated_(std::move(non_mated)),
      source_(std::move(source)) {
  validate_side(mated_, Label::Mated);
  validate_side(non_mated_, Label::NonMated);
}

std::vector<std::string> adequacy_warnings(const ScoreSet& scores) {
  std::vector<std::string> out;
  for (Label side : {Label::Mated, Label::NonMated}) {
    const auto n = scores.side(side).size();
    if (n < kAdequateScoreCount) {
      out.push_back(std::string("only ") + std::to_string(n) + " " +
                    to_string(side) + " scores; estimates below " +
                    std::to_string(kAdequateScoreCount) +
                    " scores per side are statistically weak");
    }
  }
  return out;
}

PriorConfig PriorConfig::explicit_omega(double omega) {
  if (!(omega > 0.0) || !std::isfinite(omega)) {
    throw Error(ErrorCode::InvalidConfig, "omega must be positive");
  }
  return {omega, Derivation::Explicit, 0};
}

PriorConfig PriorConfig::from_enrollment(long n) {
  return {omega_from_enrollment(n), Derivation::FromEnrollmentCount, n};
}

double omega_from_enrollment(long n) {
  if (n < 2) {
    throw Error(ErrorCode::InvalidEnrollmentCount,
                "enrollment count must be at least 2, got " + std::to_string(n));
  }
  return 1.0 / static_cast<double>(n - 1);
}

double parse_score_field(std::string_view field, std::size_t line) {
  field = trim(field);
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  double value = 0.0;
  const auto* first = field.data();
  const auto* last = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (field.empty() || ec == std::errc::invalid_argument || ptr != last) {
    throw LineError(ErrorCode::ParseError, line,
                    "line " + std::to_string(line) + ": cannot parse score '" +
                        std::string(field) + "'");
  }
  if (ec == std::errc::result_out_of_range || !std::isfinite(value)) {
    throw LineError(ErrorCode::NonFiniteScore, line,
                    "line " + std::to_string(line) + ": non-finite score '" +
                        std::string(field) + "'");
  }
  return value;
}

std::vector<double> read_score_column(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  std::vector<double> values;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto field = trim(raw);
    if (field.empty()) continue;
    values.push_back(parse_score_field(field, line));
  }
  return values;
}

ScoreSet load_score_set(const std::filesystem::path& mated_path,
                        const std::filesystem::path& non_mated_path) {
  auto mated = read_score_column(mated_path);
  auto non_mated = read_score_column(non_mated_path);
  return ScoreSet(std::move(mated), std::move(non_mated),
                  mated_path.filename().string() + " / " +
                      non_mated_path.filename().string());
}

ScoreSet load_labeled_scores(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  std::vector<double> mated;
  std::vector<double> non_mated;
  std::string raw;
  std::size_t line = 0;
  bool header_seen = false;
  while (std::getline(in, raw)) {
    ++line;
    const auto record = trim(raw);
    if (record.empty()) continue;
    if (!header_seen) {
      if (lower(record) != "score,label") {
        throw LineError(ErrorCode::ParseError, line,
                        "line " + std::to_string(line) +
                            ": expected header 'score,label'");
      }
      header_seen = true;
      continue;
    }
    const auto comma = record.find(',');
    if (comma == std::string_view::npos) {
      throw LineError(ErrorCode::ParseError, line,
                      "line " + std::to_string(line) + ": expected 'score,label'");
    }
    const double value = parse_score_field(record.substr(0, comma), line);
    const auto label = lower(trim(record.substr(comma + 1)));
    if (label == "mated") {
      mated.push_back(value);
    } else if (label == "nonmated") {
      non_mated.push_back(value);
    } else {
      throw LineError(ErrorCode::ParseError, line,
                      "line " + std::to_string(line) + ": unknown label '" +
                          label + "'");
    }
  }
  return ScoreSet(std::move(mated), std::move(non_mated),
                  path.filename().string());
}

std::string format_score(double value) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc{}) {
    throw Error(ErrorCode::InvariantViolation, "cannot format score");
  }
  return std::string(buf.data(), ptr);
}

void write_score_column(const std::filesystem::path& path,
                        std::span<const double> values) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error(ErrorCode::MissingFile, "cannot write " + path.string());
  }
  for (double v : values) out << format_score(v) << '\n';
}

void write_labeled_scores(const std::filesystem::path& path,
                          const ScoreSet& scores) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error(ErrorCode::MissingFile, "cannot write " + path.string());
  }
  out << "score,label\n";
  for (double v : scores.mated()) out << format_score(v) << ",mated\n";
  for (double v : scores.non_mated()) out << format_score(v) << ",nonmated\n";
}

}  // namespace unlinkeval
