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

#ifndef UNLINK_ERROR_HPP
#define UNLINK_ERROR_HPP

#include <stdexcept>
#include <string>

namespace unlinkeval {

enum class ErrorCode {
  MissingFile,
  ParseError,
  NonFiniteScore,
  TooFewScores,
  InvalidEnrollmentCount,
  InvalidConfig,
  DegenerateSupport,
  GridMismatch,
  LengthMismatch,
  NotNormalized,
  NotDivisible,
  NotBijective,
  ShapeMismatch,
  SchemeMismatch,
  SchemeNotInvertible,
  InconsistentDatabases,
  InvariantViolation,
};

const char* to_string(ErrorCode code);

// All library failures are reported through this type. InvariantViolation
// marks internal bugs; every other code is a caller/input error.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Line-anchored input errors (ParseError, NonFiniteScore) carry the 1-based
// line number of the offending record.
class LineError : public Error {
 public:
  LineError(ErrorCode code, std::size_t line, const std::string& what)
      : Error(code, what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace unlinkeval

#endif  // UNLINK_ERROR_HPP
