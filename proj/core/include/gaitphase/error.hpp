/*
 * Copyright 2026 The gaitphase Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gaitphase {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad flags, bad arguments, conflicting configuration. CLI exit code 1.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Operand shapes that do not fit the operation.
class ShapeError : public UsageError {
 public:
  using UsageError::UsageError;
};

/// Malformed or inconsistent input data. CLI exit code 2.
class DataError : public Error {
 public:
  using Error::Error;
};

/// NaN/Inf, divergence, or an undefined numerical point. CLI exit code 3.
class NumericalError : public Error {
 public:
  using Error::Error;
};

enum class ParseErrorKind {
  kIo,
  kMalformedHeader,
  kRowArity,
  kNonFinite,
  kBadNumber,
  kJointMismatch,
  kFrameCount,
  kTruncated,
};

const char* to_string(ParseErrorKind kind);

/// Sequence-file parse failure with the offending 1-based line.
class ParseError : public DataError {
 public:
  ParseError(ParseErrorKind kind, std::size_t line, const std::string& what);

  ParseErrorKind kind() const { return kind_; }
  std::size_t line() const { return line_; }

 private:
  ParseErrorKind kind_;
  std::size_t line_;
};

enum class CheckpointErrorKind {
  kIo,
  kBadMagic,
  kVersionMismatch,
  kTruncated,
  kCorrupt,
  kConfigConflict,
};

const char* to_string(CheckpointErrorKind kind);

class CheckpointError : public DataError {
 public:
  CheckpointError(CheckpointErrorKind kind, const std::string& what);

  CheckpointErrorKind kind() const { return kind_; }

 private:
  CheckpointErrorKind kind_;
};

}  // namespace gaitphase
