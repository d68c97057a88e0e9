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

#include "gaitphase/error.hpp"

namespace gaitphase {

const char* to_string(ParseErrorKind kind) {
  switch (kind) {
    case ParseErrorKind::kIo: return "io";
    case ParseErrorKind::kMalformedHeader: return "malformed-header";
    case ParseErrorKind::kRowArity: return "row-arity";
    case ParseErrorKind::kNonFinite: return "non-finite";
    case ParseErrorKind::kBadNumber: return "bad-number";
    case ParseErrorKind::kJointMismatch: return "joint-mismatch";
    case ParseErrorKind::kFrameCount: return "frame-count";
    case ParseErrorKind::kTruncated: return "truncated";
  }
  return "unknown";
}

ParseError::ParseError(ParseErrorKind kind, std::size_t line, const std::string& what)
    : DataError("line " + std::to_string(line) + ": " + to_string(kind) + ": " + what),
      kind_(kind),
      line_(line) {}

const char* to_string(CheckpointErrorKind kind) {
  switch (kind) {
    case CheckpointErrorKind::kIo: return "io";
    case CheckpointErrorKind::kBadMagic: return "bad-magic";
    case CheckpointErrorKind::kVersionMismatch: return "version-mismatch";
    case CheckpointErrorKind::kTruncated: return "truncated";
    case CheckpointErrorKind::kCorrupt: return "corrupt";
    case CheckpointErrorKind::kConfigConflict: return "config-conflict";
  }
  return "unknown";
}

CheckpointError::CheckpointError(CheckpointErrorKind kind, const std::string& what)
    : DataError(std::string("checkpoint ") + to_string(kind) + ": " + what), kind_(kind) {}

}  // namespace gaitphase
