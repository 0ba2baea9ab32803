/* Copyright 2026 The roadwatch Authors
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

#include <stdexcept>
#include <string>
#include <string_view>

namespace roadwatch {

enum class ErrorCode {
  kUnparsableTimestamp,
  kInvalidCalendarDate,
  kNoAnchor,
  kMalformedLog,
  kEmptyTrack,
  kNoSamples,
  kOutsideTrack,
  kGapTooLarge,
  kMalformedDetection,
  kMalformedManifest,
  kMissingTimeline,
  kMalformedBBox,
  kMalformedBase64,
  kStorageFailure,
  kUnknownPothole,
  kIllegalTransition,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUnparsableTimestamp: return "UnparsableTimestamp";
    case ErrorCode::kInvalidCalendarDate: return "InvalidCalendarDate";
    case ErrorCode::kNoAnchor: return "NoAnchor";
    case ErrorCode::kMalformedLog: return "MalformedLog";
    case ErrorCode::kEmptyTrack: return "EmptyTrack";
    case ErrorCode::kNoSamples: return "NoSamples";
    case ErrorCode::kOutsideTrack: return "OutsideTrack";
    case ErrorCode::kGapTooLarge: return "GapTooLarge";
    case ErrorCode::kMalformedDetection: return "MalformedDetection";
    case ErrorCode::kMalformedManifest: return "MalformedManifest";
    case ErrorCode::kMissingTimeline: return "MissingTimeline";
    case ErrorCode::kMalformedBBox: return "MalformedBBox";
    case ErrorCode::kMalformedBase64: return "MalformedBase64";
    case ErrorCode::kStorageFailure: return "StorageFailure";
    case ErrorCode::kUnknownPothole: return "UnknownPothole";
    case ErrorCode::kIllegalTransition: return "IllegalTransition";
  }
  return "Unknown";
}

// All library failures carry a machine-readable code next to the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  std::string_view code_name() const noexcept { return to_string(code_); }

 private:
  ErrorCode code_;
};

}  // namespace roadwatch
