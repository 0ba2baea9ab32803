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

// Session ingestion shared by the CLI and the HTTP service:
//   manifest -> timeline -> offset -> geotag -> dedup -> reconcile -> store.

#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "roadwatch/config.hpp"
#include "roadwatch/detection.hpp"
#include "roadwatch/errors.hpp"
#include "roadwatch/gps_sync.hpp"
#include "roadwatch/manifest.hpp"
#include "roadwatch/overlay_time.hpp"
#include "roadwatch/store.hpp"

namespace roadwatch {

struct SessionInputs {
  std::string frames_jsonl;
  std::string detections_jsonl;
  std::string gps_log;
  GpsLogFormat gps_format = GpsLogFormat::kCsv;
  std::map<std::string, std::string> evidence_images;  // manifest reference -> raw bytes
  std::map<std::string, std::string> road_meta;
  std::optional<ClockOffset> offset;  // overrides the config and calibration
  std::optional<UtcTime> uploaded_at;  // defaults to now
};

/// One input part failed to parse or validate.
struct PartError {
  std::string part;  // "frames", "detections" or "gps"
  ErrorCode code;
  std::string message;
};

/// The session was rejected before touching the store.
class SessionRejected : public std::runtime_error {
 public:
  explicit SessionRejected(std::vector<PartError> errors);
  const std::vector<PartError>& errors() const { return errors_; }

 private:
  std::vector<PartError> errors_;
};

struct SessionDiagnostics {
  std::size_t frames = 0;
  std::size_t unparsable_timestamps = 0;
  std::size_t invalid_dates = 0;
  std::size_t repaired_frames = 0;
  std::size_t detection_records = 0;
  std::size_t detections_accepted = 0;
  std::size_t dropped_low_confidence = 0;
  std::vector<RecordError> rejected_detections;
  std::size_t geotag_dropped = 0;
  std::size_t evidence_missing = 0;
  std::size_t evidence_oversize = 0;
  std::size_t gps_fixes = 0;
};

enum class OffsetSource { kGiven, kConfig, kReferencePairs, kStartAlignment };

std::string_view to_string(OffsetSource s);

struct CalibrationResult {
  ClockOffset offset;
  std::size_t samples = 0;
  OffsetSource source = OffsetSource::kReferencePairs;
};

/// Pairs overlay readings with UTC instants and takes the median difference.
///
/// Frames carrying a utc_reference inside the track span (1 s slack) are the
/// samples. A manifest without any utc_reference falls back to aligning the
/// first frame with the first GPS fix. Throws Error(kNoSamples) when
/// references exist but none lands on the track.
CalibrationResult calibrate_session(const std::vector<ManifestRecord>& manifest,
                                    const FrameTimeline& timeline, const GpsTrack& track);

struct SessionOutcome {
  std::string session_id;
  RegistryDelta delta;
  CalibrationResult calibration;
  std::size_t observations = 0;
  std::size_t clusters = 0;
  SessionDiagnostics diagnostics;
};

/// Runs one session end to end and commits it. Throws SessionRejected for
/// bad input and Error(kStorageFailure) when the commit fails.
SessionOutcome run_session(const SessionInputs& inputs, const EngineConfig& cfg, Store& store);

nlohmann::ordered_json to_json(const SessionOutcome& outcome);
nlohmann::ordered_json to_json(const SessionRejected& rejected);

}  // namespace roadwatch
