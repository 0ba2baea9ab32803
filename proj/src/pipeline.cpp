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

#include "roadwatch/pipeline.hpp"

#include <chrono>

#include <fmt/format.h>

#include "roadwatch/base64.hpp"
#include "roadwatch/geotag_dedup.hpp"

namespace roadwatch {

namespace {

std::string summarize(const std::vector<PartError>& errors) {
  std::string out = "session rejected";
  for (const auto& e : errors) {
    out += fmt::format("; {}: {} ({})", e.part, to_string(e.code), e.message);
  }
  return out;
}

}  // namespace

SessionRejected::SessionRejected(std::vector<PartError> errors)
    : std::runtime_error(summarize(errors)), errors_(std::move(errors)) {}

std::string_view to_string(OffsetSource s) {
  switch (s) {
    case OffsetSource::kGiven: return "given";
    case OffsetSource::kConfig: return "config";
    case OffsetSource::kReferencePairs: return "reference_pairs";
    case OffsetSource::kStartAlignment: return "start_alignment";
  }
  return "given";
}

CalibrationResult calibrate_session(const std::vector<ManifestRecord>& manifest,
                                    const FrameTimeline& timeline, const GpsTrack& track) {
  if (track.empty()) throw Error(ErrorCode::kNoSamples, "GPS track is empty");
  std::vector<CanonicalTimestamp> overlay;
  std::vector<UtcTime> utc;
  bool any_reference = false;
  const Millis slack{1000};
  for (const auto& r : manifest) {
    if (!r.utc_reference) continue;
    any_reference = true;
    if (*r.utc_reference < track.start() - slack || *r.utc_reference > track.end() + slack) {
      continue;
    }
    const auto* entry = timeline.find(r.frame_index);
    if (entry == nullptr || entry->repaired) continue;
    overlay.push_back(entry->timestamp);
    utc.push_back(*r.utc_reference);
  }
  if (any_reference) {
    if (overlay.empty()) {
      throw Error(ErrorCode::kNoSamples,
                  "no utc_reference frame pairs with a parsed overlay on the GPS track");
    }
    return {calibrate_offset(overlay, utc), overlay.size(), OffsetSource::kReferencePairs};
  }
  if (timeline.entries.empty()) throw Error(ErrorCode::kNoSamples, "timeline is empty");
  const CanonicalTimestamp first = timeline.entries.front().timestamp;
  const UtcTime start = track.start();
  return {calibrate_offset(std::span(&first, 1), std::span(&start, 1)), 1,
          OffsetSource::kStartAlignment};
}

SessionOutcome run_session(const SessionInputs& inputs, const EngineConfig& cfg, Store& store) {
  SessionOutcome out;
  auto& diag = out.diagnostics;
  std::vector<PartError> errors;

  std::vector<ManifestRecord> manifest;
  std::optional<FrameTimeline> timeline;
  try {
    manifest = parse_frame_manifest(inputs.frames_jsonl);
    diag.frames = manifest.size();
    timeline = build_timeline(overlay_texts(manifest), cfg.nominal_fps);
    diag.unparsable_timestamps = timeline->diagnostics.unparsable;
    diag.invalid_dates = timeline->diagnostics.invalid_date;
    diag.repaired_frames = timeline->repaired_count();
  } catch (const Error& e) {
    errors.push_back({"frames", e.code(), e.what()});
  }

  std::optional<GpsTrack> track;
  try {
    track = parse_gps_log(inputs.gps_log, inputs.gps_format);
    diag.gps_fixes = track->size();
  } catch (const Error& e) {
    errors.push_back({"gps", e.code(), e.what()});
  }

  auto detections = ingest_detections(inputs.detections_jsonl, cfg.confidence_threshold);
  diag.detection_records = detections.total_records;
  diag.detections_accepted = detections.accepted.size();
  diag.dropped_low_confidence = detections.dropped_low_confidence;
  diag.rejected_detections = detections.rejected;
  if (detections.total_records > 0 && detections.rejected.size() == detections.total_records) {
    errors.push_back({"detections", ErrorCode::kMalformedDetection,
                      fmt::format("all {} detection records rejected; first: line {}: {}",
                                  detections.total_records, detections.rejected.front().line,
                                  detections.rejected.front().message)});
  }
  if (!errors.empty()) throw SessionRejected(std::move(errors));

  if (inputs.offset) {
    out.calibration = {*inputs.offset, 0, OffsetSource::kGiven};
  } else if (cfg.offset_s) {
    out.calibration = {ClockOffset::from_seconds(*cfg.offset_s), 0, OffsetSource::kConfig};
  } else {
    try {
      out.calibration = calibrate_session(manifest, *timeline, *track);
    } catch (const Error& e) {
      throw SessionRejected({{"frames", e.code(), e.what()}});
    }
  }

  GeotagOptions geo;
  geo.severity = cfg.severity;
  for (const auto& r : manifest) {
    if (r.evidence) geo.evidence_frames.emplace(r.frame_index, *r.evidence);
  }
  GeotagResult tagged;
  try {
    tagged = geotag(detections.accepted, *timeline, *track, out.calibration.offset, geo);
  } catch (const Error& e) {
    throw SessionRejected({{"detections", e.code(), e.what()}});
  }
  diag.geotag_dropped = tagged.dropped();
  out.observations = tagged.observations.size();

  DedupConfig dedup;
  dedup.radius_m = cfg.radius_m;
  auto clusters = deduplicate(tagged.observations, dedup);
  out.clusters = clusters.size();

  SessionExtras extras;
  extras.road_meta = inputs.road_meta;
  for (const auto& c : clusters) {
    const auto& ref = c.evidence_member().evidence_frame;
    if (!ref || extras.evidence_b64.contains(*ref)) continue;
    auto img = inputs.evidence_images.find(*ref);
    if (img == inputs.evidence_images.end()) {
      ++diag.evidence_missing;
    } else if (img->second.size() > cfg.max_evidence_bytes) {
      ++diag.evidence_oversize;
    } else {
      extras.evidence_b64.emplace(*ref, encode_evidence(img->second));
    }
  }

  SessionInfo session;
  session.uploaded_at = inputs.uploaded_at.value_or(
      std::chrono::floor<Millis>(std::chrono::system_clock::now()));
  session.frame_count = static_cast<std::int64_t>(diag.frames);
  session.detection_count = static_cast<std::int64_t>(diag.detections_accepted);
  session.cluster_count = static_cast<std::int64_t>(clusters.size());
  session.calibrated_offset = out.calibration.offset.overlay_minus_utc;

  // Reconciliation runs inside the store, under the writer lock, against the
  // registry as it is at commit time.
  auto commit = store.ingest_session(session, clusters, *track, cfg.reconcile_config(), extras);
  out.session_id = commit.session_id;
  out.delta = commit.delta;
  return out;
}

nlohmann::ordered_json to_json(const SessionOutcome& o) {
  nlohmann::ordered_json j;
  j["session_id"] = o.session_id;
  j["delta"] = {{"created", o.delta.created},
                {"updated", o.delta.updated},
                {"fixed", o.delta.fixed},
                {"reopened", o.delta.reopened}};
  j["offset_s"] = o.calibration.offset.seconds();
  j["offset_source"] = to_string(o.calibration.source);
  j["observations"] = o.observations;
  j["clusters"] = o.clusters;
  const auto& d = o.diagnostics;
  nlohmann::ordered_json rejected = nlohmann::ordered_json::array();
  for (const auto& r : d.rejected_detections) {
    rejected.push_back({{"line", r.line}, {"message", r.message}});
  }
  j["diagnostics"] = {{"frames", d.frames},
                      {"unparsable_timestamps", d.unparsable_timestamps},
                      {"invalid_dates", d.invalid_dates},
                      {"repaired_frames", d.repaired_frames},
                      {"gps_fixes", d.gps_fixes},
                      {"detection_records", d.detection_records},
                      {"detections_accepted", d.detections_accepted},
                      {"dropped_low_confidence", d.dropped_low_confidence},
                      {"rejected_detections", d.rejected_detections.size()},
                      {"rejected", std::move(rejected)},
                      {"geotag_dropped", d.geotag_dropped},
                      {"evidence_missing", d.evidence_missing},
                      {"evidence_oversize", d.evidence_oversize}};
  return j;
}

nlohmann::ordered_json to_json(const SessionRejected& rejected) {
  nlohmann::ordered_json parts = nlohmann::ordered_json::array();
  for (const auto& e : rejected.errors()) {
    parts.push_back({{"part", e.part}, {"code", to_string(e.code)}, {"message", e.message}});
  }
  return parts;
}

}  // namespace roadwatch
