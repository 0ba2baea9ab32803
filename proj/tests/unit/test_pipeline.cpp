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

#include <gtest/gtest.h>

#include "roadwatch/base64.hpp"
#include "roadwatch/geojson.hpp"
#include "roadwatch/pipeline.hpp"
#include "support/fixtures.hpp"

using namespace roadwatch;
using namespace roadwatch::testing;
using namespace std::chrono_literals;

namespace {

SessionInputs inputs_of(const SessionFixture& fx) {
  SessionInputs in;
  in.frames_jsonl = fx.frames_jsonl;
  in.detections_jsonl = fx.detections_jsonl;
  in.gps_log = fx.gps_csv;
  in.evidence_images = fx.evidence;
  in.uploaded_at = utc(2025, 6, 1, 0, 0, 0);
  return in;
}

std::vector<PartError> rejection(const SessionInputs& in, const EngineConfig& cfg = {}) {
  Store store(":memory:");
  try {
    run_session(in, cfg, store);
  } catch (const SessionRejected& e) {
    EXPECT_TRUE(store.snapshot().empty());
    EXPECT_TRUE(store.sessions().empty());
    return e.errors();
  }
  ADD_FAILURE() << "session accepted";
  return {};
}

}  // namespace

TEST(Pipeline, DeskScaleSession) {
  const auto spec = desk_scale_spec();
  const auto fx = make_session(spec);
  Store store(":memory:");
  const auto out = run_session(inputs_of(fx), EngineConfig{}, store);
  EXPECT_EQ(out.session_id, "s000001");
  EXPECT_EQ(out.delta, (RegistryDelta{3, 0, 0, 0}));
  EXPECT_EQ(out.calibration.source, OffsetSource::kStartAlignment);
  EXPECT_EQ(out.calibration.offset.overlay_minus_utc, 0ms);
  EXPECT_EQ(out.diagnostics.frames, 300u);
  EXPECT_EQ(out.diagnostics.detections_accepted, 41u);
  EXPECT_EQ(out.diagnostics.dropped_low_confidence, 50u);
  EXPECT_EQ(out.diagnostics.evidence_missing, 0u);

  const auto records = store.snapshot();
  ASSERT_EQ(records.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(records[i].status, PotholeStatus::kOpen);
    EXPECT_LE(haversine_m(records[i].coordinate, fx.truths[i]), 2.5);
    ASSERT_TRUE(records[i].evidence_frame_b64);
    EXPECT_NO_THROW(decode_evidence(*records[i].evidence_frame_b64));
  }
  EXPECT_EQ(records[0].observation_count, 15);
  EXPECT_EQ(records[1].observation_count, 20);
  EXPECT_EQ(records[1].severity, Severity::kHigh);
  EXPECT_EQ(records[2].severity, Severity::kLow);

  // The same drive again matches every record.
  const auto again = run_session(inputs_of(fx), EngineConfig{}, store);
  EXPECT_EQ(again.delta, (RegistryDelta{0, 3, 0, 0}));
}

TEST(Pipeline, OffsetPrecedence) {
  auto spec = ist_spec();
  spec.potholes = {{40, 10}};
  const auto fx = make_session(spec);
  EngineConfig cfg;
  {
    Store store(":memory:");
    const auto out = run_session(inputs_of(fx), cfg, store);
    EXPECT_EQ(out.calibration.source, OffsetSource::kReferencePairs);
    EXPECT_EQ(out.calibration.offset.overlay_minus_utc, 19844s);
    EXPECT_EQ(out.calibration.samples, 10u);
    EXPECT_EQ(out.delta.created, 1);
  }
  {
    Store store(":memory:");
    cfg.offset_s = 19844;
    const auto out = run_session(inputs_of(fx), cfg, store);
    EXPECT_EQ(out.calibration.source, OffsetSource::kConfig);
  }
  {
    Store store(":memory:");
    auto in = inputs_of(fx);
    in.offset = ClockOffset{0s};
    const auto out = run_session(in, cfg, store);
    EXPECT_EQ(out.calibration.source, OffsetSource::kGiven);
    // With no offset every frame lands 5.5 h away from the drive.
    EXPECT_EQ(out.observations, 0u);
    EXPECT_EQ(out.delta.created, 0);
  }
}

TEST(Pipeline, CalibrationNeedsPairs) {
  auto spec = ist_spec();
  const auto fx = make_session(spec);
  const auto manifest = parse_frame_manifest(fx.frames_jsonl);
  const auto timeline = build_timeline(overlay_texts(manifest));
  // A track recorded a day later shares no instant with the references.
  auto later = spec.track;
  later.start += 24h;
  const auto track = GpsTrack::from_fixes(later.fixes());
  try {
    calibrate_session(manifest, timeline, track);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNoSamples);
  }
  auto in = inputs_of(fx);
  in.gps_log = to_csv(later.fixes());
  const auto errors = rejection(in);
  ASSERT_EQ(errors.size(), 1u);
  EXPECT_EQ(errors[0].code, ErrorCode::kNoSamples);
}

TEST(Pipeline, RejectsBadParts) {
  const auto fx = make_session(desk_scale_spec());
  {
    auto in = inputs_of(fx);
    in.gps_log = "time_utc,lat,lon\n";
    in.frames_jsonl = "{\"frame_index\": 0}\n";
    const auto errors = rejection(in);
    ASSERT_EQ(errors.size(), 2u);
    EXPECT_EQ(errors[0].part, "frames");
    EXPECT_EQ(errors[0].code, ErrorCode::kMalformedManifest);
    EXPECT_EQ(errors[1].part, "gps");
    EXPECT_EQ(errors[1].code, ErrorCode::kEmptyTrack);
  }
  {
    auto in = inputs_of(fx);
    in.detections_jsonl = "{\"frame_index\": 1, \"w\": 3}\nnope\n";
    const auto errors = rejection(in);
    ASSERT_EQ(errors.size(), 1u);
    EXPECT_EQ(errors[0].code, ErrorCode::kMalformedDetection);
  }
  {
    auto in = inputs_of(fx);
    in.frames_jsonl = "{\"frame_index\": 0, \"overlay_text\": \"??\"}\n"
                      "{\"frame_index\": 1, \"overlay_text\": \"??\"}\n";
    const auto errors = rejection(in);
    ASSERT_EQ(errors.size(), 1u);
    EXPECT_EQ(errors[0].code, ErrorCode::kNoAnchor);
  }
  {
    auto in = inputs_of(fx);
    in.detections_jsonl =
        R"({"frame_index": 9999, "cx": 0.5, "cy": 0.5, "w": 0.1, "h": 0.1, "confidence": 0.9})";
    const auto errors = rejection(in);
    ASSERT_EQ(errors.size(), 1u);
    EXPECT_EQ(errors[0].code, ErrorCode::kMissingTimeline);
  }
  {
    auto in = inputs_of(fx);
    in.gps_log = "time_utc,lat,lon\n2025-05-20T09:00:00Z,abc,85\n";
    const auto errors = rejection(in);
    ASSERT_EQ(errors.size(), 1u);
    EXPECT_EQ(errors[0].code, ErrorCode::kMalformedLog);
  }
}

TEST(Pipeline, PartialDetectionErrorsAreReported) {
  const auto fx = make_session(desk_scale_spec());
  auto in = inputs_of(fx);
  in.detections_jsonl += "{\"frame_index\": 3, \"cx\": 2}\n";
  Store store(":memory:");
  const auto out = run_session(in, EngineConfig{}, store);
  ASSERT_EQ(out.diagnostics.rejected_detections.size(), 1u);
  EXPECT_EQ(out.delta.created, 3);
  const auto j = to_json(out);
  EXPECT_EQ(j["diagnostics"]["rejected_detections"], 1);
  EXPECT_EQ(j["delta"]["created"], 3);
  EXPECT_EQ(j["offset_source"], "start_alignment");
}

TEST(Pipeline, EvidenceCapAndMissing) {
  const auto fx = make_session(desk_scale_spec());
  auto in = inputs_of(fx);
  EngineConfig cfg;
  cfg.max_evidence_bytes = 8;  // every fixture image is larger
  Store store(":memory:");
  const auto out = run_session(in, cfg, store);
  EXPECT_EQ(out.diagnostics.evidence_oversize, 3u);
  for (const auto& r : store.snapshot()) EXPECT_FALSE(r.evidence_frame_b64);

  in.evidence_images.clear();
  Store other(":memory:");
  EXPECT_EQ(run_session(in, EngineConfig{}, other).diagnostics.evidence_missing, 3u);
}

TEST(Pipeline, StorageFailureSurfaces) {
  const auto fx = make_session(desk_scale_spec());
  Store store(":memory:");
  store.set_fault_hook([](std::string_view stage) {
    if (stage == "commit") throw std::runtime_error("disk full");
  });
  try {
    run_session(inputs_of(fx), EngineConfig{}, store);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kStorageFailure);
  }
  EXPECT_TRUE(store.snapshot().empty());
}

TEST(Pipeline, GpxTrackGivesSameRegistry) {
  const auto spec = desk_scale_spec();
  const auto fx = make_session(spec);
  Store csv_store(":memory:"), gpx_store(":memory:");
  run_session(inputs_of(fx), EngineConfig{}, csv_store);
  auto in = inputs_of(fx);
  in.gps_log = to_gpx(fx.fixes);
  in.gps_format = GpsLogFormat::kGpx;
  run_session(in, EngineConfig{}, gpx_store);
  EXPECT_EQ(render_geojson(csv_store.snapshot()), render_geojson(gpx_store.snapshot()));
}
