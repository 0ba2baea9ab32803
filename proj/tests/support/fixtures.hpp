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

// Synthetic session generator shared by the unit tests and the acceptance
// runner. Tracks are straight lines sampled once per second; the overlay
// clock is UTC plus a fixed offset, rendered at whole-second resolution
// like a real dashcam.

#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "roadwatch/detection.hpp"
#include "roadwatch/geo.hpp"
#include "roadwatch/gps_sync.hpp"
#include "roadwatch/overlay_time.hpp"
#include "roadwatch/time.hpp"

namespace roadwatch::testing {

/// Moves a point by local east/north metres (spherical earth).
inline LatLon offset_m(const LatLon& p, double east_m, double north_m) {
  constexpr double kRadToDeg = 180.0 / std::numbers::pi;
  const double dlat = north_m / kEarthRadiusM * kRadToDeg;
  const double dlon =
      east_m / (kEarthRadiusM * std::cos(p.lat * std::numbers::pi / 180.0)) * kRadToDeg;
  return {p.lat + dlat, p.lon + dlon};
}

inline UtcTime utc(int y, unsigned m, unsigned d, int hh, int mm, int ss) {
  using namespace std::chrono;
  return sys_days{year{y} / month{m} / day{d}} + hours{hh} + minutes{mm} + seconds{ss};
}

struct TrackSpec {
  LatLon origin{12.97160, 77.59460};
  double heading_deg = 90.0;  // clockwise from north
  double speed_mps = 10.0;
  UtcTime start = utc(2025, 5, 20, 9, 0, 0);
  int seconds = 12;

  /// Exact position at `t` on the continuous line.
  LatLon position_at(UtcTime t) const {
    const double s = std::chrono::duration<double>(t - start).count();
    const double d = speed_mps * s;
    const double h = heading_deg * std::numbers::pi / 180.0;
    return offset_m(origin, d * std::sin(h), d * std::cos(h));
  }

  std::vector<GpsFix> fixes() const {
    std::vector<GpsFix> out;
    for (int i = 0; i <= seconds; ++i) {
      const UtcTime t = start + std::chrono::seconds{i};
      out.push_back({t, position_at(t)});
    }
    return out;
  }
};

inline std::string to_csv(const std::vector<GpsFix>& fixes) {
  std::string out = "time_utc,lat,lon\n";
  for (const auto& f : fixes) {
    out += fmt::format("{},{:.8f},{:.8f}\n", format_iso8601(f.time_utc), f.position.lat,
                       f.position.lon);
  }
  return out;
}

inline std::string to_gpx(const std::vector<GpsFix>& fixes) {
  std::string out =
      "<?xml version=\"1.0\"?>\n<gpx version=\"1.1\" creator=\"fixture\">"
      "<trk><trkseg>\n";
  for (const auto& f : fixes) {
    out += fmt::format("<trkpt lat=\"{:.8f}\" lon=\"{:.8f}\"><time>{}</time></trkpt>\n",
                       f.position.lat, f.position.lon, format_iso8601(f.time_utc));
  }
  return out + "</trkseg></trk></gpx>\n";
}

struct PotholeSpec {
  std::size_t first_frame = 0;
  std::size_t frame_count = 1;
  double box_side = 0.15;  // normalized; area 0.0225 is "medium"
  double confidence = 0.8;
};

struct SessionSpec {
  TrackSpec track;
  std::size_t frames = 300;
  double fps = 30.0;
  Millis overlay_offset{0};  // overlay clock minus UTC
  std::vector<PotholeSpec> potholes;
  std::vector<std::size_t> negative_frames;  // carry sub-threshold false positives
  std::size_t reference_every = 0;           // utc_reference on every Nth whole-second frame
  bool evidence = false;                     // evidence reference on pothole frames
  std::uint64_t seed = 7;
};

struct SessionFixture {
  std::string frames_jsonl;
  std::string detections_jsonl;
  std::string gps_csv;
  std::vector<GpsFix> fixes;
  std::vector<LatLon> truths;  // vehicle position at each pothole's middle frame
  std::map<std::string, std::string> evidence;  // reference -> bytes
};

inline UtcTime frame_utc(const SessionSpec& s, std::size_t k) {
  const auto ms = static_cast<std::int64_t>(std::floor(static_cast<double>(k) * 1000.0 / s.fps));
  return s.track.start + Millis{ms};
}

inline std::string overlay_for(UtcTime t) {
  const auto local = OverlayTime{t.time_since_epoch()};
  auto ts = CanonicalTimestamp::from_overlay_time(std::chrono::floor<std::chrono::seconds>(local));
  return format_overlay(ts);
}

inline SessionFixture make_session(const SessionSpec& s) {
  SessionFixture fx;
  fx.fixes = s.track.fixes();
  fx.gps_csv = to_csv(fx.fixes);

  std::vector<SyntheticDetectorBackend::Target> targets;
  for (const auto& p : s.potholes) {
    targets.push_back({p.first_frame, p.first_frame + p.frame_count - 1,
                       {0.5, 0.7, p.box_side, p.box_side}, p.confidence});
    fx.truths.push_back(s.track.position_at(frame_utc(s, p.first_frame + p.frame_count / 2)));
  }
  for (std::size_t k : s.negative_frames) {
    targets.push_back({k, k, {0.3, 0.4, 0.05, 0.05}, 0.1});
  }
  SyntheticDetectorBackend detector(targets, s.seed);

  auto is_pothole_frame = [&](std::size_t k) {
    for (const auto& p : s.potholes) {
      if (k >= p.first_frame && k < p.first_frame + p.frame_count) return true;
    }
    return false;
  };

  const auto period = static_cast<std::size_t>(std::llround(s.fps));
  std::vector<FrameRef> refs;
  for (std::size_t k = 0; k < s.frames; ++k) {
    const UtcTime t = frame_utc(s, k);
    nlohmann::ordered_json rec;
    rec["frame_index"] = k;
    rec["overlay_text"] = overlay_for(t + s.overlay_offset);
    if (s.evidence && is_pothole_frame(k)) {
      const std::string ref = fmt::format("evidence/{:06d}.jpg", k);
      rec["evidence"] = ref;
      std::string bytes = "\xFF\xD8\xFF\xE0";
      bytes += fmt::format("frame {} pixels", k);
      bytes += "\xFF\xD9";
      fx.evidence.emplace(ref, std::move(bytes));
    }
    if (s.reference_every > 0 && k % (period * s.reference_every) == 0) {
      rec["utc_reference"] = format_iso8601(t);
    }
    fx.frames_jsonl += rec.dump() + "\n";
    refs.push_back({k, {}});
  }
  for (const auto& d : run_detector(detector, refs)) {
    nlohmann::ordered_json rec;
    rec["frame_index"] = d.frame_index;
    rec["cx"] = d.bbox.cx;
    rec["cy"] = d.bbox.cy;
    rec["w"] = d.bbox.w;
    rec["h"] = d.bbox.h;
    rec["confidence"] = d.confidence;
    fx.detections_jsonl += rec.dump() + "\n";
  }
  return fx;
}

/// The desk-scale end-to-end session: 300 frames at 30 fps, three potholes
/// seen in 15, 20 and 6 frames, and 50 frames holding low-confidence noise.
/// At 1.5 m/s one overlay second spans 1.5 m of road.
inline SessionSpec desk_scale_spec() {
  SessionSpec s;
  s.track.speed_mps = 1.5;
  s.frames = 300;
  s.potholes = {{35, 15, 0.15, 0.85}, {128, 20, 0.30, 0.9}, {241, 6, 0.05, 0.6}};
  for (std::size_t k = 0; k < 50; ++k) s.negative_frames.push_back(60 + k);
  s.evidence = true;
  return s;
}

/// Overlay clock running 5 h 30 min 44 s ahead of UTC, with UTC references
/// on every whole-second frame.
inline SessionSpec ist_spec() {
  SessionSpec s;
  s.frames = 300;
  s.overlay_offset = Millis{19844 * 1000};
  s.reference_every = 1;
  return s;
}

/// Writes a fixture as frames.jsonl, detections.jsonl, track.csv and any
/// evidence files under `dir`.
inline void write_fixture(const SessionFixture& fx, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  auto put = [](const fs::path& p, const std::string& body) {
    fs::create_directories(p.parent_path());
    std::ofstream(p, std::ios::binary) << body;
  };
  put(dir / "frames.jsonl", fx.frames_jsonl);
  put(dir / "detections.jsonl", fx.detections_jsonl);
  put(dir / "track.csv", fx.gps_csv);
  for (const auto& [ref, bytes] : fx.evidence) put(dir / ref, bytes);
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& tag) {
  namespace fs = std::filesystem;
  static std::mt19937_64 rng(std::random_device{}());
  fs::path p = fs::temp_directory_path() / fmt::format("roadwatch-{}-{:016x}", tag, rng());
  fs::create_directories(p);
  return p;
}

}  // namespace roadwatch::testing
