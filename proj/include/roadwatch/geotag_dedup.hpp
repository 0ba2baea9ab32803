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

// Geotagging of per-frame detections and their spatial collapse into
// canonical potholes.
//
// At 30 fps a single pothole is detected in many consecutive frames, each of
// which geotags to a slightly different point along the drive. Observations
// are folded greedily: each one joins the first cluster whose anchor lies
// within the dedup radius, or founds a new cluster anchored at itself.
// Anchors never move, so the result only depends on input order.

#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "roadwatch/detection.hpp"
#include "roadwatch/errors.hpp"
#include "roadwatch/geo.hpp"
#include "roadwatch/gps_sync.hpp"
#include "roadwatch/overlay_time.hpp"
#include "roadwatch/registry.hpp"

namespace roadwatch {

struct PotholeObservation {
  std::string session_id;
  std::size_t frame_index = 0;
  LatLon coordinate;  // 5 decimals
  UtcTime observed_at_utc{};
  Severity severity = Severity::kLow;
  double confidence = 0.0;
  std::optional<std::string> evidence_frame;

  friend bool operator==(const PotholeObservation&, const PotholeObservation&) = default;
};

struct GeotagOptions {
  std::string session_id;
  SeverityThresholds severity;
  LocateLimits limits;
  std::map<std::size_t, std::string> evidence_frames;  // frame_index -> image reference
};

struct GeotagResult {
  std::vector<PotholeObservation> observations;  // sorted by (time, frame)
  std::size_t dropped_outside_track = 0;
  std::size_t dropped_gap = 0;

  std::size_t dropped() const { return dropped_outside_track + dropped_gap; }
};

/// One observation per detection whose frame time falls on the track.
/// Throws Error(kMissingTimeline) if a detection's frame is not in the
/// timeline.
inline GeotagResult geotag(std::span<const Detection> detections, const FrameTimeline& timeline,
                           const GpsTrack& track, ClockOffset offset,
                           const GeotagOptions& options = {}) {
  GeotagResult result;
  for (const auto& d : detections) {
    const TimelineEntry* entry = timeline.find(d.frame_index);
    if (entry == nullptr) {
      throw Error(ErrorCode::kMissingTimeline,
                  fmt::format("detection references frame {} which has no timeline entry",
                              d.frame_index));
    }
    const UtcTime at = to_utc(entry->timestamp.to_overlay_time(), offset);
    LatLon where;
    try {
      where = locate_utc(track, at, options.limits);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kGapTooLarge) {
        ++result.dropped_gap;
      } else {
        ++result.dropped_outside_track;
      }
      continue;
    }
    PotholeObservation obs;
    obs.session_id = options.session_id;
    obs.frame_index = d.frame_index;
    obs.coordinate = where;
    obs.observed_at_utc = at;
    obs.severity = assess_severity(d, options.severity);
    obs.confidence = d.confidence;
    if (auto it = options.evidence_frames.find(d.frame_index);
        it != options.evidence_frames.end()) {
      obs.evidence_frame = it->second;
    }
    result.observations.push_back(std::move(obs));
  }
  std::stable_sort(result.observations.begin(), result.observations.end(),
                   [](const PotholeObservation& a, const PotholeObservation& b) {
                     return a.observed_at_utc < b.observed_at_utc ||
                            (a.observed_at_utc == b.observed_at_utc &&
                             a.frame_index < b.frame_index);
                   });
  return result;
}

struct DedupConfig {
  double radius_m = 2.5;
  double earth_radius_m = kEarthRadiusM;
};

struct PotholeCluster {
  LatLon anchor;
  std::vector<PotholeObservation> members;
  Severity representative_severity = Severity::kLow;
  UtcTime first_seen{};
  UtcTime last_seen{};

  /// Highest-confidence member; the earliest wins ties.
  const PotholeObservation& evidence_member() const {
    const PotholeObservation* best = &members.front();
    for (const auto& m : members) {
      if (m.confidence > best->confidence) best = &m;
    }
    return *best;
  }
};

/// Greedy first-fit clustering. Expects observations ordered by
/// (observed_at_utc, frame_index), as geotag() returns them.
inline std::vector<PotholeCluster> deduplicate(std::span<const PotholeObservation> observations,
                                               const DedupConfig& cfg = {}) {
  if (!(cfg.radius_m > 0.0)) throw std::invalid_argument("dedup radius must be positive");
  std::vector<PotholeCluster> clusters;
  for (const auto& obs : observations) {
    PotholeCluster* home = nullptr;
    for (auto& c : clusters) {
      if (haversine_m(c.anchor, obs.coordinate, cfg.earth_radius_m) <= cfg.radius_m) {
        home = &c;
        break;
      }
    }
    if (home == nullptr) {
      PotholeCluster c;
      c.anchor = obs.coordinate;
      c.representative_severity = obs.severity;
      c.first_seen = obs.observed_at_utc;
      c.last_seen = obs.observed_at_utc;
      c.members.push_back(obs);
      clusters.push_back(std::move(c));
      continue;
    }
    home->representative_severity = std::max(home->representative_severity, obs.severity);
    home->first_seen = std::min(home->first_seen, obs.observed_at_utc);
    home->last_seen = std::max(home->last_seen, obs.observed_at_utc);
    home->members.push_back(obs);
  }
  return clusters;
}

// ---------------------------------------------------------------------------
// Cross-session reconciliation
// ---------------------------------------------------------------------------

struct ReconcileConfig {
  double corridor_m = 10.0;
  DedupConfig dedup;
};

struct ReconcileResult {
  std::vector<StatusTransition> transitions;
  // Per new cluster, the existing record it lands on (nearest within the
  // dedup radius), or nullopt when it is a new pothole.
  std::vector<std::optional<PotholeId>> matches;
};

/// Closest approach of the sampled track to `p`, in meters.
inline double track_distance_m(std::span<const LatLon> samples, const LatLon& p,
                               double earth_radius_m = kEarthRadiusM) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& s : samples) best = std::min(best, haversine_m(s, p, earth_radius_m));
  return best;
}

/// Decides status changes for `existing` given a new drive.
///
/// A record is only considered when the drive passed within corridor_m of it.
/// Then: an active (open or reopened) record with no new cluster inside the
/// dedup radius becomes fixed, and a fixed record with such a cluster is
/// reopened.
inline ReconcileResult reconcile(std::span<const PotholeRecord> existing, const GpsTrack& new_track,
                                 std::span<const PotholeCluster> new_clusters,
                                 const ReconcileConfig& cfg = {}) {
  if (!(cfg.corridor_m > 0.0)) throw std::invalid_argument("corridor must be positive");
  const double earth = cfg.dedup.earth_radius_m;
  const auto samples = sample_track(new_track);

  ReconcileResult result;
  result.matches.assign(new_clusters.size(), std::nullopt);
  std::vector<double> match_distance(new_clusters.size(),
                                     std::numeric_limits<double>::infinity());

  std::vector<const PotholeRecord*> ordered;
  for (const auto& r : existing) ordered.push_back(&r);
  std::sort(ordered.begin(), ordered.end(),
            [](const PotholeRecord* a, const PotholeRecord* b) { return a->id < b->id; });

  for (const PotholeRecord* r : ordered) {
    bool seen_again = false;
    for (std::size_t i = 0; i < new_clusters.size(); ++i) {
      const double d = haversine_m(r->coordinate, new_clusters[i].anchor, earth);
      if (d > cfg.dedup.radius_m) continue;
      seen_again = true;
      if (d < match_distance[i]) {
        match_distance[i] = d;
        result.matches[i] = r->id;
      }
    }
    if (track_distance_m(samples, r->coordinate, earth) > cfg.corridor_m) continue;
    if (seen_again && r->status == PotholeStatus::kFixed) {
      result.transitions.push_back({r->id, PotholeStatus::kFixed, PotholeStatus::kReopened});
    } else if (!seen_again && is_active(r->status)) {
      result.transitions.push_back({r->id, r->status, PotholeStatus::kFixed});
    }
  }
  return result;
}

}  // namespace roadwatch
