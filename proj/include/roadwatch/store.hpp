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

// Pothole registry persisted in a single SQLite file.
//
// All writes go through one connection under a mutex and run inside a single
// transaction each; a failure anywhere inside rolls the whole write back.
// File-backed stores run in WAL mode and serve reads from short-lived
// read-only connections, so readers only ever see committed state.

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "roadwatch/geotag_dedup.hpp"
#include "roadwatch/gps_sync.hpp"
#include "roadwatch/registry.hpp"
#include "roadwatch/time.hpp"

struct sqlite3;

namespace roadwatch {

struct SessionInfo {
  std::string id;
  UtcTime uploaded_at{};
  std::int64_t frame_count = 0;
  std::int64_t detection_count = 0;
  std::int64_t cluster_count = 0;
  Millis calibrated_offset{0};

  friend bool operator==(const SessionInfo&, const SessionInfo&) = default;
};

struct RegistryDelta {
  int created = 0;
  int updated = 0;
  int fixed = 0;
  int reopened = 0;

  friend bool operator==(const RegistryDelta&, const RegistryDelta&) = default;
};

struct BBox {
  double min_lat = -90.0;
  double min_lon = -180.0;
  double max_lat = 90.0;
  double max_lon = 180.0;

  static BBox world() { return {}; }

  bool contains(const LatLon& p) const {
    return p.lat >= min_lat && p.lat <= max_lat && p.lon >= min_lon && p.lon <= max_lon;
  }
};

/// Throws Error(kMalformedBBox) unless min <= max on both axes and all values
/// are finite WGS84 degrees.
void validate_bbox(const BBox& bbox);

struct RegistryQuery {
  BBox bbox;
  std::optional<UtcTime> from;  // inclusive; matches records last seen at or after
  std::optional<UtcTime> to;    // inclusive; matches records first seen at or before
  std::optional<std::set<PotholeStatus>> statuses;
  std::optional<std::string> road_type;  // road_meta["road_type"]
};

struct CommitResult {
  std::string session_id;
  RegistryDelta delta;
};

/// Per-session inputs to an upsert that are not part of the clusters.
struct SessionExtras {
  std::map<std::string, std::string> road_meta;
  std::map<std::string, std::string> evidence_b64;  // evidence reference -> Base64 image
};

/// Called at named points inside a write transaction. Throwing from it
/// aborts the write; tests use it to inject mid-commit failures.
using FaultHook = std::function<void(std::string_view stage)>;

class Store {
 public:
  /// Opens or creates the store. ":memory:" gives a private in-memory store.
  explicit Store(std::string path);
  ~Store();

  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;

  const std::string& path() const { return path_; }

  /// Plans the session against the current registry and commits it, all
  /// under the writer lock. An empty session id is replaced by the next free
  /// one.
  CommitResult ingest_session(SessionInfo session,
                               std::span<const PotholeCluster> clusters,
                               const GpsTrack& track, const ReconcileConfig& cfg,
                               const SessionExtras& extras = {});

  /// Commits a precomputed plan. New clusters become open records, matched
  /// clusters refresh their record, and transitions are applied. Atomic:
  /// throws Error(kStorageFailure) with the registry unchanged on failure.
  RegistryDelta upsert_clusters(const SessionInfo& session,
                                std::span<const PotholeCluster> clusters,
                                const ReconcileResult& plan, const SessionExtras& extras = {});

  /// Records matching every supplied filter, newest last_seen first.
  std::vector<PotholeRecord> query(const RegistryQuery& q) const;

  /// Every record, by id.
  std::vector<PotholeRecord> snapshot() const;

  std::optional<PotholeRecord> get(PotholeId id) const;

  /// Manual status change. Throws kUnknownPothole or kIllegalTransition.
  PotholeRecord set_status(PotholeId id, PotholeStatus status);

  std::vector<SessionInfo> sessions() const;

  void set_fault_hook(FaultHook hook);

 private:
  struct Handle;

  template <typename Fn>
  auto with_reader(Fn&& fn) const;

  RegistryDelta upsert_locked(const SessionInfo& session,
                              std::span<const PotholeCluster> clusters,
                              const ReconcileResult& plan, const SessionExtras& extras);
  std::vector<PotholeRecord> snapshot_with(sqlite3* db) const;
  std::string next_session_id_locked() const;

  std::string path_;
  bool in_memory_ = false;
  std::unique_ptr<Handle> writer_;
  mutable std::mutex write_mutex_;
  FaultHook fault_hook_;
};

}  // namespace roadwatch
