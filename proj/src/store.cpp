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

#include "roadwatch/store.hpp"

#include <sqlite3.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace roadwatch {

namespace {

constexpr const char* kSchema = R"sql(
CREATE TABLE IF NOT EXISTS potholes (
  id                 INTEGER PRIMARY KEY AUTOINCREMENT,
  lat                REAL    NOT NULL,
  lon                REAL    NOT NULL,
  severity           TEXT    NOT NULL CHECK (severity IN ('low', 'medium', 'high')),
  status             TEXT    NOT NULL CHECK (status IN ('open', 'fixed', 'reopened')),
  first_seen_ms      INTEGER NOT NULL,
  last_seen_ms       INTEGER NOT NULL,
  observation_count  INTEGER NOT NULL CHECK (observation_count >= 1),
  evidence_frame_b64 TEXT,
  road_meta          TEXT    NOT NULL DEFAULT '{}'
);
CREATE INDEX IF NOT EXISTS potholes_lat_lon ON potholes (lat, lon);
CREATE TABLE IF NOT EXISTS sessions (
  id                   TEXT PRIMARY KEY,
  uploaded_at_ms       INTEGER NOT NULL,
  frame_count          INTEGER NOT NULL CHECK (frame_count >= 0),
  detection_count      INTEGER NOT NULL CHECK (detection_count >= 0),
  cluster_count        INTEGER NOT NULL CHECK (cluster_count >= 0),
  calibrated_offset_ms INTEGER NOT NULL
);
CREATE TABLE IF NOT EXISTS observations (
  session_id     TEXT    NOT NULL REFERENCES sessions (id),
  frame_index    INTEGER NOT NULL,
  lat            REAL    NOT NULL,
  lon            REAL    NOT NULL,
  observed_at_ms INTEGER NOT NULL,
  severity       TEXT    NOT NULL,
  confidence     REAL    NOT NULL,
  evidence_ref   TEXT,
  pothole_id     INTEGER NOT NULL REFERENCES potholes (id)
);
CREATE TABLE IF NOT EXISTS status_events (
  seq         INTEGER PRIMARY KEY AUTOINCREMENT,
  pothole_id  INTEGER NOT NULL REFERENCES potholes (id),
  from_status TEXT    NOT NULL,
  to_status   TEXT    NOT NULL,
  session_id  TEXT
);
)sql";

constexpr const char* kRecordColumns =
    "id, lat, lon, severity, status, first_seen_ms, last_seen_ms, observation_count, "
    "evidence_frame_b64, road_meta";

[[noreturn]] void fail(sqlite3* db, std::string_view what) {
  throw Error(ErrorCode::kStorageFailure,
              fmt::format("{}: {}", what, db != nullptr ? sqlite3_errmsg(db) : "no handle"));
}

class Statement {
 public:
  Statement(sqlite3* db, std::string_view sql) : db_(db) {
    if (sqlite3_prepare_v2(db, sql.data(), static_cast<int>(sql.size()), &stmt_, nullptr) !=
        SQLITE_OK) {
      fail(db, "prepare");
    }
  }
  ~Statement() { sqlite3_finalize(stmt_); }
  Statement(const Statement&) = delete;
  Statement& operator=(const Statement&) = delete;

  Statement& bind(int i, std::int64_t v) {
    check(sqlite3_bind_int64(stmt_, i, v));
    return *this;
  }
  Statement& bind(int i, double v) {
    check(sqlite3_bind_double(stmt_, i, v));
    return *this;
  }
  Statement& bind(int i, std::string_view v) {
    check(sqlite3_bind_text(stmt_, i, v.data(), static_cast<int>(v.size()), SQLITE_TRANSIENT));
    return *this;
  }
  Statement& bind(int i, const std::optional<std::string>& v) {
    if (v) return bind(i, std::string_view(*v));
    check(sqlite3_bind_null(stmt_, i));
    return *this;
  }

  // True while rows remain.
  bool step() {
    const int rc = sqlite3_step(stmt_);
    if (rc == SQLITE_ROW) return true;
    if (rc == SQLITE_DONE) return false;
    fail(db_, "step");
  }

  void run() {
    while (step()) {
    }
  }

  void reset() {
    sqlite3_reset(stmt_);
    sqlite3_clear_bindings(stmt_);
  }

  std::int64_t int64(int col) const { return sqlite3_column_int64(stmt_, col); }
  double real(int col) const { return sqlite3_column_double(stmt_, col); }
  bool is_null(int col) const { return sqlite3_column_type(stmt_, col) == SQLITE_NULL; }
  std::string text(int col) const {
    const auto* p = sqlite3_column_text(stmt_, col);
    return p == nullptr ? std::string{}
                        : std::string(reinterpret_cast<const char*>(p),
                                      static_cast<std::size_t>(sqlite3_column_bytes(stmt_, col)));
  }

 private:
  void check(int rc) {
    if (rc != SQLITE_OK) fail(db_, "bind");
  }

  sqlite3* db_;
  sqlite3_stmt* stmt_ = nullptr;
};

void exec(sqlite3* db, const char* sql) {
  char* err = nullptr;
  if (sqlite3_exec(db, sql, nullptr, nullptr, &err) != SQLITE_OK) {
    std::string msg = err != nullptr ? err : "unknown";
    sqlite3_free(err);
    throw Error(ErrorCode::kStorageFailure, fmt::format("exec: {}", msg));
  }
}

std::int64_t to_ms(UtcTime t) { return t.time_since_epoch().count(); }
UtcTime from_ms(std::int64_t ms) { return UtcTime{Millis{ms}}; }

std::string meta_to_json(const std::map<std::string, std::string>& meta) {
  return nlohmann::json(meta).dump();
}

std::map<std::string, std::string> meta_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text, nullptr, false);
  std::map<std::string, std::string> out;
  if (!j.is_object()) return out;
  for (const auto& [k, v] : j.items()) {
    if (v.is_string()) out[k] = v.get<std::string>();
  }
  return out;
}

PotholeRecord read_record(const Statement& s) {
  PotholeRecord r;
  r.id = s.int64(0);
  r.coordinate = {s.real(1), s.real(2)};
  r.severity = parse_severity(s.text(3)).value_or(Severity::kLow);
  r.status = parse_status(s.text(4)).value_or(PotholeStatus::kOpen);
  r.first_seen = from_ms(s.int64(5));
  r.last_seen = from_ms(s.int64(6));
  r.observation_count = s.int64(7);
  if (!s.is_null(8)) r.evidence_frame_b64 = s.text(8);
  r.road_meta = meta_from_json(s.text(9));
  return r;
}

void sort_for_query(std::vector<PotholeRecord>& records) {
  std::sort(records.begin(), records.end(), [](const PotholeRecord& a, const PotholeRecord& b) {
    return a.last_seen > b.last_seen || (a.last_seen == b.last_seen && a.id < b.id);
  });
}

}  // namespace

void validate_bbox(const BBox& b) {
  const bool finite = std::isfinite(b.min_lat) && std::isfinite(b.min_lon) &&
                      std::isfinite(b.max_lat) && std::isfinite(b.max_lon);
  if (!finite || b.min_lat > b.max_lat || b.min_lon > b.max_lon || b.min_lat < -90.0 ||
      b.max_lat > 90.0 || b.min_lon < -180.0 || b.max_lon > 180.0) {
    throw Error(ErrorCode::kMalformedBBox,
                fmt::format("bbox ({}, {}, {}, {}) is not min_lat,min_lon,max_lat,max_lon",
                            b.min_lat, b.min_lon, b.max_lat, b.max_lon));
  }
}

struct Store::Handle {
  sqlite3* db = nullptr;

  Handle(const std::string& path, int flags) {
    if (sqlite3_open_v2(path.c_str(), &db, flags, nullptr) != SQLITE_OK) {
      std::string msg = db != nullptr ? sqlite3_errmsg(db) : "out of memory";
      sqlite3_close(db);
      throw Error(ErrorCode::kStorageFailure, fmt::format("open {}: {}", path, msg));
    }
    sqlite3_busy_timeout(db, 5000);
  }
  ~Handle() { sqlite3_close(db); }
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
};

Store::Store(std::string path) : path_(std::move(path)) {
  in_memory_ = path_ == ":memory:" || path_.empty();
  writer_ = std::make_unique<Handle>(in_memory_ ? ":memory:" : path_,
                                     SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE);
  if (!in_memory_) exec(writer_->db, "PRAGMA journal_mode = WAL;");
  exec(writer_->db, "PRAGMA foreign_keys = ON;");
  exec(writer_->db, kSchema);
}

Store::~Store() = default;

void Store::set_fault_hook(FaultHook hook) {
  std::lock_guard lock(write_mutex_);
  fault_hook_ = std::move(hook);
}

template <typename Fn>
auto Store::with_reader(Fn&& fn) const {
  if (in_memory_) {
    std::lock_guard lock(write_mutex_);
    return fn(writer_->db);
  }
  Handle reader(path_, SQLITE_OPEN_READONLY);
  return fn(reader.db);
}

std::vector<PotholeRecord> Store::snapshot_with(sqlite3* db) const {
  Statement s(db, fmt::format("SELECT {} FROM potholes ORDER BY id", kRecordColumns));
  std::vector<PotholeRecord> out;
  while (s.step()) out.push_back(read_record(s));
  return out;
}

std::vector<PotholeRecord> Store::snapshot() const {
  return with_reader([this](sqlite3* db) { return snapshot_with(db); });
}

std::optional<PotholeRecord> Store::get(PotholeId id) const {
  return with_reader([id](sqlite3* db) -> std::optional<PotholeRecord> {
    Statement s(db, fmt::format("SELECT {} FROM potholes WHERE id = ?", kRecordColumns));
    s.bind(1, static_cast<std::int64_t>(id));
    if (!s.step()) return std::nullopt;
    return read_record(s);
  });
}

std::vector<PotholeRecord> Store::query(const RegistryQuery& q) const {
  validate_bbox(q.bbox);
  auto records = with_reader([&q](sqlite3* db) {
    Statement s(db, fmt::format("SELECT {} FROM potholes WHERE lat BETWEEN ? AND ? "
                                "AND lon BETWEEN ? AND ?",
                                kRecordColumns));
    s.bind(1, q.bbox.min_lat).bind(2, q.bbox.max_lat).bind(3, q.bbox.min_lon).bind(4, q.bbox.max_lon);
    std::vector<PotholeRecord> out;
    while (s.step()) out.push_back(read_record(s));
    return out;
  });
  std::erase_if(records, [&q](const PotholeRecord& r) {
    if (!q.bbox.contains(r.coordinate)) return true;
    if (q.from && r.last_seen < *q.from) return true;
    if (q.to && r.first_seen > *q.to) return true;
    if (q.statuses && !q.statuses->contains(r.status)) return true;
    if (q.road_type) {
      auto it = r.road_meta.find("road_type");
      if (it == r.road_meta.end() || it->second != *q.road_type) return true;
    }
    return false;
  });
  sort_for_query(records);
  return records;
}

std::vector<SessionInfo> Store::sessions() const {
  return with_reader([](sqlite3* db) {
    Statement s(db,
                "SELECT id, uploaded_at_ms, frame_count, detection_count, cluster_count, "
                "calibrated_offset_ms FROM sessions ORDER BY id");
    std::vector<SessionInfo> out;
    while (s.step()) {
      out.push_back({s.text(0), from_ms(s.int64(1)), s.int64(2), s.int64(3), s.int64(4),
                     Millis{s.int64(5)}});
    }
    return out;
  });
}

std::string Store::next_session_id_locked() const {
  Statement s(writer_->db, "SELECT COUNT(*) FROM sessions");
  s.step();
  std::int64_t n = s.int64(0) + 1;
  for (;; ++n) {
    std::string id = fmt::format("s{:06d}", n);
    Statement probe(writer_->db, "SELECT 1 FROM sessions WHERE id = ?");
    probe.bind(1, std::string_view(id));
    if (!probe.step()) return id;
  }
}

CommitResult Store::ingest_session(SessionInfo session, std::span<const PotholeCluster> clusters,
                                   const GpsTrack& track, const ReconcileConfig& cfg,
                                   const SessionExtras& extras) {
  std::lock_guard lock(write_mutex_);
  if (session.id.empty()) session.id = next_session_id_locked();
  const auto existing = snapshot_with(writer_->db);
  const auto plan = reconcile(existing, track, clusters, cfg);
  CommitResult result;
  result.delta = upsert_locked(session, clusters, plan, extras);
  result.session_id = session.id;
  return result;
}

RegistryDelta Store::upsert_clusters(const SessionInfo& session,
                                     std::span<const PotholeCluster> clusters,
                                     const ReconcileResult& plan, const SessionExtras& extras) {
  std::lock_guard lock(write_mutex_);
  if (session.id.empty()) {
    SessionInfo named = session;
    named.id = next_session_id_locked();
    return upsert_locked(named, clusters, plan, extras);
  }
  return upsert_locked(session, clusters, plan, extras);
}

RegistryDelta Store::upsert_locked(const SessionInfo& session,
                                   std::span<const PotholeCluster> clusters,
                                   const ReconcileResult& plan, const SessionExtras& extras) {
  if (plan.matches.size() != clusters.size()) {
    throw std::invalid_argument("reconcile plan does not cover every cluster");
  }
  sqlite3* db = writer_->db;
  auto checkpoint = [this](std::string_view stage) {
    if (fault_hook_) fault_hook_(stage);
  };

  RegistryDelta delta;
  exec(db, "BEGIN IMMEDIATE;");
  try {
    checkpoint("begin");
    Statement(db,
              "INSERT INTO sessions (id, uploaded_at_ms, frame_count, detection_count, "
              "cluster_count, calibrated_offset_ms) VALUES (?, ?, ?, ?, ?, ?)")
        .bind(1, std::string_view(session.id))
        .bind(2, to_ms(session.uploaded_at))
        .bind(3, session.frame_count)
        .bind(4, session.detection_count)
        .bind(5, session.cluster_count)
        .bind(6, static_cast<std::int64_t>(session.calibrated_offset.count()))
        .run();
    checkpoint("session");

    std::set<PotholeId> updated;
    for (std::size_t i = 0; i < clusters.size(); ++i) {
      const auto& c = clusters[i];
      const auto& evidence_ref = c.evidence_member().evidence_frame;
      std::optional<std::string> evidence;
      if (evidence_ref) {
        if (auto it = extras.evidence_b64.find(*evidence_ref); it != extras.evidence_b64.end()) {
          evidence = it->second;
        }
      }
      const auto members = static_cast<std::int64_t>(c.members.size());
      PotholeId id = 0;
      if (const auto& match = plan.matches[i]) {
        id = *match;
        Statement cur(db, fmt::format("SELECT {} FROM potholes WHERE id = ?", kRecordColumns));
        cur.bind(1, static_cast<std::int64_t>(id));
        if (!cur.step()) {
          throw Error(ErrorCode::kStorageFailure,
                      fmt::format("plan references missing record {}", id));
        }
        PotholeRecord r = read_record(cur);
        r.first_seen = std::min(r.first_seen, c.first_seen);
        r.last_seen = std::max(r.last_seen, c.last_seen);
        r.observation_count += members;
        r.severity = std::max(r.severity, c.representative_severity);
        if (!r.evidence_frame_b64) r.evidence_frame_b64 = evidence;
        for (const auto& [k, v] : extras.road_meta) r.road_meta[k] = v;
        Statement(db,
                  "UPDATE potholes SET severity = ?, first_seen_ms = ?, last_seen_ms = ?, "
                  "observation_count = ?, evidence_frame_b64 = ?, road_meta = ? WHERE id = ?")
            .bind(1, to_string(r.severity))
            .bind(2, to_ms(r.first_seen))
            .bind(3, to_ms(r.last_seen))
            .bind(4, r.observation_count)
            .bind(5, r.evidence_frame_b64)
            .bind(6, std::string_view(meta_to_json(r.road_meta)))
            .bind(7, static_cast<std::int64_t>(id))
            .run();
        updated.insert(id);
      } else {
        Statement(db,
                  "INSERT INTO potholes (lat, lon, severity, status, first_seen_ms, "
                  "last_seen_ms, observation_count, evidence_frame_b64, road_meta) "
                  "VALUES (?, ?, ?, 'open', ?, ?, ?, ?, ?)")
            .bind(1, c.anchor.lat)
            .bind(2, c.anchor.lon)
            .bind(3, to_string(c.representative_severity))
            .bind(4, to_ms(c.first_seen))
            .bind(5, to_ms(c.last_seen))
            .bind(6, members)
            .bind(7, evidence)
            .bind(8, std::string_view(meta_to_json(extras.road_meta)))
            .run();
        id = sqlite3_last_insert_rowid(db);
        ++delta.created;
      }
      checkpoint(fmt::format("cluster:{}", i));

      Statement obs(db,
                    "INSERT INTO observations (session_id, frame_index, lat, lon, "
                    "observed_at_ms, severity, confidence, evidence_ref, pothole_id) "
                    "VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?)");
      for (const auto& m : c.members) {
        obs.reset();
        obs.bind(1, std::string_view(session.id))
            .bind(2, static_cast<std::int64_t>(m.frame_index))
            .bind(3, m.coordinate.lat)
            .bind(4, m.coordinate.lon)
            .bind(5, to_ms(m.observed_at_utc))
            .bind(6, to_string(m.severity))
            .bind(7, m.confidence)
            .bind(8, m.evidence_frame)
            .bind(9, static_cast<std::int64_t>(id))
            .run();
      }
      checkpoint(fmt::format("observations:{}", i));
    }
    delta.updated = static_cast<int>(updated.size());

    for (std::size_t i = 0; i < plan.transitions.size(); ++i) {
      const auto& t = plan.transitions[i];
      Statement cur(db, "SELECT status FROM potholes WHERE id = ?");
      cur.bind(1, static_cast<std::int64_t>(t.record_id));
      if (!cur.step()) {
        throw Error(ErrorCode::kStorageFailure,
                    fmt::format("transition references missing record {}", t.record_id));
      }
      const auto current = parse_status(cur.text(0));
      if (current != t.from || !is_legal_transition(t.from, t.to)) {
        throw Error(ErrorCode::kStorageFailure,
                    fmt::format("stale or illegal transition {} -> {} for record {}",
                                to_string(t.from), to_string(t.to), t.record_id));
      }
      Statement(db, "UPDATE potholes SET status = ? WHERE id = ?")
          .bind(1, to_string(t.to))
          .bind(2, static_cast<std::int64_t>(t.record_id))
          .run();
      Statement(db,
                "INSERT INTO status_events (pothole_id, from_status, to_status, session_id) "
                "VALUES (?, ?, ?, ?)")
          .bind(1, static_cast<std::int64_t>(t.record_id))
          .bind(2, to_string(t.from))
          .bind(3, to_string(t.to))
          .bind(4, std::string_view(session.id))
          .run();
      if (t.to == PotholeStatus::kFixed) ++delta.fixed;
      if (t.to == PotholeStatus::kReopened) ++delta.reopened;
      checkpoint(fmt::format("transition:{}", i));
    }

    checkpoint("commit");
    exec(db, "COMMIT;");
  } catch (const std::exception& e) {
    sqlite3_exec(db, "ROLLBACK;", nullptr, nullptr, nullptr);
    if (const auto* err = dynamic_cast<const Error*>(&e);
        err != nullptr && err->code() == ErrorCode::kStorageFailure) {
      throw;
    }
    throw Error(ErrorCode::kStorageFailure, fmt::format("upsert aborted: {}", e.what()));
  }
  return delta;
}

PotholeRecord Store::set_status(PotholeId id, PotholeStatus status) {
  std::lock_guard lock(write_mutex_);
  sqlite3* db = writer_->db;
  exec(db, "BEGIN IMMEDIATE;");
  try {
    Statement cur(db, fmt::format("SELECT {} FROM potholes WHERE id = ?", kRecordColumns));
    cur.bind(1, static_cast<std::int64_t>(id));
    if (!cur.step()) {
      throw Error(ErrorCode::kUnknownPothole, fmt::format("no pothole with id {}", id));
    }
    PotholeRecord r = read_record(cur);
    if (!is_legal_transition(r.status, status)) {
      throw Error(ErrorCode::kIllegalTransition,
                  fmt::format("cannot move pothole {} from {} to {}", id, to_string(r.status),
                              to_string(status)));
    }
    Statement(db, "UPDATE potholes SET status = ? WHERE id = ?")
        .bind(1, to_string(status))
        .bind(2, static_cast<std::int64_t>(id))
        .run();
    Statement(db,
              "INSERT INTO status_events (pothole_id, from_status, to_status, session_id) "
              "VALUES (?, ?, ?, NULL)")
        .bind(1, static_cast<std::int64_t>(id))
        .bind(2, to_string(r.status))
        .bind(3, to_string(status))
        .run();
    exec(db, "COMMIT;");
    r.status = status;
    return r;
  } catch (...) {
    sqlite3_exec(db, "ROLLBACK;", nullptr, nullptr, nullptr);
    throw;
  }
}

}  // namespace roadwatch
