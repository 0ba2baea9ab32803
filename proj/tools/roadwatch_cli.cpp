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

// roadwatch command-line front end.
//
// Exit codes: 0 success, 2 usage, 3 rejected input data, 4 storage failure.

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "roadwatch/geojson.hpp"
#include "roadwatch/manifest.hpp"
#include "roadwatch/pipeline.hpp"
#include "roadwatch/service.hpp"
#include "roadwatch/store.hpp"

namespace fs = std::filesystem;
using namespace roadwatch;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitStorage = 4;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in || fs::is_directory(path)) throw UsageError(fmt::format("cannot read {}", path));
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

GpsLogFormat resolve_gps_format(const std::string& flag, const std::string& path,
                                const std::string& bytes) {
  if (flag == "csv") return GpsLogFormat::kCsv;
  if (flag == "gpx") return GpsLogFormat::kGpx;
  return guess_gps_format(fs::path(path).filename().string(), bytes);
}

// Evidence references resolve relative to the manifest's directory. Missing
// files are left out and reported by the pipeline.
std::map<std::string, std::string> load_evidence(const std::string& frames_path,
                                                 const std::string& frames_jsonl) {
  std::map<std::string, std::string> out;
  std::vector<ManifestRecord> manifest;
  try {
    manifest = parse_frame_manifest(frames_jsonl);
  } catch (const Error&) {
    return out;
  }
  const fs::path base = fs::path(frames_path).parent_path();
  for (const auto& r : manifest) {
    if (!r.evidence || out.contains(*r.evidence)) continue;
    fs::path p(*r.evidence);
    if (p.is_relative()) p = base / p;
    std::ifstream in(p, std::ios::binary);
    if (!in) continue;
    std::ostringstream buf;
    buf << in.rdbuf();
    out.emplace(*r.evidence, buf.str());
  }
  return out;
}

struct Options {
  std::string config_path;
  std::string store;
  std::string frames, detections, gps, gps_format = "auto";
  std::optional<double> offset_s;
  std::vector<std::string> road_meta;
  std::string out;
  std::vector<std::string> statuses;
  std::string bind;
  int port = -1;
};

EngineConfig effective_config(const Options& o) {
  EngineConfig cfg = o.config_path.empty() ? EngineConfig{} : load_config_file(o.config_path);
  apply_env_overrides(cfg, [](const char* name) { return std::getenv(name); });
  if (!o.store.empty()) cfg.store_path = o.store;
  if (!o.bind.empty()) cfg.bind_address = o.bind;
  if (o.port >= 0) cfg.port = o.port;
  validate_config(cfg);
  return cfg;
}

int cmd_ingest(const Options& o) {
  const EngineConfig cfg = effective_config(o);
  SessionInputs in;
  in.frames_jsonl = read_file(o.frames);
  in.detections_jsonl = read_file(o.detections);
  in.gps_log = read_file(o.gps);
  in.gps_format = resolve_gps_format(o.gps_format, o.gps, in.gps_log);
  in.evidence_images = load_evidence(o.frames, in.frames_jsonl);
  if (o.offset_s) in.offset = ClockOffset::from_seconds(*o.offset_s);
  for (const auto& kv : o.road_meta) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw UsageError(fmt::format("--road-meta expects key=value, got '{}'", kv));
    }
    in.road_meta[kv.substr(0, eq)] = kv.substr(eq + 1);
  }

  try {
    Store store(cfg.store_path);
    const auto outcome = run_session(in, cfg, store);
    const auto& d = outcome.delta;
    const auto& diag = outcome.diagnostics;
    fmt::print("session={} created={} updated={} fixed={} reopened={}\n", outcome.session_id,
               d.created, d.updated, d.fixed, d.reopened);
    fmt::print("offset_s={} offset_source={} observations={} clusters={}\n",
               outcome.calibration.offset.seconds(), to_string(outcome.calibration.source),
               outcome.observations, outcome.clusters);
    fmt::print("frames={} repaired={} unparsable={} invalid_dates={} gps_fixes={}\n",
               diag.frames, diag.repaired_frames, diag.unparsable_timestamps, diag.invalid_dates,
               diag.gps_fixes);
    fmt::print("detections={} accepted={} low_confidence={} rejected={} geotag_dropped={}\n",
               diag.detection_records, diag.detections_accepted, diag.dropped_low_confidence,
               diag.rejected_detections.size(), diag.geotag_dropped);
    for (const auto& r : diag.rejected_detections) {
      fmt::print(stderr, "detections line {}: {}\n", r.line, r.message);
    }
    return kExitOk;
  } catch (const SessionRejected& e) {
    for (const auto& p : e.errors()) {
      fmt::print(stderr, "rejected {}: {}: {}\n", p.part, to_string(p.code), p.message);
    }
    const auto report = ingest_detections(in.detections_jsonl, cfg.confidence_threshold);
    fmt::print(stderr, "rejected={}\n", report.rejected.size());
    return kExitData;
  }
}

int cmd_export(const Options& o) {
  const EngineConfig cfg = effective_config(o);
  if (!fs::exists(cfg.store_path)) {
    throw UsageError(fmt::format("store {} does not exist", cfg.store_path));
  }
  RegistryQuery q;
  if (!o.statuses.empty()) {
    std::set<PotholeStatus> wanted;
    for (const auto& s : o.statuses) {
      auto parsed = parse_status(s);
      if (!parsed) throw UsageError(fmt::format("unknown status '{}'", s));
      wanted.insert(*parsed);
    }
    q.statuses = std::move(wanted);
  }
  Store store(cfg.store_path);
  const std::string body = render_geojson(store.query(q));
  std::ofstream out(o.out, std::ios::binary | std::ios::trunc);
  out << body;
  out.close();
  if (!out) throw Error(ErrorCode::kStorageFailure, fmt::format("cannot write {}", o.out));
  fmt::print("wrote {} bytes to {}\n", body.size(), o.out);
  return kExitOk;
}

int cmd_calibrate(const Options& o) {
  const EngineConfig cfg = effective_config(o);
  const std::string frames = read_file(o.frames);
  const std::string gps = read_file(o.gps);
  try {
    const auto manifest = parse_frame_manifest(frames);
    const auto timeline = build_timeline(overlay_texts(manifest), cfg.nominal_fps);
    const auto track = parse_gps_log(gps, resolve_gps_format(o.gps_format, o.gps, gps));
    const auto result = calibrate_session(manifest, timeline, track);
    fmt::print("{}\n", result.offset.seconds());
    std::fflush(stdout);
    fmt::print(stderr, "samples={} source={}\n", result.samples, to_string(result.source));
    return kExitOk;
  } catch (const Error& e) {
    fmt::print(stderr, "{}: {}\n", e.code_name(), e.what());
    return kExitData;
  }
}

ApiServer* g_server = nullptr;

int cmd_serve(const Options& o) {
  const EngineConfig cfg = effective_config(o);
  Store store(cfg.store_path);
  ApiServer server(cfg, store);
  int port = cfg.port;
  if (port == 0) {
    port = server.bind_to_any_port(cfg.bind_address);
    if (port < 0) throw UsageError(fmt::format("cannot bind {}", cfg.bind_address));
  } else if (!server.bind(cfg.bind_address, port)) {
    throw UsageError(fmt::format("cannot bind {}:{}", cfg.bind_address, port));
  }
  fmt::print("listening on http://{}:{}\n", cfg.bind_address, port);
  std::fflush(stdout);
  g_server = &server;
  std::signal(SIGINT, [](int) { if (g_server) g_server->stop(); });
  std::signal(SIGTERM, [](int) { if (g_server) g_server->stop(); });
  server.listen_after_bind();
  g_server = nullptr;
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"roadwatch: pothole registry engine"};
  app.require_subcommand(1, 1);
  Options o;
  app.add_option("--config", o.config_path, "JSON config file")->check(CLI::ExistingFile);

  auto* ingest = app.add_subcommand("ingest", "Process one recording session into the store");
  ingest->add_option("--frames", o.frames, "Frame manifest (JSON Lines)")->required();
  ingest->add_option("--detections", o.detections, "Detections (JSON Lines)")->required();
  ingest->add_option("--gps", o.gps, "GPS log (CSV or GPX)")->required();
  ingest->add_option("--gps-format", o.gps_format, "csv, gpx or auto")
      ->check(CLI::IsMember({"csv", "gpx", "auto"}));
  ingest->add_option("--offset-s", o.offset_s, "Overlay minus UTC, seconds");
  ingest->add_option("--store", o.store, "Store path");
  ingest->add_option("--road-meta", o.road_meta, "Road metadata key=value (repeatable)");

  auto* serve = app.add_subcommand("serve", "Run the HTTP API");
  serve->add_option("--store", o.store, "Store path");
  serve->add_option("--bind", o.bind, "Bind address");
  serve->add_option("--port", o.port, "Port (0 picks a free one)")->check(CLI::Range(0, 65535));

  auto* exp = app.add_subcommand("export", "Write the registry as GeoJSON");
  exp->add_option("--store", o.store, "Store path");
  exp->add_option("--out", o.out, "Output .geojson path")->required();
  exp->add_option("--status", o.statuses, "Status filter (repeatable or comma separated)")
      ->delimiter(',');

  auto* cal = app.add_subcommand("calibrate", "Print the overlay clock offset in seconds");
  cal->add_option("--frames", o.frames, "Frame manifest (JSON Lines)")->required();
  cal->add_option("--gps", o.gps, "GPS log (CSV or GPX)")->required();
  cal->add_option("--gps-format", o.gps_format, "csv, gpx or auto")
      ->check(CLI::IsMember({"csv", "gpx", "auto"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*ingest) return cmd_ingest(o);
    if (*exp) return cmd_export(o);
    if (*cal) return cmd_calibrate(o);
    if (*serve) return cmd_serve(o);
  } catch (const UsageError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitUsage;
  } catch (const Error& e) {
    fmt::print(stderr, "error: {}: {}\n", e.code_name(), e.what());
    return e.code() == ErrorCode::kStorageFailure ? kExitStorage : kExitData;
  } catch (const std::exception& e) {
    // Config file and environment problems.
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitUsage;
  }
  return kExitUsage;
}
