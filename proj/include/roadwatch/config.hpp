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

#include <cstddef>
#include <functional>
#include <optional>
#include <string>

#include "roadwatch/detection.hpp"
#include "roadwatch/geotag_dedup.hpp"

namespace roadwatch {

/// Settings shared by the CLI and the HTTP service.
struct EngineConfig {
  std::string store_path = "roadwatch.db";
  std::string bind_address = "127.0.0.1";
  int port = 8080;
  double radius_m = 2.5;
  double corridor_m = 10.0;
  SeverityThresholds severity;
  double confidence_threshold = kDefaultConfidenceThreshold;
  double nominal_fps = 30.0;
  std::size_t max_upload_bytes = 64u * 1024u * 1024u;
  std::size_t max_evidence_bytes = 256u * 1024u;
  std::optional<double> offset_s;  // unset: calibrate per session
  std::string auth_token;          // empty: mutating routes are open
  std::string static_dir;          // optional UI assets served at /

  ReconcileConfig reconcile_config() const {
    ReconcileConfig cfg;
    cfg.corridor_m = corridor_m;
    cfg.dedup.radius_m = radius_m;
    return cfg;
  }
};

/// Reads a JSON object whose keys mirror the EngineConfig fields
/// ("severity_medium_area" and "severity_high_area" for the thresholds).
/// Unknown keys are rejected. Throws std::runtime_error.
EngineConfig load_config_file(const std::string& path);

/// Applies ROADWATCH_* environment overrides (ROADWATCH_STORE,
/// ROADWATCH_PORT, ...). `getenv` is injectable for tests.
void apply_env_overrides(EngineConfig& cfg,
                         const std::function<const char*(const char*)>& getenv);

/// Throws std::invalid_argument when a numeric setting is not positive.
void validate_config(const EngineConfig& cfg);

}  // namespace roadwatch
