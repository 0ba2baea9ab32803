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

#include "roadwatch/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace roadwatch {

namespace {

double to_double(const char* name, const char* value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != std::string(value).size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error(fmt::format("{}: '{}' is not a number", name, value));
  }
}

}  // namespace

EngineConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(fmt::format("cannot open config {}", path));
  std::stringstream buf;
  buf << in.rdbuf();
  const auto j = nlohmann::json::parse(buf.str(), nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw std::runtime_error(fmt::format("config {} is not a JSON object", path));
  }

  EngineConfig cfg;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "store_path") cfg.store_path = v.get<std::string>();
      else if (key == "bind_address") cfg.bind_address = v.get<std::string>();
      else if (key == "port") cfg.port = v.get<int>();
      else if (key == "radius_m") cfg.radius_m = v.get<double>();
      else if (key == "corridor_m") cfg.corridor_m = v.get<double>();
      else if (key == "severity_medium_area") cfg.severity.medium_area = v.get<double>();
      else if (key == "severity_high_area") cfg.severity.high_area = v.get<double>();
      else if (key == "confidence_threshold") cfg.confidence_threshold = v.get<double>();
      else if (key == "nominal_fps") cfg.nominal_fps = v.get<double>();
      else if (key == "max_upload_bytes") cfg.max_upload_bytes = v.get<std::size_t>();
      else if (key == "max_evidence_bytes") cfg.max_evidence_bytes = v.get<std::size_t>();
      else if (key == "offset_s") cfg.offset_s = v.is_null() ? std::nullopt : std::optional(v.get<double>());
      else if (key == "auth_token") cfg.auth_token = v.get<std::string>();
      else if (key == "static_dir") cfg.static_dir = v.get<std::string>();
      else throw std::runtime_error(fmt::format("unknown config key '{}'", key));
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(fmt::format("config {}: {}", path, e.what()));
  }
  return cfg;
}

void apply_env_overrides(EngineConfig& cfg,
                         const std::function<const char*(const char*)>& getenv) {
  auto str = [&](const char* name, std::string& field) {
    if (const char* v = getenv(name)) field = v;
  };
  auto num = [&](const char* name, double& field) {
    if (const char* v = getenv(name)) field = to_double(name, v);
  };
  auto size = [&](const char* name, std::size_t& field) {
    if (const char* v = getenv(name)) {
      const double d = to_double(name, v);
      if (d < 0 || std::floor(d) != d) {
        throw std::runtime_error(fmt::format("{}: '{}' is not a byte count", name, v));
      }
      field = static_cast<std::size_t>(d);
    }
  };
  str("ROADWATCH_STORE", cfg.store_path);
  str("ROADWATCH_BIND", cfg.bind_address);
  if (const char* v = getenv("ROADWATCH_PORT")) {
    cfg.port = static_cast<int>(to_double("ROADWATCH_PORT", v));
  }
  num("ROADWATCH_RADIUS_M", cfg.radius_m);
  num("ROADWATCH_CORRIDOR_M", cfg.corridor_m);
  num("ROADWATCH_SEVERITY_MEDIUM_AREA", cfg.severity.medium_area);
  num("ROADWATCH_SEVERITY_HIGH_AREA", cfg.severity.high_area);
  num("ROADWATCH_CONFIDENCE_THRESHOLD", cfg.confidence_threshold);
  num("ROADWATCH_NOMINAL_FPS", cfg.nominal_fps);
  size("ROADWATCH_MAX_UPLOAD_BYTES", cfg.max_upload_bytes);
  size("ROADWATCH_MAX_EVIDENCE_BYTES", cfg.max_evidence_bytes);
  if (const char* v = getenv("ROADWATCH_OFFSET_S")) cfg.offset_s = to_double("ROADWATCH_OFFSET_S", v);
  str("ROADWATCH_AUTH_TOKEN", cfg.auth_token);
  str("ROADWATCH_STATIC_DIR", cfg.static_dir);
}

void validate_config(const EngineConfig& cfg) {
  auto positive = [](const char* name, double v) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument(fmt::format("{} must be positive, got {}", name, v));
    }
  };
  positive("radius_m", cfg.radius_m);
  positive("corridor_m", cfg.corridor_m);
  positive("severity_medium_area", cfg.severity.medium_area);
  positive("severity_high_area", cfg.severity.high_area);
  positive("confidence_threshold", cfg.confidence_threshold);
  positive("nominal_fps", cfg.nominal_fps);
  positive("max_upload_bytes", static_cast<double>(cfg.max_upload_bytes));
  positive("max_evidence_bytes", static_cast<double>(cfg.max_evidence_bytes));
  if (cfg.port < 0 || cfg.port > 65535) {
    throw std::invalid_argument(fmt::format("port out of range: {}", cfg.port));
  }
  if (cfg.severity.medium_area > cfg.severity.high_area) {
    throw std::invalid_argument("severity_medium_area must not exceed severity_high_area");
  }
  if (cfg.offset_s && !std::isfinite(*cfg.offset_s)) {
    throw std::invalid_argument("offset_s must be finite");
  }
}

}  // namespace roadwatch
