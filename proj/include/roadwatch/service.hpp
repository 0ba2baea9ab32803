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

// HTTP API:
//   POST  /api/sessions              multipart: frames, detections, gps (+ evidence,
//                                    road_meta, offset_s, gps_format)
//   GET   /api/potholes?bbox=min_lat,min_lon,max_lat,max_lon[&from=&to=&status=&road_type=]
//   GET   /api/potholes/{id}
//   PATCH /api/potholes/{id}/status  {"status": "fixed"}
//   GET   /api/health
// Errors always carry {"error": {"code": ..., "message": ...}}.

#pragma once

#include <map>
#include <memory>
#include <string>

#include "roadwatch/config.hpp"
#include "roadwatch/store.hpp"

namespace roadwatch {

/// Builds a registry query from GET /api/potholes parameters. Throws
/// Error(kMalformedBBox) for a missing or malformed bbox and
/// std::invalid_argument for other malformed parameters.
RegistryQuery parse_pothole_query(const std::multimap<std::string, std::string>& params);

class ApiServer {
 public:
  ApiServer(EngineConfig cfg, Store& store);
  ~ApiServer();

  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  /// Binds to an ephemeral port and returns it, or -1.
  int bind_to_any_port(const std::string& host);
  bool bind(const std::string& host, int port);
  /// Serves until stop(); blocks the calling thread.
  bool listen_after_bind();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace roadwatch
