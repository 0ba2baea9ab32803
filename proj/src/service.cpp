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

#include "roadwatch/service.hpp"

#include <charconv>
#include <cmath>
#include <chrono>
#include <filesystem>
#include <set>
#include <vector>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "roadwatch/geojson.hpp"
#include "roadwatch/manifest.hpp"
#include "roadwatch/pipeline.hpp"
#include "roadwatch/time.hpp"

namespace roadwatch {

namespace {

constexpr const char* kJson = "application/json";
constexpr const char* kGeoJson = "application/geo+json";

void send_error(httplib::Response& res, int status, std::string_view code,
                std::string_view message, nlohmann::ordered_json parts = nullptr) {
  nlohmann::ordered_json body;
  body["error"]["code"] = code;
  body["error"]["message"] = message;
  if (!parts.is_null()) body["error"]["parts"] = std::move(parts);
  res.status = status;
  res.set_content(body.dump(), kJson);
}

std::string_view default_code(int status) {
  switch (status) {
    case 400: return "BadRequest";
    case 401: return "Unauthorized";
    case 404: return "NotFound";
    case 405: return "MethodNotAllowed";
    case 409: return "Conflict";
    case 413: return "PayloadTooLarge";
    default: return status >= 500 ? "InternalError" : "Error";
  }
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::optional<double> to_number(std::string_view s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

const std::string* param(const std::multimap<std::string, std::string>& params,
                         const std::string& key) {
  auto it = params.find(key);
  return it == params.end() ? nullptr : &it->second;
}

std::optional<UtcTime> parse_time_param(const std::string& value, bool end_of_day) {
  if (auto t = parse_iso8601(value)) return t;
  if (auto d = parse_iso_date(value)) {
    return end_of_day ? *d + std::chrono::days{1} - Millis{1} : *d;
  }
  return std::nullopt;
}

std::string basename_of(std::string_view path) {
  return std::filesystem::path(std::string(path)).filename().string();
}

}  // namespace

RegistryQuery parse_pothole_query(const std::multimap<std::string, std::string>& params) {
  RegistryQuery q;
  const std::string* bbox = param(params, "bbox");
  if (bbox == nullptr) throw Error(ErrorCode::kMalformedBBox, "bbox parameter is required");
  const auto parts = split(*bbox, ',');
  std::vector<double> v;
  for (auto p : parts) {
    auto n = to_number(p);
    if (!n) break;
    v.push_back(*n);
  }
  if (parts.size() != 4 || v.size() != 4) {
    throw Error(ErrorCode::kMalformedBBox,
                fmt::format("bbox '{}' is not min_lat,min_lon,max_lat,max_lon", *bbox));
  }
  q.bbox = {v[0], v[1], v[2], v[3]};
  validate_bbox(q.bbox);

  if (const std::string* from = param(params, "from"); from != nullptr && !from->empty()) {
    q.from = parse_time_param(*from, false);
    if (!q.from) throw std::invalid_argument(fmt::format("from '{}' is not a date", *from));
  }
  if (const std::string* to = param(params, "to"); to != nullptr && !to->empty()) {
    q.to = parse_time_param(*to, true);
    if (!q.to) throw std::invalid_argument(fmt::format("to '{}' is not a date", *to));
  }
  if (const std::string* status = param(params, "status"); status != nullptr && !status->empty()) {
    std::set<PotholeStatus> wanted;
    for (auto s : split(*status, ',')) {
      auto parsed = parse_status(s);
      if (!parsed) throw std::invalid_argument(fmt::format("unknown status '{}'", s));
      wanted.insert(*parsed);
    }
    q.statuses = std::move(wanted);
  }
  if (const std::string* road = param(params, "road_type"); road != nullptr && !road->empty()) {
    q.road_type = *road;
  }
  return q;
}

struct ApiServer::Impl {
  EngineConfig cfg;
  Store& store;
  httplib::Server server;

  Impl(EngineConfig c, Store& s) : cfg(std::move(c)), store(s) { install(); }

  bool authorized(const httplib::Request& req, httplib::Response& res) const {
    if (cfg.auth_token.empty() || req.get_header_value("X-Api-Token") == cfg.auth_token) {
      return true;
    }
    send_error(res, 401, "Unauthorized", "missing or wrong X-Api-Token header");
    return false;
  }

  void install() {
    server.set_payload_max_length(cfg.max_upload_bytes);
    server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (!res.body.empty()) return httplib::Server::HandlerResponse::Unhandled;
      send_error(res, res.status, default_code(res.status),
                 res.status == 413 ? "request exceeds the upload size limit"
                                   : httplib::status_message(res.status));
      return httplib::Server::HandlerResponse::Handled;
    });
    server.set_exception_handler(
        [](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
          try {
            std::rethrow_exception(ep);
          } catch (const Error& e) {
            send_error(res, 500, e.code_name(), e.what());
          } catch (const std::exception& e) {
            send_error(res, 500, "InternalError", e.what());
          }
        });
    if (!cfg.static_dir.empty()) server.set_mount_point("/", cfg.static_dir);

    server.Get("/api/health", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"status":"ok"})", kJson);
    });
    server.Post("/api/sessions", [this](const httplib::Request& req, httplib::Response& res) {
      post_session(req, res);
    });
    server.Get("/api/potholes", [this](const httplib::Request& req, httplib::Response& res) {
      get_potholes(req, res);
    });
    server.Get(R"(/api/potholes/(\d+))",
               [this](const httplib::Request& req, httplib::Response& res) {
                 const auto id = std::stoll(req.matches[1]);
                 auto r = store.get(id);
                 if (!r) {
                   send_error(res, 404, "UnknownPothole", fmt::format("no pothole {}", id));
                   return;
                 }
                 res.set_content(render_feature(*r), kGeoJson);
               });
    server.Patch(R"(/api/potholes/(\d+)/status)",
                 [this](const httplib::Request& req, httplib::Response& res) {
                   patch_status(req, res);
                 });
  }

  void post_session(const httplib::Request& req, httplib::Response& res) {
    if (!authorized(req, res)) return;
    if (!req.is_multipart_form_data()) {
      send_error(res, 400, "BadRequest", "expected multipart/form-data");
      return;
    }
    std::vector<std::string> missing;
    for (const char* part : {"frames", "detections", "gps"}) {
      if (!req.has_file(part)) missing.emplace_back(part);
    }
    if (!missing.empty()) {
      nlohmann::ordered_json parts = nlohmann::ordered_json::array();
      for (const auto& m : missing) {
        parts.push_back({{"part", m}, {"code", "MissingPart"}, {"message", "part is required"}});
      }
      send_error(res, 400, "MissingPart",
                 fmt::format("missing required part(s): {}", fmt::join(missing, ", ")),
                 std::move(parts));
      return;
    }

    SessionInputs in;
    in.frames_jsonl = req.get_file_value("frames").content;
    in.detections_jsonl = req.get_file_value("detections").content;
    const auto gps = req.get_file_value("gps");
    in.gps_log = gps.content;
    in.gps_format = guess_gps_format(gps.filename, gps.content);
    if (req.has_file("gps_format")) {
      const auto f = req.get_file_value("gps_format").content;
      if (f == "csv") {
        in.gps_format = GpsLogFormat::kCsv;
      } else if (f == "gpx") {
        in.gps_format = GpsLogFormat::kGpx;
      } else {
        send_error(res, 400, "BadRequest", fmt::format("gps_format '{}' is not csv or gpx", f));
        return;
      }
    }
    if (req.has_file("offset_s")) {
      const auto text = req.get_file_value("offset_s").content;
      auto v = to_number(text);
      if (!v || !std::isfinite(*v)) {
        send_error(res, 400, "BadRequest", fmt::format("offset_s '{}' is not a number", text));
        return;
      }
      in.offset = ClockOffset::from_seconds(*v);
    }
    if (req.has_file("road_meta")) {
      const auto j = nlohmann::json::parse(req.get_file_value("road_meta").content, nullptr, false);
      if (j.is_discarded() || !j.is_object()) {
        send_error(res, 400, "BadRequest", "road_meta must be a JSON object of strings");
        return;
      }
      for (const auto& [k, v] : j.items()) {
        if (!v.is_string()) {
          send_error(res, 400, "BadRequest", fmt::format("road_meta.{} must be a string", k));
          return;
        }
        in.road_meta[k] = v.get<std::string>();
      }
    }

    std::map<std::string, std::string> uploaded;
    for (const auto& f : req.get_file_values("evidence")) uploaded[f.filename] = f.content;
    if (!uploaded.empty()) {
      try {
        for (const auto& r : parse_frame_manifest(in.frames_jsonl)) {
          if (!r.evidence) continue;
          if (auto it = uploaded.find(basename_of(*r.evidence)); it != uploaded.end()) {
            in.evidence_images[*r.evidence] = it->second;
          }
        }
      } catch (const Error&) {
        // run_session reports the manifest problem.
      }
    }

    try {
      const auto outcome = run_session(in, cfg, store);
      res.status = 201;
      res.set_content(to_json(outcome).dump(), kJson);
    } catch (const SessionRejected& e) {
      const auto& first = e.errors().front();
      send_error(res, 400, to_string(first.code), e.what(), to_json(e));
    } catch (const Error& e) {
      send_error(res, 500, e.code_name(), e.what());
    }
  }

  void get_potholes(const httplib::Request& req, httplib::Response& res) {
    RegistryQuery q;
    try {
      q = parse_pothole_query(req.params);
    } catch (const Error& e) {
      send_error(res, 400, e.code_name(), e.what());
      return;
    } catch (const std::invalid_argument& e) {
      send_error(res, 400, "MalformedQuery", e.what());
      return;
    }
    const auto records = store.query(q);
    res.set_content(render_geojson(records), kGeoJson);
  }

  void patch_status(const httplib::Request& req, httplib::Response& res) {
    if (!authorized(req, res)) return;
    const auto id = std::stoll(req.matches[1]);
    const auto body = nlohmann::json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.is_object() || !body.contains("status") ||
        !body["status"].is_string()) {
      send_error(res, 400, "BadRequest", R"(body must be {"status": "<open|fixed|reopened>"})");
      return;
    }
    const auto status = parse_status(body["status"].get<std::string>());
    if (!status) {
      send_error(res, 400, "BadRequest",
                 fmt::format("unknown status '{}'", body["status"].get<std::string>()));
      return;
    }
    try {
      const auto updated = store.set_status(id, *status);
      res.set_content(render_feature(updated), kGeoJson);
    } catch (const Error& e) {
      const int code = e.code() == ErrorCode::kUnknownPothole      ? 404
                       : e.code() == ErrorCode::kIllegalTransition ? 409
                                                                   : 500;
      send_error(res, code, e.code_name(), e.what());
    }
  }
};

ApiServer::ApiServer(EngineConfig cfg, Store& store)
    : impl_(std::make_unique<Impl>(std::move(cfg), store)) {}

ApiServer::~ApiServer() = default;

int ApiServer::bind_to_any_port(const std::string& host) {
  return impl_->server.bind_to_any_port(host);
}

bool ApiServer::bind(const std::string& host, int port) {
  return impl_->server.bind_to_port(host, port);
}

bool ApiServer::listen_after_bind() { return impl_->server.listen_after_bind(); }

void ApiServer::stop() { impl_->server.stop(); }

void ApiServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace roadwatch
