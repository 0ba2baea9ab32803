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

// RFC 7946 rendering of registry records. Key order is fixed, so equal
// registries always serialize to identical bytes.

#pragma once

#include <array>
#include <charconv>
#include <span>
#include <string>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "roadwatch/registry.hpp"
#include "roadwatch/time.hpp"

namespace roadwatch {

/// Shortest fixed-notation text that reads back as `x`. nlohmann's printer is not
/// always shortest (18.87561 can come out as 18.875610000000002).
inline std::string format_coordinate(double x) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x, std::chars_format::fixed);
  return std::string(buf.data(), res.ptr);
}

inline nlohmann::ordered_json feature_properties(const PotholeRecord& r) {
  nlohmann::ordered_json meta = nlohmann::ordered_json::object();
  for (const auto& [k, v] : r.road_meta) meta[k] = v;

  nlohmann::ordered_json props;
  props["id"] = r.id;
  props["severity"] = to_string(r.severity);
  props["status"] = to_string(r.status);
  props["first_seen"] = format_iso8601(r.first_seen);
  props["last_seen"] = format_iso8601(r.last_seen);
  props["observation_count"] = r.observation_count;
  props["road_meta"] = std::move(meta);
  props["evidence_frame_b64"] =
      r.evidence_frame_b64 ? nlohmann::ordered_json(*r.evidence_frame_b64)
                            : nlohmann::ordered_json(nullptr);
  return props;
}

/// One Feature. Positions are [longitude, latitude] and written as the
/// shortest round-trip decimal, so 5 dp values never gain digits.
inline std::string render_feature(const PotholeRecord& r) {
  return fmt::format(
      R"({{"type":"Feature","id":{},"geometry":{{"type":"Point","coordinates":[{},{}]}},"properties":{}}})",
      r.id, format_coordinate(r.coordinate.lon), format_coordinate(r.coordinate.lat),
      feature_properties(r).dump());
}

inline std::string render_geojson(std::span<const PotholeRecord> records) {
  std::string out = R"({"type":"FeatureCollection","features":[)";
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (i > 0) out += ',';
    out += render_feature(records[i]);
  }
  out += "]}";
  return out;
}

}  // namespace roadwatch
