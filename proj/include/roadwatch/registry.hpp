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

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "roadwatch/detection.hpp"
#include "roadwatch/geo.hpp"
#include "roadwatch/time.hpp"

namespace roadwatch {

enum class PotholeStatus { kOpen, kFixed, kReopened };

constexpr std::string_view to_string(PotholeStatus s) {
  switch (s) {
    case PotholeStatus::kOpen: return "open";
    case PotholeStatus::kFixed: return "fixed";
    case PotholeStatus::kReopened: return "reopened";
  }
  return "open";
}

inline std::optional<PotholeStatus> parse_status(std::string_view s) {
  if (s == "open") return PotholeStatus::kOpen;
  if (s == "fixed") return PotholeStatus::kFixed;
  if (s == "reopened") return PotholeStatus::kReopened;
  return std::nullopt;
}

/// open -> fixed -> reopened -> fixed -> ...
constexpr bool is_legal_transition(PotholeStatus from, PotholeStatus to) {
  return (from == PotholeStatus::kOpen && to == PotholeStatus::kFixed) ||
         (from == PotholeStatus::kFixed && to == PotholeStatus::kReopened) ||
         (from == PotholeStatus::kReopened && to == PotholeStatus::kFixed);
}

constexpr bool is_active(PotholeStatus s) { return s != PotholeStatus::kFixed; }

using PotholeId = std::int64_t;

/// Canonical registry entry for one physical pothole.
struct PotholeRecord {
  PotholeId id = 0;
  LatLon coordinate;
  Severity severity = Severity::kLow;
  PotholeStatus status = PotholeStatus::kOpen;
  UtcTime first_seen{};
  UtcTime last_seen{};
  std::int64_t observation_count = 1;
  std::optional<std::string> evidence_frame_b64;
  std::map<std::string, std::string> road_meta;  // contractor, road_type, road_created, ...

  friend bool operator==(const PotholeRecord&, const PotholeRecord&) = default;
};

struct StatusTransition {
  PotholeId record_id = 0;
  PotholeStatus from = PotholeStatus::kOpen;
  PotholeStatus to = PotholeStatus::kFixed;

  friend bool operator==(const StatusTransition&, const StatusTransition&) = default;
};

}  // namespace roadwatch
