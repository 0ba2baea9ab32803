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

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "roadwatch/errors.hpp"
#include "roadwatch/overlay_time.hpp"
#include "roadwatch/time.hpp"

namespace roadwatch {

/// One line of a frame manifest.
struct ManifestRecord {
  std::size_t frame_index = 0;
  std::string overlay_text;
  std::optional<std::string> evidence;        // image path, relative to the manifest
  std::optional<UtcTime> utc_reference;       // known UTC instant of this frame, if any
};

/// Parses a JSON Lines frame manifest:
///   {"frame_index": 0, "overlay_text": "20-05-2025 14:30:05", "evidence": "f/000000.jpg"}
/// Frame indices must be unique; gaps are allowed (sampled frames) and
/// records come back sorted.
inline std::vector<ManifestRecord> parse_frame_manifest(std::string_view jsonl) {
  std::vector<ManifestRecord> records;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < jsonl.size()) {
    auto nl = jsonl.find('\n', pos);
    if (nl == std::string_view::npos) nl = jsonl.size();
    std::string_view line = jsonl.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.remove_suffix(1);
    if (line.empty()) continue;

    auto fail = [&](std::string_view why) {
      return Error(ErrorCode::kMalformedManifest, fmt::format("line {}: {}", line_no, why));
    };
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw fail("not a JSON object");
    ManifestRecord r;
    const auto idx = j.find("frame_index");
    if (idx == j.end() || !idx->is_number_unsigned()) {
      throw fail("frame_index must be a non-negative integer");
    }
    r.frame_index = idx->get<std::size_t>();
    const auto text = j.find("overlay_text");
    if (text == j.end() || !text->is_string()) throw fail("overlay_text must be a string");
    r.overlay_text = text->get<std::string>();
    if (auto ev = j.find("evidence"); ev != j.end() && !ev->is_null()) {
      if (!ev->is_string()) throw fail("evidence must be a string");
      r.evidence = ev->get<std::string>();
    }
    if (auto ref = j.find("utc_reference"); ref != j.end() && !ref->is_null()) {
      if (!ref->is_string()) throw fail("utc_reference must be a string");
      r.utc_reference = parse_iso8601(ref->get<std::string>());
      if (!r.utc_reference) throw fail("utc_reference is not ISO 8601");
    }
    records.push_back(std::move(r));
  }
  std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) {
    return a.frame_index < b.frame_index;
  });
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].frame_index == records[i - 1].frame_index) {
      throw Error(ErrorCode::kMalformedManifest,
                  fmt::format("duplicate frame_index {}", records[i].frame_index));
    }
  }
  return records;
}

inline std::vector<RawOverlayText> overlay_texts(const std::vector<ManifestRecord>& records) {
  std::vector<RawOverlayText> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back({r.frame_index, r.overlay_text});
  return out;
}

}  // namespace roadwatch
