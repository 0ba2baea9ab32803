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
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "roadwatch/errors.hpp"

namespace roadwatch {

/// Center/extent box, all values as fractions of the frame size.
struct BoundingBox {
  double cx = 0.0;
  double cy = 0.0;
  double w = 0.0;
  double h = 0.0;

  double area() const { return w * h; }
  double aspect_ratio() const { return h > 0.0 ? w / h : 0.0; }

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

inline bool is_valid(const BoundingBox& b) {
  constexpr double kSlack = 1e-9;
  const bool finite = std::isfinite(b.cx) && std::isfinite(b.cy) && std::isfinite(b.w) &&
                      std::isfinite(b.h);
  return finite && b.cx >= 0.0 && b.cx <= 1.0 && b.cy >= 0.0 && b.cy <= 1.0 && b.w > 0.0 &&
         b.w <= 1.0 && b.h > 0.0 && b.h <= 1.0 && b.cx - b.w / 2 >= -kSlack &&
         b.cx + b.w / 2 <= 1.0 + kSlack && b.cy - b.h / 2 >= -kSlack &&
         b.cy + b.h / 2 <= 1.0 + kSlack;
}

struct Detection {
  std::size_t frame_index = 0;
  BoundingBox bbox;
  double confidence = 0.0;

  friend bool operator==(const Detection&, const Detection&) = default;
};

enum class Severity { kLow = 0, kMedium = 1, kHigh = 2 };

constexpr std::string_view to_string(Severity s) {
  switch (s) {
    case Severity::kLow: return "low";
    case Severity::kMedium: return "medium";
    case Severity::kHigh: return "high";
  }
  return "low";
}

inline std::optional<Severity> parse_severity(std::string_view s) {
  if (s == "low") return Severity::kLow;
  if (s == "medium") return Severity::kMedium;
  if (s == "high") return Severity::kHigh;
  return std::nullopt;
}

/// Area cutoffs as fractions of the frame. These are heuristics, not
/// calibrated against measured pothole sizes.
struct SeverityThresholds {
  double medium_area = 0.01;
  double high_area = 0.05;
};

inline Severity assess_severity(const Detection& d, const SeverityThresholds& t = {}) {
  const double area = d.bbox.area();
  if (area >= t.high_area) return Severity::kHigh;
  if (area >= t.medium_area) return Severity::kMedium;
  return Severity::kLow;
}

inline constexpr double kDefaultConfidenceThreshold = 0.25;

struct RecordError {
  std::size_t line = 0;  // 1-based
  std::string message;
};

struct DetectionIngestReport {
  std::vector<Detection> accepted;
  std::size_t total_records = 0;
  std::size_t dropped_low_confidence = 0;
  std::vector<RecordError> rejected;  // MalformedDetection, one per bad record
};

/// Reads detection records, one JSON object per line:
///   {"frame_index": 12, "cx": 0.5, "cy": 0.6, "w": 0.1, "h": 0.05, "confidence": 0.91}
/// Bad records are collected instead of aborting the read.
inline DetectionIngestReport ingest_detections(
    std::string_view jsonl, double confidence_threshold = kDefaultConfidenceThreshold) {
  DetectionIngestReport report;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < jsonl.size()) {
    auto nl = jsonl.find('\n', pos);
    if (nl == std::string_view::npos) nl = jsonl.size();
    std::string_view line = jsonl.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.remove_suffix(1);
    while (!line.empty() && line.front() == ' ') line.remove_prefix(1);
    if (line.empty()) continue;
    ++report.total_records;

    auto reject = [&](std::string message) {
      report.rejected.push_back({line_no, std::move(message)});
    };
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      reject("not a JSON object");
      continue;
    }
    auto number = [&](const char* key) -> std::optional<double> {
      auto it = j.find(key);
      if (it == j.end() || !it->is_number()) return std::nullopt;
      return it->get<double>();
    };
    const auto frame = j.find("frame_index");
    if (frame == j.end() || !frame->is_number_unsigned()) {
      reject("frame_index must be a non-negative integer");
      continue;
    }
    const auto cx = number("cx"), cy = number("cy"), w = number("w"), h = number("h"),
               conf = number("confidence");
    if (!cx || !cy || !w || !h || !conf) {
      reject("missing numeric field (cx, cy, w, h, confidence)");
      continue;
    }
    Detection d{frame->get<std::size_t>(), {*cx, *cy, *w, *h}, *conf};
    if (!is_valid(d.bbox)) {
      reject(fmt::format("bbox ({}, {}, {}, {}) outside the unit frame", *cx, *cy, *w, *h));
      continue;
    }
    if (!(d.confidence >= 0.0 && d.confidence <= 1.0)) {
      reject(fmt::format("confidence {} outside [0, 1]", d.confidence));
      continue;
    }
    if (d.confidence < confidence_threshold) {
      ++report.dropped_low_confidence;
      continue;
    }
    report.accepted.push_back(d);
  }
  return report;
}

// ---------------------------------------------------------------------------
// Detector backends
// ---------------------------------------------------------------------------

struct FrameRef {
  std::size_t frame_index = 0;
  std::string evidence_path;
};

struct DetectorCapability {
  std::string name;
  std::string version;
  bool thread_safe = true;
};

/// Source of detections for a frame. Implementations are deterministic for a
/// fixed model artifact; the non-thread-safe ones say so in capability().
class DetectorBackend {
 public:
  virtual ~DetectorBackend() = default;
  virtual DetectorCapability capability() const = 0;
  virtual std::vector<Detection> detect(const FrameRef& frame) const = 0;
};

/// Serves detections precomputed by an external model run.
class FileDetectorBackend final : public DetectorBackend {
 public:
  explicit FileDetectorBackend(const std::vector<Detection>& detections) {
    for (const auto& d : detections) by_frame_[d.frame_index].push_back(d);
  }

  static FileDetectorBackend from_jsonl(std::string_view jsonl,
                                        double confidence_threshold = kDefaultConfidenceThreshold) {
    return FileDetectorBackend(ingest_detections(jsonl, confidence_threshold).accepted);
  }

  DetectorCapability capability() const override { return {"file", "1", true}; }

  std::vector<Detection> detect(const FrameRef& frame) const override {
    auto it = by_frame_.find(frame.frame_index);
    return it == by_frame_.end() ? std::vector<Detection>{} : it->second;
  }

 private:
  std::map<std::size_t, std::vector<Detection>> by_frame_;
};

/// Emits scripted targets with seeded per-frame jitter. Output depends only
/// on the seed, the targets and the frame index.
class SyntheticDetectorBackend final : public DetectorBackend {
 public:
  struct Target {
    std::size_t first_frame = 0;
    std::size_t last_frame = 0;  // inclusive
    BoundingBox bbox;
    double confidence = 0.8;
  };

  SyntheticDetectorBackend(std::vector<Target> targets, std::uint64_t seed,
                           double jitter = 0.0)
      : targets_(std::move(targets)), seed_(seed), jitter_(jitter) {}

  DetectorCapability capability() const override { return {"synthetic", "1", true}; }

  std::vector<Detection> detect(const FrameRef& frame) const override {
    std::vector<Detection> out;
    for (std::size_t i = 0; i < targets_.size(); ++i) {
      const auto& t = targets_[i];
      if (frame.frame_index < t.first_frame || frame.frame_index > t.last_frame) continue;
      const std::uint64_t h = mix(seed_ ^ mix(frame.frame_index * 0x9E3779B97F4A7C15ULL + i));
      const double u1 = unit(h), u2 = unit(mix(h)), u3 = unit(mix(mix(h)));
      BoundingBox b = t.bbox;
      b.w = std::clamp(b.w * (1.0 + jitter_ * (2 * u1 - 1)), 1e-4, 1.0);
      b.h = std::clamp(b.h * (1.0 + jitter_ * (2 * u2 - 1)), 1e-4, 1.0);
      b.cx = std::clamp(b.cx, b.w / 2, 1.0 - b.w / 2);
      b.cy = std::clamp(b.cy, b.h / 2, 1.0 - b.h / 2);
      const double conf = std::clamp(t.confidence + jitter_ * 0.1 * (2 * u3 - 1), 0.0, 1.0);
      out.push_back({frame.frame_index, b, conf});
    }
    return out;
  }

 private:
  // splitmix64 finalizer
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
  static double unit(std::uint64_t h) { return static_cast<double>(h >> 11) * 0x1.0p-53; }

  std::vector<Target> targets_;
  std::uint64_t seed_;
  double jitter_;
};

/// Runs a backend over frames and collects the detections in frame order.
inline std::vector<Detection> run_detector(const DetectorBackend& backend,
                                           const std::vector<FrameRef>& frames) {
  std::vector<Detection> out;
  for (const auto& f : frames) {
    auto ds = backend.detect(f);
    out.insert(out.end(), ds.begin(), ds.end());
  }
  return out;
}

}  // namespace roadwatch
