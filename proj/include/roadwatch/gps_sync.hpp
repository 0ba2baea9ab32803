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

// GPS log ingestion, overlay clock calibration, and timestamp-to-position
// lookup along a track.

#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <fmt/format.h>

#include "roadwatch/errors.hpp"
#include "roadwatch/geo.hpp"
#include "roadwatch/overlay_time.hpp"
#include "roadwatch/time.hpp"

namespace roadwatch {

struct GpsFix {
  UtcTime time_utc{};
  LatLon position;

  friend bool operator==(const GpsFix&, const GpsFix&) = default;
};

/// Fixes with strictly increasing timestamps.
class GpsTrack {
 public:
  GpsTrack() = default;

  /// Sorts by time and keeps the first fix (in input order) for each
  /// timestamp.
  static GpsTrack from_fixes(std::vector<GpsFix> fixes) {
    std::stable_sort(fixes.begin(), fixes.end(),
                     [](const GpsFix& a, const GpsFix& b) { return a.time_utc < b.time_utc; });
    auto last = std::unique(fixes.begin(), fixes.end(), [](const GpsFix& a, const GpsFix& b) {
      return a.time_utc == b.time_utc;
    });
    fixes.erase(last, fixes.end());
    GpsTrack track;
    track.fixes_ = std::move(fixes);
    return track;
  }

  std::span<const GpsFix> fixes() const { return fixes_; }
  bool empty() const { return fixes_.empty(); }
  std::size_t size() const { return fixes_.size(); }
  UtcTime start() const { return fixes_.front().time_utc; }
  UtcTime end() const { return fixes_.back().time_utc; }

 private:
  std::vector<GpsFix> fixes_;
};

enum class GpsLogFormat { kCsv, kGpx };

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r' ||
                        s.front() == '\n')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' ||
                        s.back() == '\n')) {
    s.remove_suffix(1);
  }
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
    s = s.substr(1, s.size() - 2);
  }
  return s;
}

inline std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || !std::isfinite(v)) {
    return std::nullopt;
  }
  return v;
}

inline std::vector<std::string_view> split_csv_row(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

inline GpsFix make_fix(std::string_view time, std::string_view lat, std::string_view lon,
                       std::string_view where) {
  const auto t = parse_iso8601(trim(time));
  const auto la = parse_double(lat);
  const auto lo = parse_double(lon);
  if (!t || !la || !lo) {
    throw Error(ErrorCode::kMalformedLog, fmt::format("{}: unreadable fix", where));
  }
  GpsFix fix{*t, {*la, *lo}};
  if (!is_valid(fix.position)) {
    throw Error(ErrorCode::kMalformedLog,
                fmt::format("{}: coordinate ({}, {}) out of range", where, *la, *lo));
  }
  return fix;
}

inline std::vector<GpsFix> parse_csv_fixes(std::string_view bytes) {
  std::vector<GpsFix> fixes;
  std::optional<std::size_t> time_col, lat_col, lon_col;
  std::size_t line_no = 0;
  std::size_t width = 0;
  std::size_t pos = bytes.starts_with("\xEF\xBB\xBF") ? 3 : 0;
  while (pos < bytes.size()) {
    auto nl = bytes.find('\n', pos);
    if (nl == std::string_view::npos) nl = bytes.size();
    const std::string_view line = trim(bytes.substr(pos, nl - pos));
    pos = nl + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto cells = split_csv_row(line);
    if (!time_col) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (cells[i] == "time_utc") time_col = i;
        if (cells[i] == "lat") lat_col = i;
        if (cells[i] == "lon") lon_col = i;
      }
      if (!time_col || !lat_col || !lon_col) {
        throw Error(ErrorCode::kMalformedLog,
                    fmt::format("line {}: header must name time_utc, lat, lon", line_no));
      }
      width = cells.size();
      continue;
    }
    if (cells.size() != width) {
      throw Error(ErrorCode::kMalformedLog,
                  fmt::format("line {}: expected {} fields, got {}", line_no, width,
                              cells.size()));
    }
    fixes.push_back(make_fix(cells[*time_col], cells[*lat_col], cells[*lon_col],
                             fmt::format("line {}", line_no)));
  }
  return fixes;
}

inline void collect_trkpts(const boost::property_tree::ptree& node, std::vector<GpsFix>& out) {
  for (const auto& [name, child] : node) {
    if (name == "trkpt") {
      const auto lat = child.get_optional<std::string>("<xmlattr>.lat");
      const auto lon = child.get_optional<std::string>("<xmlattr>.lon");
      const auto time = child.get_optional<std::string>("time");
      const std::string where = fmt::format("trkpt {}", out.size());
      if (!lat || !lon || !time) {
        throw Error(ErrorCode::kMalformedLog, where + ": missing lat, lon or time");
      }
      out.push_back(make_fix(*time, *lat, *lon, where));
    } else if (name != "<xmlattr>") {
      collect_trkpts(child, out);
    }
  }
}

inline std::vector<GpsFix> parse_gpx_fixes(std::string_view bytes) {
  boost::property_tree::ptree tree;
  std::istringstream in{std::string(bytes)};
  try {
    boost::property_tree::read_xml(in, tree);
  } catch (const boost::property_tree::xml_parser_error& e) {
    throw Error(ErrorCode::kMalformedLog, fmt::format("GPX is not well-formed: {}", e.what()));
  }
  std::vector<GpsFix> fixes;
  collect_trkpts(tree, fixes);
  return fixes;
}

}  // namespace detail

/// Reads a GPS log. CSV needs a header naming time_utc, lat and lon (other
/// columns are ignored); GPX contributes every trkpt with a <time> child.
inline GpsTrack parse_gps_log(std::string_view bytes, GpsLogFormat format) {
  auto fixes = format == GpsLogFormat::kCsv ? detail::parse_csv_fixes(bytes)
                                            : detail::parse_gpx_fixes(bytes);
  if (fixes.empty()) throw Error(ErrorCode::kEmptyTrack, "GPS log contains no fixes");
  return GpsTrack::from_fixes(std::move(fixes));
}

/// Picks a format from a file name, falling back to sniffing for XML.
inline GpsLogFormat guess_gps_format(std::string_view filename, std::string_view bytes) {
  auto ends_with = [&](std::string_view suffix) {
    if (filename.size() < suffix.size()) return false;
    auto tail = filename.substr(filename.size() - suffix.size());
    return std::equal(tail.begin(), tail.end(), suffix.begin(), [](char a, char b) {
      return std::tolower(static_cast<unsigned char>(a)) == b;
    });
  };
  if (ends_with(".gpx")) return GpsLogFormat::kGpx;
  if (ends_with(".csv")) return GpsLogFormat::kCsv;
  return detail::trim(bytes).starts_with("<") ? GpsLogFormat::kGpx : GpsLogFormat::kCsv;
}

// ---------------------------------------------------------------------------
// Clock calibration
// ---------------------------------------------------------------------------

/// Overlay clock minus UTC. A dashcam set to IST with some drift reads
/// several hours ahead of the GPS logger.
struct ClockOffset {
  Millis overlay_minus_utc{0};

  double seconds() const { return static_cast<double>(overlay_minus_utc.count()) / 1000.0; }

  static ClockOffset from_seconds(double s) {
    return ClockOffset{Millis{std::llround(s * 1000.0)}};
  }

  friend bool operator==(const ClockOffset&, const ClockOffset&) = default;
};

inline UtcTime to_utc(OverlayTime overlay, ClockOffset offset) {
  return UtcTime{overlay.time_since_epoch() - offset.overlay_minus_utc};
}

/// Median of pairwise (overlay - utc) differences. For an even count the two
/// middle values are averaged, rounding toward negative infinity.
inline ClockOffset calibrate_offset(std::span<const CanonicalTimestamp> overlay_samples,
                                    std::span<const UtcTime> utc_samples) {
  if (overlay_samples.size() != utc_samples.size()) {
    throw std::invalid_argument("calibrate_offset: sample lists differ in length");
  }
  if (overlay_samples.empty()) {
    throw Error(ErrorCode::kNoSamples, "no overlay/UTC sample pairs to calibrate from");
  }
  std::vector<Millis::rep> diffs;
  diffs.reserve(overlay_samples.size());
  for (std::size_t i = 0; i < overlay_samples.size(); ++i) {
    diffs.push_back(overlay_samples[i].to_overlay_time().time_since_epoch().count() -
                    utc_samples[i].time_since_epoch().count());
  }
  std::sort(diffs.begin(), diffs.end());
  const std::size_t n = diffs.size();
  if (n % 2 == 1) return ClockOffset{Millis{diffs[n / 2]}};
  const auto lo = diffs[n / 2 - 1];
  const auto hi = diffs[n / 2];
  const auto sum = lo + hi;
  return ClockOffset{Millis{sum >= 0 || sum % 2 == 0 ? sum / 2 : sum / 2 - 1}};
}

// ---------------------------------------------------------------------------
// Track lookup
// ---------------------------------------------------------------------------

struct LocateLimits {
  Millis clamp{1000};    // queries this close outside the track snap to an end
  Millis max_gap{5000};  // bracketing fixes further apart than this fail
};

/// Position at an instant on the track, interpolated linearly in lat and lon
/// and rounded to 5 decimals.
inline LatLon locate_utc(const GpsTrack& track, UtcTime t, const LocateLimits& limits = {}) {
  if (track.empty()) throw Error(ErrorCode::kEmptyTrack, "locate on empty track");
  const auto fixes = track.fixes();
  if (t < track.start() - limits.clamp || t > track.end() + limits.clamp) {
    throw Error(ErrorCode::kOutsideTrack,
                fmt::format("{} is outside track [{}, {}]", format_iso8601(t),
                            format_iso8601(track.start()), format_iso8601(track.end())));
  }
  if (t <= track.start()) return round_5dp(fixes.front().position);
  if (t >= track.end()) return round_5dp(fixes.back().position);

  const auto next = std::upper_bound(
      fixes.begin(), fixes.end(), t,
      [](UtcTime value, const GpsFix& fix) { return value < fix.time_utc; });
  const auto prev = next - 1;
  if (prev->time_utc == t) return round_5dp(prev->position);
  const auto gap = next->time_utc - prev->time_utc;
  if (gap > limits.max_gap) {
    throw Error(ErrorCode::kGapTooLarge,
                fmt::format("fixes around {} are {} ms apart", format_iso8601(t), gap.count()));
  }
  const double frac = static_cast<double>((t - prev->time_utc).count()) /
                      static_cast<double>(gap.count());
  return round_5dp(LatLon{std::lerp(prev->position.lat, next->position.lat, frac),
                          std::lerp(prev->position.lon, next->position.lon, frac)});
}

inline LatLon locate(const GpsTrack& track, ClockOffset offset,
                     const CanonicalTimestamp& frame_time, const LocateLimits& limits = {}) {
  return locate_utc(track, to_utc(frame_time.to_overlay_time(), offset), limits);
}

/// Fixes plus linearly interpolated points every `step` between them; used
/// to decide which registry points a drive went past.
inline std::vector<LatLon> sample_track(const GpsTrack& track, Millis step = Millis{1000}) {
  std::vector<LatLon> points;
  const auto fixes = track.fixes();
  for (std::size_t i = 0; i < fixes.size(); ++i) {
    points.push_back(fixes[i].position);
    if (i + 1 == fixes.size()) break;
    const auto gap = fixes[i + 1].time_utc - fixes[i].time_utc;
    for (auto dt = step; dt < gap; dt += step) {
      const double frac =
          static_cast<double>(dt.count()) / static_cast<double>(gap.count());
      points.push_back({std::lerp(fixes[i].position.lat, fixes[i + 1].position.lat, frac),
                        std::lerp(fixes[i].position.lon, fixes[i + 1].position.lon, frac)});
    }
  }
  return points;
}

}  // namespace roadwatch
