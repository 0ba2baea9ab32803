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

// Normalization of OCR'd dashcam overlay clocks ("DD-MM-YYYY HH:MM:SS") and
// construction of a gap-free per-frame timeline.
//
// The OCR engine confuses delimiters: ':' comes back as '.', and a date
// separator ('-' or '/') can come back as the digit '1'. Date tokens are
// therefore matched against a positional grammar: every way of splitting the
// token into fields separated by delimiter slots is tried, and the reading is
// accepted only if exactly one split is a valid calendar date.

#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "roadwatch/errors.hpp"
#include "roadwatch/time.hpp"

namespace roadwatch {

struct RawOverlayText {
  std::size_t frame_index = 0;
  std::string text;
};

struct CanonicalTimestamp {
  std::chrono::year_month_day date{};
  int hour = 0;
  int minute = 0;
  int second = 0;
  int millis = 0;  // zero when the overlay carries no fraction

  friend bool operator==(const CanonicalTimestamp&, const CanonicalTimestamp&) = default;

  OverlayTime to_overlay_time() const {
    return OverlayTime{std::chrono::local_days{date}.time_since_epoch()} +
           std::chrono::hours{hour} + std::chrono::minutes{minute} +
           std::chrono::seconds{second} + Millis{millis};
  }

  static CanonicalTimestamp from_overlay_time(OverlayTime t) {
    const auto day = std::chrono::floor<std::chrono::days>(t);
    const std::chrono::hh_mm_ss<Millis> tod{t - day};
    CanonicalTimestamp out;
    out.date = std::chrono::year_month_day{day};
    out.hour = static_cast<int>(tod.hours().count());
    out.minute = static_cast<int>(tod.minutes().count());
    out.second = static_cast<int>(tod.seconds().count());
    out.millis = static_cast<int>(tod.subseconds().count());
    return out;
  }
};

/// Renders "DD-MM-YYYY HH:MM:SS", appending ".mmm" when requested.
inline std::string format_overlay(const CanonicalTimestamp& ts, bool with_millis = false) {
  std::string out = fmt::format(
      "{:02d}-{:02d}-{:04d} {:02d}:{:02d}:{:02d}", static_cast<unsigned>(ts.date.day()),
      static_cast<unsigned>(ts.date.month()), static_cast<int>(ts.date.year()), ts.hour,
      ts.minute, ts.second);
  if (with_millis) out += fmt::format(".{:03d}", ts.millis);
  return out;
}

// ---------------------------------------------------------------------------
// Grammar
// ---------------------------------------------------------------------------

enum class DateField { kDay, kMonth, kYear };

struct DateFieldSpec {
  DateField field;
  int min_width;
  int max_width;
};

/// Field order and widths of one accepted date shape. Fields are separated by
/// exactly one delimiter slot.
struct DateLayout {
  std::array<DateFieldSpec, 3> fields;
};

inline constexpr DateLayout kDayMonthYear{{{
    {DateField::kDay, 1, 2},
    {DateField::kMonth, 1, 2},
    {DateField::kYear, 4, 4},
}}};

/// Extension point for overlay formats. The default accepts day-month-year
/// only; additional layouts are tried alongside it and still have to agree on
/// a single calendar reading.
struct OverlayGrammar {
  std::vector<DateLayout> date_layouts{kDayMonthYear};
};

namespace detail {

constexpr bool is_digit(char c) { return c >= '0' && c <= '9'; }

constexpr bool is_date_delimiter(char c) {
  return c == '-' || c == '/' || c == '.' || c == '1';
}

constexpr bool is_time_delimiter(char c) { return c == ':' || c == '.'; }

inline int digits_value(std::string_view s) {
  int v = 0;
  for (char c : s) v = v * 10 + (c - '0');
  return v;
}

struct DateReading {
  int day = 0;
  int month = 0;
  int year = 0;
};

// Appends every split of `token` into `layout` whose fields are all digits and
// whose slots hold delimiter characters. Calendar validity is not checked.
inline void enumerate_date_splits(std::string_view token, const DateLayout& layout,
                                  std::vector<DateReading>& out) {
  std::array<int, 3> widths{};
  auto recurse = [&](auto&& self, std::size_t field, std::size_t pos) -> void {
    if (field == layout.fields.size()) {
      if (pos != token.size()) return;
      DateReading r;
      std::size_t p = 0;
      for (std::size_t f = 0; f < layout.fields.size(); ++f) {
        const int v = digits_value(token.substr(p, widths[f]));
        switch (layout.fields[f].field) {
          case DateField::kDay: r.day = v; break;
          case DateField::kMonth: r.month = v; break;
          case DateField::kYear: r.year = v; break;
        }
        p += widths[f] + 1;
      }
      out.push_back(r);
      return;
    }
    const auto& spec = layout.fields[field];
    for (int w = spec.min_width; w <= spec.max_width; ++w) {
      const std::size_t end = pos + static_cast<std::size_t>(w);
      if (end > token.size()) break;
      bool digits = true;
      for (std::size_t i = pos; i < end; ++i) digits = digits && is_digit(token[i]);
      if (!digits) continue;
      widths[field] = w;
      if (field + 1 == layout.fields.size()) {
        self(self, field + 1, end);
      } else if (end < token.size() && is_date_delimiter(token[end])) {
        self(self, field + 1, end + 1);
      }
    }
  };
  recurse(recurse, 0, 0);
}

struct TimeReading {
  int hour = 0;
  int minute = 0;
  int second = 0;
  int millis = 0;
};

// HH<d>MM<d>SS[<d>f{1,3}] with <d> in {':', '.'}; the fraction is decimal.
inline std::optional<TimeReading> split_time(std::string_view token) {
  if (token.size() < 8) return std::nullopt;
  for (std::size_t i : {0u, 1u, 3u, 4u, 6u, 7u}) {
    if (!is_digit(token[i])) return std::nullopt;
  }
  if (!is_time_delimiter(token[2]) || !is_time_delimiter(token[5])) return std::nullopt;
  TimeReading r;
  r.hour = digits_value(token.substr(0, 2));
  r.minute = digits_value(token.substr(3, 2));
  r.second = digits_value(token.substr(6, 2));
  if (token.size() == 8) return r;
  if (!is_time_delimiter(token[8])) return std::nullopt;
  const std::string_view frac = token.substr(9);
  if (frac.empty() || frac.size() > 3) return std::nullopt;
  int scale = 100;
  for (char c : frac) {
    if (!is_digit(c)) return std::nullopt;
    r.millis += (c - '0') * scale;
    scale /= 10;
  }
  return r;
}

inline std::vector<std::string_view> split_whitespace(std::string_view text) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    const std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start) tokens.push_back(text.substr(start, i - start));
  }
  return tokens;
}

}  // namespace detail

/// Recovers the overlay clock reading from OCR text.
///
/// Throws Error(kUnparsableTimestamp) when no date/time token pair fits the
/// grammar or when more than one calendar reading fits, and
/// Error(kInvalidCalendarDate) when the shape fits but the fields do not name
/// a real date or time of day.
inline CanonicalTimestamp normalize_overlay_text(std::string_view text,
                                                 const OverlayGrammar& grammar = {}) {
  const auto tokens = detail::split_whitespace(text);
  if (tokens.empty()) {
    throw Error(ErrorCode::kUnparsableTimestamp, "empty overlay text");
  }

  for (std::size_t k = 0; k + 1 < tokens.size(); ++k) {
    std::vector<detail::DateReading> splits;
    for (const auto& layout : grammar.date_layouts) {
      detail::enumerate_date_splits(tokens[k], layout, splits);
    }
    if (splits.empty()) continue;
    const auto time = detail::split_time(tokens[k + 1]);
    if (!time) continue;

    if (time->hour > 23 || time->minute > 59 || time->second > 59) {
      throw Error(ErrorCode::kInvalidCalendarDate,
                  fmt::format("time of day out of range in '{}'", text));
    }

    std::vector<std::chrono::year_month_day> valid;
    for (const auto& s : splits) {
      if (s.month < 1 || s.month > 12 || s.day < 1 || s.day > 31) continue;
      const std::chrono::year_month_day ymd{std::chrono::year{s.year},
                                            std::chrono::month{static_cast<unsigned>(s.month)},
                                            std::chrono::day{static_cast<unsigned>(s.day)}};
      if (!ymd.ok()) continue;
      if (std::find(valid.begin(), valid.end(), ymd) == valid.end()) valid.push_back(ymd);
    }
    if (valid.empty()) {
      throw Error(ErrorCode::kInvalidCalendarDate,
                  fmt::format("no valid calendar date in '{}'", tokens[k]));
    }
    if (valid.size() > 1) {
      throw Error(ErrorCode::kUnparsableTimestamp,
                  fmt::format("ambiguous date token '{}' ({} readings)", tokens[k],
                              valid.size()));
    }
    CanonicalTimestamp out;
    out.date = valid.front();
    out.hour = time->hour;
    out.minute = time->minute;
    out.second = time->second;
    out.millis = time->millis;
    return out;
  }
  throw Error(ErrorCode::kUnparsableTimestamp,
              fmt::format("no timestamp pattern matches '{}'", text));
}

inline CanonicalTimestamp normalize_overlay_text(const RawOverlayText& raw,
                                                 const OverlayGrammar& grammar = {}) {
  return normalize_overlay_text(raw.text, grammar);
}

// ---------------------------------------------------------------------------
// Timeline
// ---------------------------------------------------------------------------

inline constexpr double kDefaultFps = 30.0;

/// Parsed frames may disagree with the anchor extrapolation by this much
/// before they are replaced.
inline constexpr Millis kMonotonicityTolerance{2000};

struct TimelineEntry {
  std::size_t frame_index = 0;
  CanonicalTimestamp timestamp;
  bool repaired = false;

  friend bool operator==(const TimelineEntry&, const TimelineEntry&) = default;
};

struct TimelineDiagnostics {
  std::size_t unparsable = 0;        // UnparsableTimestamp
  std::size_t invalid_date = 0;      // InvalidCalendarDate
  std::size_t inconsistent = 0;      // parsed but too far from the anchor
  std::size_t clamped = 0;           // pulled forward to keep order
};

struct FrameTimeline {
  std::vector<TimelineEntry> entries;  // sorted by frame_index
  double nominal_fps = kDefaultFps;
  std::size_t anchor_frame = 0;
  TimelineDiagnostics diagnostics;

  const TimelineEntry* find(std::size_t frame_index) const {
    auto it = std::lower_bound(
        entries.begin(), entries.end(), frame_index,
        [](const TimelineEntry& e, std::size_t idx) { return e.frame_index < idx; });
    if (it == entries.end() || it->frame_index != frame_index) return nullptr;
    return &*it;
  }

  std::size_t repaired_count() const {
    return static_cast<std::size_t>(std::count_if(
        entries.begin(), entries.end(), [](const TimelineEntry& e) { return e.repaired; }));
  }
};

/// Builds a timestamp for every frame in `raws`.
///
/// Each parsed frame k implies a session start of t_k - k/fps. The anchor set
/// is the largest group of parsed frames whose implied starts lie within the
/// tolerance of each other; its lowest frame is the anchor. Frames that did
/// not parse, or whose parse is off the anchor extrapolation by more than the
/// tolerance, get anchor_time + (k - anchor)/fps instead. A final pass keeps
/// the sequence non-decreasing.
inline FrameTimeline build_timeline(std::vector<RawOverlayText> raws,
                                    double nominal_fps = kDefaultFps,
                                    const OverlayGrammar& grammar = {}) {
  if (!(nominal_fps > 0.0) || !std::isfinite(nominal_fps)) {
    throw std::invalid_argument("nominal_fps must be positive");
  }
  std::stable_sort(raws.begin(), raws.end(),
                   [](const RawOverlayText& a, const RawOverlayText& b) {
                     return a.frame_index < b.frame_index;
                   });
  for (std::size_t i = 1; i < raws.size(); ++i) {
    if (raws[i].frame_index == raws[i - 1].frame_index) {
      throw Error(ErrorCode::kMalformedManifest,
                  fmt::format("duplicate frame_index {}", raws[i].frame_index));
    }
  }

  FrameTimeline timeline;
  timeline.nominal_fps = nominal_fps;
  const double ms_per_frame = 1000.0 / nominal_fps;

  struct Parsed {
    std::size_t slot;
    std::int64_t ms;
    double implied_start;
  };
  std::vector<std::optional<std::int64_t>> parsed_ms(raws.size());
  std::vector<Parsed> parsed;
  for (std::size_t i = 0; i < raws.size(); ++i) {
    try {
      const auto ts = normalize_overlay_text(raws[i].text, grammar);
      const std::int64_t ms = ts.to_overlay_time().time_since_epoch().count();
      parsed_ms[i] = ms;
      parsed.push_back({i, ms, static_cast<double>(ms) -
                                   static_cast<double>(raws[i].frame_index) * ms_per_frame});
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kInvalidCalendarDate) {
        ++timeline.diagnostics.invalid_date;
      } else {
        ++timeline.diagnostics.unparsable;
      }
    }
  }

  // Largest window of implied starts no wider than the tolerance.
  std::vector<Parsed> by_start = parsed;
  std::sort(by_start.begin(), by_start.end(), [](const Parsed& a, const Parsed& b) {
    return a.implied_start < b.implied_start ||
           (a.implied_start == b.implied_start && a.slot < b.slot);
  });
  const double tolerance = static_cast<double>(kMonotonicityTolerance.count());
  std::size_t best_size = 0;
  std::size_t best_anchor = 0;
  for (std::size_t lo = 0, hi = 0; lo < by_start.size(); ++lo) {
    hi = std::max(hi, lo);
    while (hi + 1 < by_start.size() &&
           by_start[hi + 1].implied_start - by_start[lo].implied_start <= tolerance + 1e-9) {
      ++hi;
    }
    const std::size_t size = hi - lo + 1;
    std::size_t first = by_start[lo].slot;
    for (std::size_t i = lo; i <= hi; ++i) first = std::min(first, by_start[i].slot);
    if (size > best_size || (size == best_size && first < best_anchor)) {
      best_size = size;
      best_anchor = first;
    }
  }
  if (best_size < 2) {
    throw Error(ErrorCode::kNoAnchor,
                fmt::format("need at least 2 mutually consistent frames, found {}", best_size));
  }

  const std::size_t anchor_frame = raws[best_anchor].frame_index;
  const std::int64_t anchor_ms = *parsed_ms[best_anchor];
  timeline.anchor_frame = anchor_frame;
  timeline.entries.reserve(raws.size());
  std::int64_t previous = 0;
  for (std::size_t i = 0; i < raws.size(); ++i) {
    const double expected =
        static_cast<double>(anchor_ms) +
        (static_cast<double>(raws[i].frame_index) - static_cast<double>(anchor_frame)) *
            ms_per_frame;
    std::int64_t ms = 0;
    bool repaired = false;
    if (parsed_ms[i] && std::abs(static_cast<double>(*parsed_ms[i]) - expected) <=
                            tolerance + 1e-9) {
      ms = *parsed_ms[i];
    } else {
      if (parsed_ms[i]) ++timeline.diagnostics.inconsistent;
      ms = std::llround(expected);
      repaired = true;
    }
    if (i > 0 && ms < previous) {
      ms = previous;
      repaired = true;
      ++timeline.diagnostics.clamped;
    }
    previous = ms;
    timeline.entries.push_back(
        {raws[i].frame_index, CanonicalTimestamp::from_overlay_time(OverlayTime{Millis{ms}}),
         repaired});
  }
  return timeline;
}

}  // namespace roadwatch
