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

#include <charconv>
#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <fmt/format.h>

namespace roadwatch {

using Millis = std::chrono::milliseconds;

// Absolute instants from the GPS logger.
using UtcTime = std::chrono::sys_time<Millis>;

// Wall-clock reading burned into the dashcam overlay. The overlay clock
// runs in some local zone, so it is kept apart from UtcTime at the type level.
using OverlayTime = std::chrono::local_time<Millis>;

namespace detail {

inline bool parse_fixed_digits(std::string_view text, std::size_t pos,
                               std::size_t count, int& out) {
  if (pos + count > text.size()) return false;
  int value = 0;
  for (std::size_t i = pos; i < pos + count; ++i) {
    const char c = text[i];
    if (c < '0' || c > '9') return false;
    value = value * 10 + (c - '0');
  }
  out = value;
  return true;
}

inline std::optional<std::chrono::sys_days> make_days(int y, int m, int d) {
  const std::chrono::year_month_day ymd{
      std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
      std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  return std::chrono::sys_days{ymd};
}

}  // namespace detail

/// Parses "YYYY-MM-DD" into the UTC midnight starting that day.
inline std::optional<UtcTime> parse_iso_date(std::string_view text) {
  int y = 0, m = 0, d = 0;
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  if (!detail::parse_fixed_digits(text, 0, 4, y) ||
      !detail::parse_fixed_digits(text, 5, 2, m) ||
      !detail::parse_fixed_digits(text, 8, 2, d)) {
    return std::nullopt;
  }
  auto days = detail::make_days(y, m, d);
  if (!days) return std::nullopt;
  return UtcTime{*days};
}

/// Parses the ISO 8601 subset used by GPS logs and the API:
///   YYYY-MM-DD('T'|' ')HH:MM:SS[.fraction][Z|(+|-)HH:MM]
/// A missing zone designator means UTC. Fractions beyond milliseconds are
/// truncated.
inline std::optional<UtcTime> parse_iso8601(std::string_view text) {
  if (text.size() < 19) return std::nullopt;
  auto day = parse_iso_date(text.substr(0, 10));
  if (!day) return std::nullopt;
  if (text[10] != 'T' && text[10] != 't' && text[10] != ' ') return std::nullopt;
  int hh = 0, mm = 0, ss = 0;
  if (!detail::parse_fixed_digits(text, 11, 2, hh) || text[13] != ':' ||
      !detail::parse_fixed_digits(text, 14, 2, mm) || text[16] != ':' ||
      !detail::parse_fixed_digits(text, 17, 2, ss)) {
    return std::nullopt;
  }
  if (hh > 23 || mm > 59 || ss > 59) return std::nullopt;

  std::size_t pos = 19;
  int millis = 0;
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    const std::size_t start = pos;
    int scale = 100;
    while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') {
      if (scale > 0) {
        millis += (text[pos] - '0') * scale;
        scale /= 10;
      }
      ++pos;
    }
    if (pos == start) return std::nullopt;
  }

  std::chrono::minutes zone{0};
  if (pos < text.size()) {
    const char z = text[pos];
    if (z == 'Z' || z == 'z') {
      ++pos;
    } else if (z == '+' || z == '-') {
      int zh = 0, zm = 0;
      if (!detail::parse_fixed_digits(text, pos + 1, 2, zh) ||
          pos + 3 >= text.size() || text[pos + 3] != ':' ||
          !detail::parse_fixed_digits(text, pos + 4, 2, zm) || zh > 23 || zm > 59) {
        return std::nullopt;
      }
      zone = std::chrono::minutes{zh * 60 + zm};
      if (z == '-') zone = -zone;
      pos += 6;
    } else {
      return std::nullopt;
    }
  }
  if (pos != text.size()) return std::nullopt;

  return *day + std::chrono::hours{hh} + std::chrono::minutes{mm} +
         std::chrono::seconds{ss} + Millis{millis} - zone;
}

/// Formats as "YYYY-MM-DDTHH:MM:SS[.mmm]Z"; the fraction appears only when
/// non-zero.
inline std::string format_iso8601(UtcTime t) {
  const auto day = std::chrono::floor<std::chrono::days>(t);
  const std::chrono::year_month_day ymd{day};
  const std::chrono::hh_mm_ss<Millis> tod{t - day};
  std::string out = fmt::format(
      "{:04d}-{:02d}-{:02d}T{:02d}:{:02d}:{:02d}", static_cast<int>(ymd.year()),
      static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
      tod.hours().count(), tod.minutes().count(), tod.seconds().count());
  if (const auto ms = tod.subseconds().count(); ms != 0) {
    out += fmt::format(".{:03d}", ms);
  }
  out += 'Z';
  return out;
}

}  // namespace roadwatch
