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
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <string_view>
#include <system_error>

namespace roadwatch {

/// WGS84 position in decimal degrees.
struct LatLon {
  double lat = 0.0;
  double lon = 0.0;

  friend bool operator==(const LatLon&, const LatLon&) = default;
};

constexpr bool is_valid(const LatLon& p) {
  return p.lat >= -90.0 && p.lat <= 90.0 && p.lon >= -180.0 && p.lon <= 180.0;
}

inline constexpr double kEarthRadiusM = 6371000.0;
inline constexpr int kCoordinateDecimals = 5;

/// Rounds to 5 fractional digits, halves away from zero, on the decimal value
/// of `x` (20.000025 becomes 20.00003 even though its binary neighbour is
/// slightly below). The result is n / 1e5 for an integer n, so its shortest
/// round-trip representation never shows more than 5 decimals.
inline double round_5dp(double x) {
  if (!std::isfinite(x)) return x;
  // Printing with 9 decimals snaps away binary representation error first.
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), std::fabs(x),
                           std::chars_format::fixed, 9);
  if (res.ec != std::errc{}) return x;
  const std::string_view text(buf.data(), static_cast<std::size_t>(res.ptr - buf.data()));
  const auto dot = text.find('.');
  std::int64_t scaled = 0;
  for (char c : text.substr(0, dot)) scaled = scaled * 10 + (c - '0');
  for (std::size_t i = 1; i <= kCoordinateDecimals; ++i) {
    scaled = scaled * 10 + (text[dot + i] - '0');
  }
  if (text[dot + kCoordinateDecimals + 1] >= '5') ++scaled;
  const double magnitude = static_cast<double>(scaled) / 1e5;
  return std::signbit(x) && scaled != 0 ? -magnitude : magnitude;
}

inline LatLon round_5dp(const LatLon& p) { return {round_5dp(p.lat), round_5dp(p.lon)}; }

/// Number of digits after the decimal point in the shortest representation
/// that round-trips `x`.
inline int fractional_digits(double x) {
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x, std::chars_format::fixed);
  const std::string_view text(buf.data(), static_cast<std::size_t>(res.ptr - buf.data()));
  const auto dot = text.find('.');
  return dot == std::string_view::npos ? 0 : static_cast<int>(text.size() - dot - 1);
}

/// Great-circle distance in meters on a sphere of radius `earth_radius_m`.
inline double haversine_m(const LatLon& a, const LatLon& b,
                          double earth_radius_m = kEarthRadiusM) {
  constexpr double kDegToRad = std::numbers::pi / 180.0;
  const double phi1 = a.lat * kDegToRad;
  const double phi2 = b.lat * kDegToRad;
  const double dphi = (b.lat - a.lat) * kDegToRad;
  const double dlambda = (b.lon - a.lon) * kDegToRad;
  const double s1 = std::sin(dphi / 2.0);
  const double s2 = std::sin(dlambda / 2.0);
  const double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
  return 2.0 * earth_radius_m * std::asin(std::sqrt(std::min(1.0, h)));
}

}  // namespace roadwatch
