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

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "roadwatch/gps_sync.hpp"

using namespace roadwatch;
using namespace std::chrono_literals;

namespace {

const UtcTime kT0 = std::chrono::sys_days{std::chrono::year{2025} / 5 / 20} + 9h;

GpsTrack two_fix(Millis span, LatLon a, LatLon b) {
  return GpsTrack::from_fixes({{kT0, a}, {kT0 + span, b}});
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error";
  return ErrorCode::kStorageFailure;
}

CanonicalTimestamp overlay_at(UtcTime t, Millis offset = 0ms) {
  return CanonicalTimestamp::from_overlay_time(OverlayTime{(t + offset).time_since_epoch()});
}

}  // namespace

TEST(ParseGpsLog, CsvInTimeOrder) {
  const auto track = parse_gps_log(
      "time_utc,lat,lon\n"
      "2025-05-20T09:00:02Z,20.2,85.2\n"
      "2025-05-20T09:00:00Z,20.0,85.0\n"
      "2025-05-20T09:00:01Z,20.1,85.1\n",
      GpsLogFormat::kCsv);
  ASSERT_EQ(track.size(), 3u);
  EXPECT_EQ(track.fixes()[0].position, (LatLon{20.0, 85.0}));
  EXPECT_EQ(track.fixes()[2].position, (LatLon{20.2, 85.2}));
  EXPECT_EQ(track.start(), kT0);
  EXPECT_EQ(track.end(), kT0 + 2s);
}

TEST(ParseGpsLog, DuplicateTimestampsKeepFirst) {
  const auto track = parse_gps_log(
      "lat,lon,time_utc,speed\n"
      "20.0,85.0,2025-05-20T09:00:00Z,3\n"
      "21.0,86.0,2025-05-20T09:00:00Z,3\n"
      "20.1,85.1,2025-05-20T14:30:01+05:30,3\n",
      GpsLogFormat::kCsv);
  ASSERT_EQ(track.size(), 2u);
  EXPECT_EQ(track.fixes()[0].position, (LatLon{20.0, 85.0}));
  EXPECT_EQ(track.fixes()[1].time_utc, kT0 + 1s);
}

TEST(ParseGpsLog, CommentsBlankLinesAndBom) {
  const auto track = parse_gps_log(
      "\xEF\xBB\xBFtime_utc,lat,lon\r\n# logger v2\r\n\r\n2025-05-20T09:00:00Z,20,85\r\n",
      GpsLogFormat::kCsv);
  EXPECT_EQ(track.size(), 1u);
}

TEST(ParseGpsLog, Errors) {
  EXPECT_EQ(code_of([] { parse_gps_log("time_utc,lat,lon\n", GpsLogFormat::kCsv); }),
            ErrorCode::kEmptyTrack);
  EXPECT_EQ(code_of([] { parse_gps_log("", GpsLogFormat::kCsv); }), ErrorCode::kEmptyTrack);
  EXPECT_EQ(code_of([] { parse_gps_log("when,lat,lon\n", GpsLogFormat::kCsv); }),
            ErrorCode::kMalformedLog);
  EXPECT_EQ(code_of([] {
              parse_gps_log("time_utc,lat,lon\n2025-05-20T09:00:00Z,20\n", GpsLogFormat::kCsv);
            }),
            ErrorCode::kMalformedLog);
  EXPECT_EQ(code_of([] {
              parse_gps_log("time_utc,lat,lon\nyesterday,20,85\n", GpsLogFormat::kCsv);
            }),
            ErrorCode::kMalformedLog);
  EXPECT_EQ(code_of([] {
              parse_gps_log("time_utc,lat,lon\n2025-05-20T09:00:00Z,95,85\n", GpsLogFormat::kCsv);
            }),
            ErrorCode::kMalformedLog);
  EXPECT_EQ(code_of([] { parse_gps_log("<gpx><trk>", GpsLogFormat::kGpx); }),
            ErrorCode::kMalformedLog);
  EXPECT_EQ(code_of([] { parse_gps_log("<gpx/>", GpsLogFormat::kGpx); }),
            ErrorCode::kEmptyTrack);
}

TEST(ParseGpsLog, Gpx) {
  const auto track = parse_gps_log(
      R"(<?xml version="1.0"?>
<gpx version="1.1" xmlns="http://www.topografix.com/GPX/1/1">
 <trk><trkseg>
  <trkpt lat="20.00010" lon="85.0"><ele>3</ele><time>2025-05-20T09:00:10Z</time></trkpt>
  <trkpt lat="20.00000" lon="85.0"><time>2025-05-20T09:00:00Z</time></trkpt>
 </trkseg></trk>
</gpx>)",
      GpsLogFormat::kGpx);
  ASSERT_EQ(track.size(), 2u);
  EXPECT_EQ(track.start(), kT0);
  EXPECT_EQ(locate_utc(track, kT0 + 5s, LocateLimits{.max_gap = 10s}), (LatLon{20.00005, 85.0}));
}

TEST(ParseGpsLog, GuessFormat) {
  EXPECT_EQ(guess_gps_format("drive.GPX", ""), GpsLogFormat::kGpx);
  EXPECT_EQ(guess_gps_format("drive.csv", "<?xml"), GpsLogFormat::kCsv);
  EXPECT_EQ(guess_gps_format("blob", "  <?xml version"), GpsLogFormat::kGpx);
  EXPECT_EQ(guess_gps_format("blob", "time_utc,lat,lon"), GpsLogFormat::kCsv);
}

TEST(CalibrateOffset, Examples) {
  const UtcTime u = kT0;
  const std::vector<CanonicalTimestamp> ist{overlay_at(u, 19844s), overlay_at(u + 7s, 19844s)};
  const std::vector<UtcTime> utc{u, u + 7s};
  EXPECT_EQ(calibrate_offset(ist, utc).overlay_minus_utc, 19844s);
  EXPECT_EQ(calibrate_offset(ist, utc).seconds(), 19844.0);

  const std::vector<CanonicalTimestamp> same{overlay_at(u)};
  const std::vector<UtcTime> one{u};
  EXPECT_EQ(calibrate_offset(same, one).overlay_minus_utc, 0ms);

  const std::vector<CanonicalTimestamp> noisy{overlay_at(u, 10s), overlay_at(u + 1s, 12s),
                                              overlay_at(u + 2s, 11s)};
  const std::vector<UtcTime> at{u, u + 1s, u + 2s};
  EXPECT_EQ(calibrate_offset(noisy, at).overlay_minus_utc, 11s);
}

TEST(CalibrateOffset, ErrorsAndEvenCount) {
  EXPECT_EQ(code_of([] { calibrate_offset({}, {}); }), ErrorCode::kNoSamples);
  const std::vector<CanonicalTimestamp> two{overlay_at(kT0, 10s), overlay_at(kT0, 13s)};
  const std::vector<UtcTime> at{kT0, kT0};
  EXPECT_EQ(calibrate_offset(two, at).overlay_minus_utc, 11500ms);
  const std::vector<UtcTime> short_list{kT0};
  EXPECT_THROW(calibrate_offset(two, short_list), std::invalid_argument);
}

TEST(CalibrateOffset, MedianOracleAndPermutationInvariance) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = std::uniform_int_distribution<int>(1, 15)(rng);
    std::vector<CanonicalTimestamp> ov;
    std::vector<UtcTime> ut;
    std::vector<std::int64_t> diffs;
    for (int i = 0; i < n; ++i) {
      const Millis d{std::uniform_int_distribution<std::int64_t>(-40'000'000, 40'000'000)(rng)};
      const UtcTime t = kT0 + Millis{i * 1000};
      ov.push_back(overlay_at(t, d));
      ut.push_back(t);
      diffs.push_back(d.count());
    }
    // Brute-force median: the element with as many values below as above.
    std::sort(diffs.begin(), diffs.end());
    const std::int64_t want =
        n % 2 ? diffs[n / 2]
              : static_cast<std::int64_t>(std::floor((diffs[n / 2 - 1] + diffs[n / 2]) / 2.0));
    EXPECT_EQ(calibrate_offset(ov, ut).overlay_minus_utc.count(), want);

    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<CanonicalTimestamp> ov2;
    std::vector<UtcTime> ut2;
    for (auto p : perm) {
      ov2.push_back(ov[p]);
      ut2.push_back(ut[p]);
    }
    EXPECT_EQ(calibrate_offset(ov2, ut2), calibrate_offset(ov, ut));
  }
}

TEST(Locate, LinearMidpoint) {
  const auto track = two_fix(10s, {20.00000, 85.0}, {20.00010, 85.0});
  // The fixes are 10 s apart, beyond the default 5 s bracketing limit.
  EXPECT_EQ(locate(track, {}, overlay_at(kT0 + 5s), LocateLimits{.max_gap = 10s}),
            (LatLon{20.00005, 85.0}));
  try {
    locate(track, {}, overlay_at(kT0 + 5s));
    ADD_FAILURE() << "default limits accepted a 10 s gap";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kGapTooLarge);
  }
}

TEST(Locate, ExactFixTime) {
  const auto track = GpsTrack::from_fixes(
      {{kT0, {20.0, 85.0}}, {kT0 + 1s, {20.00001, 85.00002}}, {kT0 + 2s, {20.00003, 85.0}}});
  EXPECT_EQ(locate(track, {}, overlay_at(kT0 + 1s)), (LatLon{20.00001, 85.00002}));
}

TEST(Locate, HalfUpRoundingAtQuarter) {
  const auto track = two_fix(4s, {20.000000, 85.0}, {20.000100, 85.0});
  const LatLon p = locate(track, {}, overlay_at(kT0 + 1s));
  // 20.000025 in integer units of 1e-6 is 20000025; half-up at 1e-5 gives 2000003.
  const std::int64_t micro = 20'000'025;
  const std::int64_t want = (micro + 5) / 10;
  EXPECT_EQ(want, 2'000'003);
  EXPECT_EQ(p.lat, static_cast<double>(want) / 1e5);
  EXPECT_EQ(p.lat, 20.00003);
}

TEST(Locate, ClampAndOutsideTrack) {
  const auto track = two_fix(4s, {20.0, 85.0}, {20.0001, 85.0});
  EXPECT_EQ(locate_utc(track, kT0 - 1s), (LatLon{20.0, 85.0}));
  EXPECT_EQ(locate_utc(track, kT0 + 5s), (LatLon{20.0001, 85.0}));
  EXPECT_EQ(code_of([&] { locate_utc(track, kT0 - 1001ms); }), ErrorCode::kOutsideTrack);
  EXPECT_EQ(code_of([&] { locate_utc(track, kT0 + 5001ms); }), ErrorCode::kOutsideTrack);
  EXPECT_EQ(code_of([] { locate_utc(GpsTrack{}, kT0); }), ErrorCode::kEmptyTrack);
}

TEST(Locate, GapTooLarge) {
  const auto ok = two_fix(5s, {20.0, 85.0}, {20.0001, 85.0});
  EXPECT_NO_THROW(locate_utc(ok, kT0 + 2s));
  const auto wide = two_fix(5001ms, {20.0, 85.0}, {20.0001, 85.0});
  EXPECT_EQ(code_of([&] { locate_utc(wide, kT0 + 2s); }), ErrorCode::kGapTooLarge);
  // Exact fix times inside a wide gap are still answerable.
  EXPECT_EQ(locate_utc(wide, kT0), (LatLon{20.0, 85.0}));
}

TEST(Locate, Properties) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> lat(-60, 60), lon(-170, 170), step(-0.0003, 0.0003);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<GpsFix> fixes;
    LatLon p{lat(rng), lon(rng)};
    for (int i = 0; i < 10; ++i) {
      fixes.push_back({kT0 + Millis{i * 1000}, p});
      p = {p.lat + step(rng), p.lon + step(rng)};
    }
    const auto track = GpsTrack::from_fixes(fixes);
    const Millis shift{std::uniform_int_distribution<std::int64_t>(-1'000'000'000, 1'000'000'000)(rng)};
    std::vector<GpsFix> shifted = fixes;
    for (auto& f : shifted) f.time_utc += shift;
    const auto moved = GpsTrack::from_fixes(shifted);
    const Millis delta{std::uniform_int_distribution<std::int64_t>(-50'000'000, 50'000'000)(rng)};

    for (int q = 0; q < 20; ++q) {
      const UtcTime t = kT0 + Millis{std::uniform_int_distribution<int>(0, 9000)(rng)};
      const LatLon at = locate_utc(track, t);
      EXPECT_EQ(locate_utc(moved, t + shift), at);
      EXPECT_EQ(locate(track, ClockOffset{delta}, overlay_at(t, delta)), at);
      EXPECT_LE(fractional_digits(at.lat), 5);
      EXPECT_LE(fractional_digits(at.lon), 5);
      const auto next = std::upper_bound(fixes.begin(), fixes.end(), t,
                                         [](UtcTime v, const GpsFix& f) { return v < f.time_utc; });
      const auto& a = (next - 1)->position;
      const auto& b = next == fixes.end() ? a : next->position;
      EXPECT_GE(at.lat, round_5dp(std::min(a.lat, b.lat)));
      EXPECT_LE(at.lat, round_5dp(std::max(a.lat, b.lat)));
      EXPECT_GE(at.lon, round_5dp(std::min(a.lon, b.lon)));
      EXPECT_LE(at.lon, round_5dp(std::max(a.lon, b.lon)));
    }
  }
}

TEST(SampleTrack, InterpolatesEverySecond) {
  const auto track = two_fix(4s, {20.0, 85.0}, {20.0004, 85.0});
  const auto pts = sample_track(track);
  ASSERT_EQ(pts.size(), 5u);
  EXPECT_NEAR(pts[2].lat, 20.0002, 1e-12);
  EXPECT_EQ(pts.back().lat, 20.0004);
}

TEST(ClockOffsetTest, SecondsRoundTrip) {
  EXPECT_EQ(ClockOffset::from_seconds(19844).overlay_minus_utc, 19844000ms);
  EXPECT_EQ(ClockOffset::from_seconds(-1.5).seconds(), -1.5);
  EXPECT_EQ(to_utc(OverlayTime{(kT0 + 19844s).time_since_epoch()}, ClockOffset{19844s}), kT0);
}
