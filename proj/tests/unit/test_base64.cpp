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

#include <random>

#include "roadwatch/base64.hpp"

using namespace roadwatch;

namespace {

std::vector<std::uint8_t> bytes(std::initializer_list<int> v) {
  std::vector<std::uint8_t> out;
  for (int b : v) out.push_back(static_cast<std::uint8_t>(b));
  return out;
}

}  // namespace

TEST(Base64, Golden) {
  EXPECT_EQ(encode_evidence(bytes({0x00, 0x01, 0x02})), "AAEC");
  EXPECT_EQ(encode_evidence(std::string_view("")), "");
  EXPECT_EQ(encode_evidence(std::string_view("f")), "Zg==");
  EXPECT_EQ(encode_evidence(std::string_view("fo")), "Zm8=");
  EXPECT_EQ(encode_evidence(std::string_view("foo")), "Zm9v");
  EXPECT_EQ(encode_evidence(std::string_view("foobar")), "Zm9vYmFy");
  EXPECT_EQ(encode_evidence(bytes({0xFB, 0xFF})), "+/8=");
  EXPECT_EQ(decode_evidence("AAEC"), bytes({0x00, 0x01, 0x02}));
}

TEST(Base64, StrictDecoding) {
  for (const char* bad : {"A", "AAE", "AA=C", "AAEC=", "A===", "AB==", "Zm9=", "Zm 9v", "Zm9v\n",
                          "-_8=", "Zg=="
                                  "Zg=="}) {
    try {
      decode_evidence(bad);
      ADD_FAILURE() << "accepted " << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kMalformedBase64) << bad;
    }
  }
}

TEST(Base64, RoundTripRandomBlobs) {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<std::size_t> len(0, 256 * 1024);
  std::uniform_int_distribution<int> byte(0, 255);
  for (int i = 0; i < 200; ++i) {
    std::vector<std::uint8_t> blob(i < 10 ? static_cast<std::size_t>(i) : len(rng));
    for (auto& b : blob) b = static_cast<std::uint8_t>(byte(rng));
    const auto text = encode_evidence(blob);
    EXPECT_EQ(text.size(), (blob.size() + 2) / 3 * 4);
    EXPECT_EQ(decode_evidence(text), blob);
  }
}
