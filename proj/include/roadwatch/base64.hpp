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

// RFC 4648 Base64, standard alphabet, padded. Evidence frames are stored and
// served inline in this form.

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "roadwatch/errors.hpp"

namespace roadwatch {

namespace detail {

inline constexpr std::string_view kBase64Alphabet =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

inline constexpr std::array<std::int8_t, 256> kBase64Reverse = [] {
  std::array<std::int8_t, 256> table{};
  table.fill(-1);
  for (std::size_t i = 0; i < kBase64Alphabet.size(); ++i) {
    table[static_cast<unsigned char>(kBase64Alphabet[i])] = static_cast<std::int8_t>(i);
  }
  return table;
}();

}  // namespace detail

inline std::string encode_evidence(std::span<const std::uint8_t> bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 3 <= bytes.size(); i += 3) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out += detail::kBase64Alphabet[(v >> 18) & 0x3F];
    out += detail::kBase64Alphabet[(v >> 12) & 0x3F];
    out += detail::kBase64Alphabet[(v >> 6) & 0x3F];
    out += detail::kBase64Alphabet[v & 0x3F];
  }
  const std::size_t rest = bytes.size() - i;
  if (rest == 1) {
    const std::uint32_t v = bytes[i] << 16;
    out += detail::kBase64Alphabet[(v >> 18) & 0x3F];
    out += detail::kBase64Alphabet[(v >> 12) & 0x3F];
    out += "==";
  } else if (rest == 2) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8);
    out += detail::kBase64Alphabet[(v >> 18) & 0x3F];
    out += detail::kBase64Alphabet[(v >> 12) & 0x3F];
    out += detail::kBase64Alphabet[(v >> 6) & 0x3F];
    out += '=';
  }
  return out;
}

inline std::string encode_evidence(std::string_view bytes) {
  return encode_evidence(std::span<const std::uint8_t>(
      reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
}

/// Strict decode: length must be a multiple of 4, padding only at the end,
/// and unused trailing bits must be zero.
inline std::vector<std::uint8_t> decode_evidence(std::string_view text) {
  if (text.size() % 4 != 0) {
    throw Error(ErrorCode::kMalformedBase64, "Base64 length is not a multiple of 4");
  }
  std::vector<std::uint8_t> out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    const bool last = i + 4 == text.size();
    int pad = 0;
    if (last && text[i + 3] == '=') pad = text[i + 2] == '=' ? 2 : 1;
    std::uint32_t v = 0;
    for (std::size_t k = 0; k < 4; ++k) {
      const char c = text[i + k];
      std::int8_t d = 0;
      if (k >= 4 - static_cast<std::size_t>(pad)) {
        d = 0;
      } else {
        d = detail::kBase64Reverse[static_cast<unsigned char>(c)];
        if (d < 0) {
          throw Error(ErrorCode::kMalformedBase64, "invalid Base64 character");
        }
      }
      v = (v << 6) | static_cast<std::uint32_t>(d);
    }
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    if (pad < 2) out.push_back(static_cast<std::uint8_t>(v >> 8));
    if (pad < 1) out.push_back(static_cast<std::uint8_t>(v));
    if ((pad == 1 && (v & 0xFF) != 0) || (pad == 2 && (v & 0xFFFF) != 0)) {
      throw Error(ErrorCode::kMalformedBase64, "non-canonical Base64 padding bits");
    }
  }
  return out;
}

}  // namespace roadwatch
