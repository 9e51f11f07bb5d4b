// Copyright 2026 The TraceBench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Little-endian byte packing shared by the on-disk and wire formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "tracebench/error.hpp"

namespace tracebench::bytes {

inline void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFFu));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFFu));
}

inline void put_f32(std::vector<std::uint8_t>& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

inline void require(std::span<const std::uint8_t> in, std::size_t offset, std::size_t n,
                    const char* what) {
  if (offset > in.size() || in.size() - offset < n) {
    throw TruncatedError(std::string("truncated stream while reading ") + what);
  }
}

inline std::uint16_t get_u16(std::span<const std::uint8_t> in, std::size_t& offset) {
  require(in, offset, 2, "u16");
  const auto v = static_cast<std::uint16_t>(in[offset] | (in[offset + 1] << 8));
  offset += 2;
  return v;
}

inline std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t& offset) {
  require(in, offset, 4, "u32");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[offset + static_cast<std::size_t>(i)]) << (8 * i);
  offset += 4;
  return v;
}

inline float get_f32(std::span<const std::uint8_t> in, std::size_t& offset) {
  return std::bit_cast<float>(get_u32(in, offset));
}

}  // namespace tracebench::bytes
