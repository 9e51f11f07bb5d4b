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

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tracebench/image.hpp"
#include "tracebench/sim.hpp"
#include "tracebench/tactile.hpp"

namespace tracebench::wire {

// One message: a JSON header frame, then one binary frame per entry of
// header["attachments"]. Every frame is a u32 little-endian length prefix
// followed by that many bytes.
struct Message {
  nlohmann::json header;
  std::vector<std::vector<std::uint8_t>> attachments;
  bool operator==(const Message&) const = default;
};

inline constexpr std::uint32_t kMaxFrame = 16u << 20;

std::vector<std::uint8_t> encode(const Message& message);

// Incremental decoder for a byte stream.
class Decoder {
 public:
  void feed(std::span<const std::uint8_t> bytes);
  // Next complete message, if any. Throws FormatError on a malformed header
  // or an oversized frame; the stream is unusable afterwards.
  std::optional<Message> next();

 private:
  std::optional<std::vector<std::uint8_t>> frame();
  std::vector<std::uint8_t> buffer_;
  std::size_t offset_ = 0;
  std::optional<Message> pending_;
  std::size_t awaiting_ = 0;
};

// Attaches an image; the header entry records its name and shape.
void attach_image(Message& message, const std::string& name, const Image& image);
Image attached_image(const Message& message, std::size_t index);

struct StateExtras {
  double manipulability = 0.0;
  bool alert = false;
  bool recording = false;
  std::optional<ContactEstimate> estimate;
  std::optional<Vec2> estimate_world;
};

// Gripper, downsampled polyline (<= max_points), contact estimate,
// completion so far, manipulability and alert flag.
nlohmann::json state_payload(const WorldState& world, const StateExtras& extras, int max_points = 64);

// Full-state projection for late joiners: the state payload plus the full
// polyline and the grasp bookkeeping.
nlohmann::json snapshot_payload(const WorldState& world, const StateExtras& extras);

}  // namespace tracebench::wire
