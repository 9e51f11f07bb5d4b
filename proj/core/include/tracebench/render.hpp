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

#include "tracebench/image.hpp"
#include "tracebench/sim.hpp"

namespace tracebench {

inline constexpr std::uint8_t kVisualBackground = 24;
inline constexpr std::uint8_t kVisualGripper = 120;
inline constexpr std::uint8_t kVisualAnchor = 80;

// Maps world coordinates to continuous pixel coordinates of a top-down view
// covering the workspace (square, centered; pixel centers at +0.5).
struct ViewTransform {
  double origin_x = 0.0;  // world x at the left image edge
  double origin_y = 0.0;  // world y at the top image edge
  double pixels_per_meter = 1.0;

  static ViewTransform for_workspace(const Workspace& ws, int resolution);
  Vec2 to_pixel(const Vec2& world) const {
    return {(world.x() - origin_x) * pixels_per_meter, (origin_y - world.y()) * pixels_per_meter};
  }
};

// Top-down orthographic rasterization of the rope (bright, anti-aliased), the
// pinned end and the gripper (distinct mid intensities) on a constant
// background. Resolution must lie in [32, 256].
Image render_visual(const WorldState& world, int resolution);

}  // namespace tracebench
