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

#include "tracebench/render.hpp"

#include <algorithm>
#include <cmath>

#include "tracebench/error.hpp"

namespace tracebench {

namespace {

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (p - (a + t * ab)).norm();
}

void stamp_disk(Image& img, const Vec2& center, double radius, std::uint8_t value) {
  const int c0 = std::max(0, static_cast<int>(std::floor(center.x() - radius)));
  const int c1 = std::min(img.width - 1, static_cast<int>(std::ceil(center.x() + radius)));
  const int r0 = std::max(0, static_cast<int>(std::floor(center.y() - radius)));
  const int r1 = std::min(img.height - 1, static_cast<int>(std::ceil(center.y() + radius)));
  for (int r = r0; r <= r1; ++r) {
    for (int c = c0; c <= c1; ++c) {
      const Vec2 q(c + 0.5, r + 0.5);
      if ((q - center).norm() <= radius) img.at(c, r) = std::max(img.at(c, r), value);
    }
  }
}

}  // namespace

ViewTransform ViewTransform::for_workspace(const Workspace& ws, int resolution) {
  const double side = std::max(ws.x_max - ws.x_min, ws.y_max - ws.y_min);
  const double cx = 0.5 * (ws.x_min + ws.x_max);
  const double cy = 0.5 * (ws.y_min + ws.y_max);
  return {cx - 0.5 * side, cy + 0.5 * side, resolution / side};
}

Image render_visual(const WorldState& world, int resolution) {
  if (resolution < 32 || resolution > 256) {
    throw PreconditionError("visual resolution must lie in [32, 256]");
  }
  Image img(resolution, resolution, kVisualBackground);
  const ViewTransform view = ViewTransform::for_workspace(world.workspace, resolution);

  const auto& x = world.rope.particles;
  if (!x.empty()) stamp_disk(img, view.to_pixel(world.anchor), 1.2, kVisualAnchor);
  if (world.workspace.contains(world.gripper.pose.position())) {
    const Vec2 g = view.to_pixel(world.gripper.pose.position());
    stamp_disk(img, g, 1.8, kVisualGripper);
    const Vec2 heading = view.to_pixel(world.gripper.pose.apply({0.03, 0.0}));
    stamp_disk(img, heading, 0.9, kVisualGripper);
  }

  // Coverage is 1 within half a pixel of the centerline, fading to 0 at 1.5 px.
  for (std::size_t j = 0; j + 1 < x.size(); ++j) {
    const Vec2 a = view.to_pixel(x[j]);
    const Vec2 b = view.to_pixel(x[j + 1]);
    const int c0 = std::max(0, static_cast<int>(std::floor(std::min(a.x(), b.x()) - 2.0)));
    const int c1 = std::min(resolution - 1, static_cast<int>(std::ceil(std::max(a.x(), b.x()) + 2.0)));
    const int r0 = std::max(0, static_cast<int>(std::floor(std::min(a.y(), b.y()) - 2.0)));
    const int r1 = std::min(resolution - 1, static_cast<int>(std::ceil(std::max(a.y(), b.y()) + 2.0)));
    for (int r = r0; r <= r1; ++r) {
      for (int c = c0; c <= c1; ++c) {
        const double d = point_segment_distance({c + 0.5, r + 0.5}, a, b);
        const double coverage = std::clamp(1.5 - d, 0.0, 1.0);
        if (coverage <= 0.0) continue;
        const double v = kVisualBackground + (255.0 - kVisualBackground) * coverage;
        const auto value = static_cast<std::uint8_t>(std::lround(v));
        img.at(c, r) = std::max(img.at(c, r), value);
      }
    }
  }
  return img;
}

}  // namespace tracebench
