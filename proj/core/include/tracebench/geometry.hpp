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

#include <cmath>
#include <numbers>

#include <Eigen/Core>

namespace tracebench {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * std::numbers::pi);
  if (a <= -std::numbers::pi) a += 2.0 * std::numbers::pi;
  return a;
}

// Rigid planar transform. Maps frame-local points into the parent frame.
struct Pose2 {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  Vec2 position() const { return {x, y}; }
  Vec2 x_axis() const { return {std::cos(theta), std::sin(theta)}; }
  Vec2 y_axis() const { return {-std::sin(theta), std::cos(theta)}; }

  Vec2 apply(const Vec2& local) const {
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    return {x + c * local.x() - s * local.y(), y + s * local.x() + c * local.y()};
  }

  Vec2 inverse_apply(const Vec2& world) const {
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    const double dx = world.x() - x;
    const double dy = world.y() - y;
    return {c * dx + s * dy, -s * dx + c * dy};
  }

  Pose2 compose(const Pose2& rhs) const {
    const Vec2 t = apply(rhs.position());
    return {t.x(), t.y(), wrap_angle(theta + rhs.theta)};
  }

  Pose2 inverse() const {
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    return {-c * x - s * y, s * x - c * y, wrap_angle(-theta)};
  }

  Eigen::Matrix3d matrix() const {
    Eigen::Matrix3d m;
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    m << c, -s, x, s, c, y, 0.0, 0.0, 1.0;
    return m;
  }

  bool operator==(const Pose2&) const = default;
};

inline double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

}  // namespace tracebench
