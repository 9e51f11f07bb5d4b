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

#include <span>

#include <Eigen/Core>

#include "tracebench/geometry.hpp"
#include "tracebench/sim.hpp"

namespace tracebench {

// Planar serial chain with revolute joints; joint angles are link-relative.
Vec2 forward_kinematics(const Vec2& base, std::span<const double> link_lengths,
                        std::span<const double> q);

// 2 x n position Jacobian of the end point.
Eigen::MatrixXd position_jacobian(std::span<const double> link_lengths, std::span<const double> q);

// Maximum reach of the chain.
double arm_reach(std::span<const double> link_lengths);

// Damped least-squares inverse kinematics started from `arm.joint_angles`.
// Returns the joint vector closest (in the iteration sense) to the seed that
// places the end point at `target`. Throws StateError if the residual stays
// above `tolerance`.
std::array<double, 3> solve_ik(const ArmState& arm, const Vec2& target, double tolerance = 1e-9);

}  // namespace tracebench
