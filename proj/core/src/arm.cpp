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

#include "tracebench/arm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "tracebench/error.hpp"

namespace tracebench {

Vec2 forward_kinematics(const Vec2& base, std::span<const double> link_lengths,
                        std::span<const double> q) {
  Vec2 p = base;
  double angle = 0.0;
  for (std::size_t i = 0; i < link_lengths.size(); ++i) {
    angle += q[i];
    p += link_lengths[i] * Vec2(std::cos(angle), std::sin(angle));
  }
  return p;
}

Eigen::MatrixXd position_jacobian(std::span<const double> link_lengths, std::span<const double> q) {
  const auto n = static_cast<Eigen::Index>(link_lengths.size());
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(2, n);
  // Column j sums the contributions of links j..n-1.
  double angle = 0.0;
  std::vector<double> cumulative(link_lengths.size());
  for (std::size_t i = 0; i < link_lengths.size(); ++i) {
    angle += q[i];
    cumulative[i] = angle;
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j; i < n; ++i) {
      const double a = cumulative[static_cast<std::size_t>(i)];
      jac(0, j) -= link_lengths[static_cast<std::size_t>(i)] * std::sin(a);
      jac(1, j) += link_lengths[static_cast<std::size_t>(i)] * std::cos(a);
    }
  }
  return jac;
}

double arm_reach(std::span<const double> link_lengths) {
  return std::accumulate(link_lengths.begin(), link_lengths.end(), 0.0);
}

std::array<double, 3> solve_ik(const ArmState& arm, const Vec2& target, double tolerance) {
  std::array<double, 3> q = arm.joint_angles;
  constexpr int kMaxIterations = 200;
  double damping = 1e-2;
  Vec2 err = target - forward_kinematics(arm.base, arm.link_lengths, q);
  for (int it = 0; it < kMaxIterations && err.norm() > tolerance; ++it) {
    const Eigen::MatrixXd jac = position_jacobian(arm.link_lengths, q);
    const Eigen::Matrix2d jjt = jac * jac.transpose() + damping * damping * Eigen::Matrix2d::Identity();
    const Eigen::Vector3d dq = jac.transpose() * jjt.ldlt().solve(err);
    std::array<double, 3> trial = q;
    for (int i = 0; i < 3; ++i) trial[static_cast<std::size_t>(i)] += dq(i);
    const Vec2 trial_err = target - forward_kinematics(arm.base, arm.link_lengths, trial);
    if (trial_err.norm() < err.norm()) {
      q = trial;
      err = trial_err;
      damping = std::max(damping * 0.5, 1e-6);
    } else {
      damping *= 4.0;
    }
  }
  if (err.norm() > tolerance) {
    throw StateError("inverse kinematics did not converge; residual " + std::to_string(err.norm()));
  }
  return q;
}

}  // namespace tracebench
