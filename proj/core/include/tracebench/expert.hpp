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
#include <span>
#include <vector>

#include "tracebench/sim.hpp"

namespace tracebench {

// Yoshikawa index sqrt(det(J J^T)) of the planar position Jacobian.
double manipulability(std::span<const double> q, std::span<const double> link_lengths);

// Largest index over `samples` seeded joint configurations drawn uniformly
// from [-pi, pi]^n. Results are cached per (links, samples, seed).
double estimate_max_manipulability(std::span<const double> link_lengths, int samples = 10000,
                                   std::uint64_t seed = 0);

// Strict: w == lambda * w_max does not alert.
bool singularity_alert(double w, double w_max, double lambda = 0.2);

struct ExpertGains {
  double lookahead = 0.03;     // m along the local tangent
  double centering = 1.0;      // 1/s
  double speed = 0.12;         // m/s
  double stop_fraction = 0.975;

  void validate() const;
};

// Pure pursuit along the grasped object. Holds the current pose once the
// contact is past stop_fraction * L, or when no contact is present.
GripperAction expert_action(const WorldState& world, const ExpertGains& gains, double dt = 1.0 / 30.0);

// Action that keeps the gripper where it is.
GripperAction hold_action(const WorldState& world);

}  // namespace tracebench
