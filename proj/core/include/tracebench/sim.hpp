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

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tracebench/geometry.hpp"

namespace tracebench {

// Object analogs of the seen (shoelace, cable, towel, cloth) and unseen
// (rope, napkin) objects. The 2-D presets trace a hem and feel a constant
// lateral pull from the fabric hanging outside the fingertips.
enum class ObjectPreset { Shoelace, Cable, Towel, Cloth, Rope, Napkin };

inline constexpr std::array<ObjectPreset, 6> kAllPresets = {
    ObjectPreset::Shoelace, ObjectPreset::Cable, ObjectPreset::Towel,
    ObjectPreset::Cloth,    ObjectPreset::Rope,  ObjectPreset::Napkin};

std::string_view to_string(ObjectPreset preset);
ObjectPreset preset_from_string(std::string_view name);

struct PresetParams {
  double friction_coeff = 0.5;
  double compliance = 1e-9;
  double dangling_pull = 0.0;
  double diameter = 0.006;  // meters; also the tactile band width
  std::uint32_t texture_seed = 0;
  bool two_dimensional = false;
};

PresetParams preset_params(ObjectPreset preset);

enum class Layout { Crumpled, Straight };

struct Workspace {
  double x_min = -0.10;
  double x_max = 0.65;
  double y_min = -0.40;
  double y_max = 0.40;

  bool contains(const Vec2& p) const {
    return p.x() >= x_min && p.x() <= x_max && p.y() >= y_min && p.y() <= y_max;
  }
  Vec2 clamp(const Vec2& p) const;
  bool operator==(const Workspace&) const = default;
};

struct ArmConfig {
  Vec2 base{0.25, -0.60};
  std::array<double, 3> link_lengths{0.40, 0.35, 0.30};
};

struct SimConfig {
  double dt = 1.0 / 30.0;
  int solver_iterations = 20;
  double length = 0.5;     // L, meters
  int n_particles = 51;    // segments = n_particles - 1
  ObjectPreset preset = ObjectPreset::Rope;
  Layout layout = Layout::Crumpled;
  Workspace workspace{};
  Vec2 anchor{0.0, 0.0};                  // p_0
  double heading_spread = 0.5235987755982988;  // initial lay direction in [-spread, spread]
  double grasp_fraction = 0.04;           // initial contact arc length / L, at most 0.05
  double sensor_length = 0.024;           // window extent along the finger (gripper y)
  double sensor_width = 0.024;            // window extent across the finger (gripper x)
  double aperture_max = 0.03;
  double max_speed = 0.4;                 // m/s
  double max_angular_speed = 3.0;         // rad/s
  double collision_radius = 0.012;        // gripper-to-pin distance
  double tension_limit = 1.5;             // pin tension proxy threshold
  double incoming_drag = 0.25;            // lateral drag of rope entering the fingers
  double dangle_mobility = 0.1;           // slip speed per unit dangling pull
  ArmConfig arm{};

  double rest_length() const { return length / static_cast<double>(n_particles - 1); }
  void validate() const;
};

struct RopeState {
  std::vector<Vec2> particles;
  double rest_length = 0.0;
  int pinned_index = 0;
  double friction_coeff = 0.5;
  double compliance = 1e-9;
  double dangling_pull = 0.0;
  double diameter = 0.006;
  std::uint32_t texture_seed = 0;

  double total_rest_length() const {
    return particles.size() < 2 ? 0.0 : rest_length * static_cast<double>(particles.size() - 1);
  }
  // Point and unit tangent at arc length s from the pinned end.
  Vec2 point_at(double s) const;
  Vec2 tangent_at(double s) const;
  bool operator==(const RopeState&) const = default;
};

struct GripperState {
  Pose2 pose{};
  double aperture = 0.0;
  bool grasping = false;
  double window_length = 0.024;  // along the finger
  double window_width = 0.024;   // across the finger
  bool operator==(const GripperState&) const = default;
};

// Material contact bookkeeping: arc length held between the fingers and the
// contact offset along the finger, in the gripper frame.
struct GraspState {
  double arc = 0.0;
  double offset = 0.0;
  bool operator==(const GraspState&) const = default;
};

struct ArmState {
  std::array<double, 3> joint_angles{};
  std::array<double, 3> link_lengths{};
  Vec2 base{0.0, 0.0};
  bool operator==(const ArmState&) const = default;
};

enum class Status { Running, Dropped, Collided, Done };
std::string_view to_string(Status status);

struct WorldState {
  RopeState rope;
  GripperState gripper;
  ArmState arm;
  GraspState grasp;
  Workspace workspace{};
  ObjectPreset preset = ObjectPreset::Rope;
  double length = 0.0;      // L
  Vec2 anchor{0.0, 0.0};    // p_0
  double time = 0.0;
  std::int64_t tick = 0;
  double pin_tension = 0.0;
  Status status = Status::Running;
  bool operator==(const WorldState&) const = default;
};

struct GripperAction {
  Pose2 target_pose{};
  double target_aperture = 0.0;
};

struct Contact {
  double arc = 0.0;   // meters from p_0 along the rope
  Vec2 point{0.0, 0.0};
};

// Aperture that closes the fingers firmly on the object.
double grip_aperture(const RopeState& rope);

// Fraction of gripper motion that drags the rope instead of slipping along the
// finger. Derived from friction and grip squeeze.
double grip_stickiness(const RopeState& rope, double aperture);

WorldState spawn(const SimConfig& config, std::uint64_t seed);
WorldState step(const WorldState& world, const GripperAction& action, const SimConfig& config);

// Crossing of the rope polyline with the closed finger segment, nearest the
// tracked material contact. Ground truth for the tactile pipeline.
std::optional<Contact> contact_point(const WorldState& world);

// Marks a running world finished (e.g. the harness step budget ran out).
WorldState finish(const WorldState& world);

// Largest segment strain |len/rest - 1| over the rope.
double max_strain(const RopeState& rope);

}  // namespace tracebench
