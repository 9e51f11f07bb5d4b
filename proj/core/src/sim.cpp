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

#include "tracebench/sim.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "tracebench/arm.hpp"
#include "tracebench/error.hpp"

namespace tracebench {

namespace {

constexpr double kSlideReferenceSpeed = 0.1;  // m/s, pin tension normalizer
constexpr int kSpawnRetries = 100;
constexpr double kTurnSigma = 0.45;           // rad per segment, crumpled random walk

Vec2 unit_or(const Vec2& v, const Vec2& fallback) {
  const double n = v.norm();
  return n > 1e-12 ? Vec2(v / n) : fallback;
}

std::pair<int, double> segment_of(const RopeState& rope, double s) {
  const int last = static_cast<int>(rope.particles.size()) - 2;
  int i = static_cast<int>(std::floor(s / rope.rest_length));
  i = std::clamp(i, 0, last);
  const double f = std::clamp(s / rope.rest_length - i, 0.0, 1.0);
  return {i, f};
}

void follow_the_leader(std::vector<Vec2>& x, std::size_t from, double rest) {
  for (std::size_t j = std::max<std::size_t>(from, 1); j < x.size(); ++j) {
    Vec2 fallback = j >= 2 ? unit_or(x[j - 1] - x[j - 2], Vec2::UnitX()) : Vec2(Vec2::UnitX());
    x[j] = x[j - 1] + rest * unit_or(x[j] - x[j - 1], fallback);
  }
}

void place_straight(std::vector<Vec2>& x, std::size_t count, const Vec2& origin, const Vec2& dir,
                    double rest) {
  for (std::size_t j = 0; j < count && j < x.size(); ++j) {
    x[j] = origin + rest * static_cast<double>(j) * dir;
  }
}

double proximal_strain(const std::vector<Vec2>& x, int last, double rest) {
  double worst = 0.0;
  for (int j = 0; j < last; ++j) {
    const double len = (x[static_cast<std::size_t>(j) + 1] - x[static_cast<std::size_t>(j)]).norm();
    worst = std::max(worst, std::abs(len / rest - 1.0));
  }
  return worst;
}

// XPBD distance constraints on particles 0..i+1 plus a rigid barycentric
// constraint holding the material point (i, f) at `target`.
void solve_slack(RopeState& rope, int i, double f, const Vec2& target, const SimConfig& config) {
  auto& x = rope.particles;
  const double rest = rope.rest_length;
  const double alpha = rope.compliance / (config.dt * config.dt);
  const auto inv_mass = [&](int j) { return j == rope.pinned_index ? 0.0 : 1.0; };
  std::vector<double> lambda(static_cast<std::size_t>(i) + 1, 0.0);

  const int max_iterations = config.solver_iterations * 10;
  for (int it = 0; it < max_iterations; ++it) {
    for (int j = 0; j <= i; ++j) {
      auto& a = x[static_cast<std::size_t>(j)];
      auto& b = x[static_cast<std::size_t>(j) + 1];
      const double wa = inv_mass(j);
      const double wb = inv_mass(j + 1);
      const Vec2 diff = a - b;
      const double len = diff.norm();
      if (len < 1e-12 || wa + wb == 0.0) continue;
      const Vec2 n = diff / len;
      const double c = len - rest;
      auto& lam = lambda[static_cast<std::size_t>(j)];
      const double dlam = (-c - alpha * lam) / (wa + wb + alpha);
      lam += dlam;
      a += wa * dlam * n;
      b -= wb * dlam * n;
    }
    {
      auto& a = x[static_cast<std::size_t>(i)];
      auto& b = x[static_cast<std::size_t>(i) + 1];
      const double wa = inv_mass(i);
      const double wb = inv_mass(i + 1);
      const double denom = (1.0 - f) * (1.0 - f) * wa + f * f * wb;
      if (denom > 0.0) {
        const Vec2 c = (1.0 - f) * a + f * b - target;
        const Vec2 delta = -c / denom;
        a += wa * (1.0 - f) * delta;
        b += wb * f * delta;
      }
    }
    if (it + 1 >= config.solver_iterations && proximal_strain(x, i + 1, rest) < 0.005) break;
  }

  // Pin the material point exactly; a rigid shift keeps segment (i, i+1) intact.
  auto& a = x[static_cast<std::size_t>(i)];
  auto& b = x[static_cast<std::size_t>(i) + 1];
  const Vec2 residual = target - ((1.0 - f) * a + f * b);
  if (i != rope.pinned_index) {
    a += residual;
    b += residual;
  } else if (f > 0.0) {
    b += residual / f;
  }
}

bool segments_intersect(const Vec2& p, const Vec2& p2, const Vec2& q, const Vec2& q2, double& t,
                        double& u) {
  const Vec2 r = p2 - p;
  const Vec2 s = q2 - q;
  const double denom = cross2(r, s);
  if (std::abs(denom) < 1e-15) return false;
  const Vec2 qp = q - p;
  t = cross2(qp, s) / denom;
  u = cross2(qp, r) / denom;
  constexpr double eps = 1e-12;
  return t >= -eps && t <= 1.0 + eps && u >= -eps && u <= 1.0 + eps;
}

}  // namespace

std::string_view to_string(ObjectPreset preset) {
  switch (preset) {
    case ObjectPreset::Shoelace: return "shoelace";
    case ObjectPreset::Cable: return "cable";
    case ObjectPreset::Towel: return "towel";
    case ObjectPreset::Cloth: return "cloth";
    case ObjectPreset::Rope: return "rope";
    case ObjectPreset::Napkin: return "napkin";
  }
  return "unknown";
}

ObjectPreset preset_from_string(std::string_view name) {
  for (auto p : kAllPresets) {
    if (to_string(p) == name) return p;
  }
  throw PreconditionError("unknown object preset '" + std::string(name) + "'");
}

PresetParams preset_params(ObjectPreset preset) {
  switch (preset) {
    case ObjectPreset::Shoelace: return {0.55, 1e-9, 0.0, 0.006, 11, false};
    case ObjectPreset::Cable: return {0.45, 1e-9, 0.0, 0.005, 23, false};
    case ObjectPreset::Towel: return {0.50, 5e-9, 0.06, 0.008, 37, true};
    case ObjectPreset::Cloth: return {0.50, 5e-9, 0.04, 0.006, 41, true};
    case ObjectPreset::Rope: return {0.50, 1e-9, 0.0, 0.006, 53, false};
    case ObjectPreset::Napkin: return {0.55, 5e-9, 0.05, 0.007, 67, true};
  }
  throw PreconditionError("unknown object preset");
}

std::string_view to_string(Status status) {
  switch (status) {
    case Status::Running: return "running";
    case Status::Dropped: return "dropped";
    case Status::Collided: return "collided";
    case Status::Done: return "done";
  }
  return "unknown";
}

Vec2 Workspace::clamp(const Vec2& p) const {
  return {std::clamp(p.x(), x_min, x_max), std::clamp(p.y(), y_min, y_max)};
}

void SimConfig::validate() const {
  if (n_particles < 3) throw PreconditionError("rope needs at least 3 particles");
  if (!(dt > 0.0)) throw PreconditionError("dt must be positive");
  if (!(length > 0.0)) throw PreconditionError("rope length must be positive");
  if (solver_iterations < 1) throw PreconditionError("solver_iterations must be >= 1");
  if (!(grasp_fraction > 0.0 && grasp_fraction <= 0.05)) {
    throw PreconditionError("grasp_fraction must lie in (0, 0.05]");
  }
  if (!(sensor_length > 0.0 && sensor_width > 0.0)) {
    throw PreconditionError("sensor window dimensions must be positive");
  }
  if (!(max_speed > 0.0 && max_angular_speed > 0.0)) {
    throw PreconditionError("velocity limits must be positive");
  }
  if (!(workspace.x_min < workspace.x_max && workspace.y_min < workspace.y_max)) {
    throw PreconditionError("empty workspace");
  }
  if (!workspace.contains(anchor)) throw PreconditionError("anchor outside workspace");
}

Vec2 RopeState::point_at(double s) const {
  const auto [i, f] = segment_of(*this, s);
  const auto& a = particles[static_cast<std::size_t>(i)];
  const auto& b = particles[static_cast<std::size_t>(i) + 1];
  return (1.0 - f) * a + f * b;
}

Vec2 RopeState::tangent_at(double s) const {
  const auto [i, f] = segment_of(*this, s);
  (void)f;
  return unit_or(particles[static_cast<std::size_t>(i) + 1] - particles[static_cast<std::size_t>(i)],
                 Vec2::UnitX());
}

double grip_aperture(const RopeState& rope) { return 0.5 * rope.diameter; }

double grip_stickiness(const RopeState& rope, double aperture) {
  const double squeeze = std::clamp((rope.diameter - aperture) / rope.diameter, 0.0, 1.0);
  return std::clamp(rope.friction_coeff * (0.5 + squeeze), 0.0, 0.9);
}

double max_strain(const RopeState& rope) {
  return proximal_strain(rope.particles, static_cast<int>(rope.particles.size()) - 1,
                         rope.rest_length);
}

WorldState spawn(const SimConfig& config, std::uint64_t seed) {
  config.validate();
  const PresetParams params = preset_params(config.preset);
  const double rest = config.rest_length();
  const auto n = static_cast<std::size_t>(config.n_particles);
  const double s0 = config.grasp_fraction * config.length;
  // Straight lead-in covering the grasp region, held by the pinning gripper.
  const auto lead = std::max<std::size_t>(
      2, static_cast<std::size_t>(std::ceil(1.5 * s0 / rest)) + 1);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> heading_dist(-config.heading_spread, config.heading_spread);
  std::normal_distribution<double> turn(0.0, kTurnSigma);

  WorldState world;
  world.preset = config.preset;
  world.length = config.length;
  world.anchor = config.anchor;
  world.workspace = config.workspace;
  world.rope.rest_length = rest;
  world.rope.friction_coeff = params.friction_coeff;
  world.rope.compliance = params.compliance;
  world.rope.dangling_pull = params.dangling_pull;
  world.rope.diameter = params.diameter;
  world.rope.texture_seed = params.texture_seed;

  bool placed = false;
  for (int attempt = 0; attempt < kSpawnRetries && !placed; ++attempt) {
    std::vector<Vec2> x(n);
    double heading = heading_dist(rng);
    x[0] = config.anchor;
    placed = true;
    for (std::size_t j = 1; j < n; ++j) {
      if (config.layout == Layout::Crumpled && j >= lead) heading += turn(rng);
      x[j] = x[j - 1] + rest * Vec2(std::cos(heading), std::sin(heading));
      if (!config.workspace.contains(x[j])) {
        placed = false;
        break;
      }
    }
    if (placed) world.rope.particles = std::move(x);
  }
  if (!placed) {
    throw PreconditionError("random walk left the workspace after " +
                            std::to_string(kSpawnRetries) + " retries; workspace too tight");
  }

  const Vec2 contact = world.rope.point_at(s0);
  const Vec2 tangent = world.rope.tangent_at(s0);
  world.gripper.pose = {contact.x(), contact.y(), std::atan2(tangent.y(), tangent.x())};
  world.gripper.aperture = grip_aperture(world.rope);
  world.gripper.grasping = true;
  world.gripper.window_length = config.sensor_length;
  world.gripper.window_width = config.sensor_width;
  world.grasp = {s0, 0.0};

  world.arm.base = config.arm.base;
  world.arm.link_lengths = config.arm.link_lengths;
  world.arm.joint_angles = {1.9, -1.2, -0.9};
  world.arm.joint_angles = solve_ik(world.arm, world.gripper.pose.position());
  return world;
}

WorldState finish(const WorldState& world) {
  WorldState next = world;
  if (next.status == Status::Running) next.status = Status::Done;
  return next;
}

WorldState step(const WorldState& world, const GripperAction& action, const SimConfig& config) {
  if (world.status != Status::Running) {
    throw StateError("step() on a world with status '" + std::string(to_string(world.status)) + "'");
  }
  WorldState next = world;
  const double dt = config.dt;
  auto& gripper = next.gripper;
  auto& rope = next.rope;

  // Gripper kinematics: workspace, arm reach, then velocity clamps.
  const Pose2 old_pose = gripper.pose;
  Vec2 target = next.workspace.clamp(action.target_pose.position());
  const double reach = 0.999 * arm_reach(next.arm.link_lengths);
  const Vec2 from_base = target - next.arm.base;
  if (from_base.norm() > reach) target = next.arm.base + reach * from_base.normalized();
  Vec2 delta = target - old_pose.position();
  const double max_step = config.max_speed * dt;
  if (delta.norm() > max_step) delta *= max_step / delta.norm();
  double dtheta = wrap_angle(action.target_pose.theta - old_pose.theta);
  const double max_turn = config.max_angular_speed * dt;
  dtheta = std::clamp(dtheta, -max_turn, max_turn);
  gripper.pose = {old_pose.x + delta.x(), old_pose.y + delta.y(), wrap_angle(old_pose.theta + dtheta)};
  gripper.aperture = std::clamp(action.target_aperture, 0.0, config.aperture_max);
  next.arm.joint_angles = solve_ik(next.arm, gripper.pose.position());

  next.time = world.time + dt;
  next.tick = world.tick + 1;
  next.pin_tension = 0.0;

  const bool was_grasping = gripper.grasping;
  gripper.grasping = was_grasping && gripper.aperture < rope.diameter;
  if (!gripper.grasping) {
    if (was_grasping) next.status = Status::Dropped;
    return next;
  }

  const double kappa = grip_stickiness(rope, gripper.aperture);
  const Vec2 y_axis = gripper.pose.y_axis();
  const double s = next.grasp.arc;
  const double y_c = next.grasp.offset;
  const double length = next.length;

  // Lateral slip of the contact along the finger: gripper motion that the
  // rope does not follow, rope entering the fingers at an angle, and the
  // dangling fabric of 2-D objects pulling toward the fingertips.
  const double lateral_motion = delta.dot(y_axis);
  const Vec2 ahead = rope.tangent_at(std::min(s + rope.rest_length, length));
  const double incoming = ahead.dot(y_axis);
  const Vec2 provisional = gripper.pose.position() + y_c * y_axis;
  const double pull_estimate = std::max(0.0, (provisional - next.anchor).norm() - s);
  double offset = y_c + (1.0 - kappa) * (config.incoming_drag * pull_estimate * incoming - lateral_motion);
  offset += (1.0 - kappa) * rope.dangling_pull * config.dangle_mobility * dt;

  const Vec2 contact = gripper.pose.position() + offset * y_axis;
  const double reach_from_pin = (contact - next.anchor).norm();
  const bool taut = reach_from_pin >= s;
  const double s_new = taut ? reach_from_pin : s;
  next.pin_tension = rope.friction_coeff * ((s_new - s) / dt) / kSlideReferenceSpeed;
  next.grasp = {std::min(s_new, length), offset};

  const Vec2 radial = unit_or(contact - next.anchor, rope.tangent_at(0.0));
  if (s_new >= length) {
    // The free end slid out between the fingers.
    place_straight(rope.particles, rope.particles.size(), next.anchor, radial, rope.rest_length);
  } else {
    const auto [i, f] = segment_of(rope, s_new);
    if (taut) {
      place_straight(rope.particles, static_cast<std::size_t>(i) + 2, next.anchor, radial,
                     rope.rest_length);
    } else {
      solve_slack(rope, i, f, contact, config);
    }
    follow_the_leader(rope.particles, static_cast<std::size_t>(i) + 2, rope.rest_length);
  }

  if (!contact_point(next)) {
    next.status = Status::Dropped;
    gripper.grasping = false;
  } else if ((gripper.pose.position() - next.anchor).norm() < config.collision_radius ||
             next.pin_tension > config.tension_limit) {
    next.status = Status::Collided;
  }
  return next;
}

std::optional<Contact> contact_point(const WorldState& world) {
  const auto& gripper = world.gripper;
  const auto& x = world.rope.particles;
  if (!gripper.grasping || x.size() < 2) return std::nullopt;
  const Vec2 half = 0.5 * gripper.window_length * gripper.pose.y_axis();
  const Vec2 f0 = gripper.pose.position() - half;
  const Vec2 f1 = gripper.pose.position() + half;
  const double rest = world.rope.rest_length;
  const double band = std::max(gripper.window_length, 2.0 * rest);

  std::optional<Contact> best;
  double best_gap = 0.0;
  for (std::size_t j = 0; j + 1 < x.size(); ++j) {
    double t = 0.0;
    double u = 0.0;
    if (!segments_intersect(x[j], x[j + 1], f0, f1, t, u)) continue;
    t = std::clamp(t, 0.0, 1.0);
    const double arc = rest * (static_cast<double>(j) + t);
    const double gap = std::abs(arc - world.grasp.arc);
    if (gap > band) continue;
    if (!best || gap < best_gap) {
      best = Contact{arc, x[j] + t * (x[j + 1] - x[j])};
      best_gap = gap;
    }
  }
  return best;
}

}  // namespace tracebench
