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

#include "tracebench/expert.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <random>
#include <tuple>

#include <Eigen/Dense>

#include "tracebench/arm.hpp"
#include "tracebench/error.hpp"

namespace tracebench {

double manipulability(std::span<const double> q, std::span<const double> link_lengths) {
  if (q.size() != link_lengths.size()) throw PreconditionError("joint and link counts differ");
  const Eigen::MatrixXd jac = position_jacobian(link_lengths, q);
  // det(J J^T) for a 2 x n Jacobian as the sum of squared 2x2 minors
  // (Cauchy-Binet); exact zero at full extension, unlike the product form.
  double det = 0.0;
  for (Eigen::Index i = 0; i < jac.cols(); ++i) {
    for (Eigen::Index j = i + 1; j < jac.cols(); ++j) {
      const double m = jac(0, i) * jac(1, j) - jac(0, j) * jac(1, i);
      det += m * m;
    }
  }
  return std::sqrt(det);
}

double estimate_max_manipulability(std::span<const double> link_lengths, int samples, std::uint64_t seed) {
  if (samples < 1) throw PreconditionError("need at least one sample");
  using Key = std::tuple<std::vector<double>, int, std::uint64_t>;
  static std::mutex mutex;
  static std::map<Key, double> cache;
  Key key{std::vector<double>(link_lengths.begin(), link_lengths.end()), samples, seed};
  {
    const std::lock_guard lock(mutex);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
  std::vector<double> q(link_lengths.size());
  double best = 0.0;
  for (int i = 0; i < samples; ++i) {
    for (auto& v : q) v = angle(rng);
    best = std::max(best, manipulability(q, link_lengths));
  }
  const std::lock_guard lock(mutex);
  cache.emplace(std::move(key), best);
  return best;
}

bool singularity_alert(double w, double w_max, double lambda) {
  if (!(w_max > 0.0)) throw PreconditionError("w_max must be positive");
  return w < lambda * w_max;
}

void ExpertGains::validate() const {
  if (!(lookahead > 0.0) || !(centering > 0.0) || !(speed > 0.0)) {
    throw PreconditionError("expert gains must be positive");
  }
  if (speed > 0.4) throw PreconditionError("expert speed exceeds the 0.4 m/s limit");
  if (!(stop_fraction > 0.9 && stop_fraction <= 1.0)) {
    throw PreconditionError("stop_fraction must lie in (0.9, 1]");
  }
}

GripperAction hold_action(const WorldState& world) {
  return {world.gripper.pose, world.gripper.aperture};
}

GripperAction expert_action(const WorldState& world, const ExpertGains& gains, double dt) {
  gains.validate();
  if (world.status != Status::Running) return hold_action(world);
  const auto contact = contact_point(world);
  if (!contact) return hold_action(world);
  const double s = world.grasp.arc;
  if (s >= gains.stop_fraction * world.length) return hold_action(world);

  // The proximal rope is pulled into line behind the fingers, so pursue along
  // the local tangent rather than the (crumpled) polyline ahead.
  const Vec2 tangent = world.rope.tangent_at(s);
  const double theta = std::atan2(tangent.y(), tangent.x());
  const Pose2 aligned{world.gripper.pose.x, world.gripper.pose.y, theta};
  const Vec2 lateral = -gains.centering * world.grasp.offset * dt * aligned.y_axis();
  const Vec2 goal = contact->point + gains.lookahead * tangent + lateral;

  Vec2 move = goal - world.gripper.pose.position();
  const double limit = gains.speed * dt;
  if (move.norm() > limit) move *= limit / move.norm();
  const Vec2 target = world.gripper.pose.position() + move;
  return {{target.x(), target.y(), theta}, world.gripper.aperture};
}

}  // namespace tracebench
