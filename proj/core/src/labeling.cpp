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

#include "tracebench/labeling.hpp"

#include <algorithm>
#include <cmath>

#include "tracebench/error.hpp"
#include "tracebench/render.hpp"

namespace tracebench {

Observation observe(const WorldState& world, const FrameSpec& tactile_spec, std::uint64_t tactile_seed,
                    int visual_resolution) {
  Observation obs;
  const auto& g = world.gripper;
  obs.kinematic = {static_cast<float>(g.pose.x), static_cast<float>(g.pose.y),
                   static_cast<float>(g.pose.theta), static_cast<float>(g.aperture)};
  obs.visual = render_visual(world, visual_resolution);
  obs.tactile = render_tactile(world, tactile_spec, tactile_seed);
  return obs;
}

ActionVec to_action(const GripperAction& action) {
  return {static_cast<float>(action.target_pose.x), static_cast<float>(action.target_pose.y),
          static_cast<float>(action.target_pose.theta), static_cast<float>(action.target_aperture)};
}

GripperAction from_action(const ActionVec& a) {
  return {{a[0], a[1], a[2]}, a[3]};
}

double center_weight(const std::optional<ContactEstimate>& estimate, const TactileFrame& frame,
                     CenterNormalizer normalizer) {
  if (!estimate) return kWeightFloor;
  const Vec2 c = frame.center();
  const double scale = normalizer == CenterNormalizer::CenterNorm ? c.norm() : c.x();
  return std::exp(-(estimate->p_tac - c).norm() / scale);
}

double completion_index(const Vec2& p_t, const Vec2& p_0, const Vec2& p_T) {
  const double total = (p_T - p_0).norm();
  if (!(total > 0.0)) throw PreconditionError("degenerate demonstration: p_T coincides with p_0");
  return std::clamp((p_t - p_0).norm() / total, 0.0, 1.0);
}

LabeledEpisode label_episode(const Episode& episode, const LabelingOptions& options) {
  if (episode.steps.size() < 2) throw PreconditionError("an episode needs at least 2 steps");
  const std::size_t n = episode.steps.size();
  std::vector<std::optional<ContactEstimate>> estimates(n);
  std::vector<std::optional<Vec2>> world_points(n);
  for (std::size_t t = 0; t < n; ++t) {
    const auto& obs = episode.steps[t].obs;
    estimates[t] = extract_contact(obs.tactile, options.extraction);
    if (!estimates[t]) continue;
    const Pose2 pose{obs.kinematic[0], obs.kinematic[1], obs.kinematic[2]};
    const Vec3 p = gripper_to_world(pixel_to_gripper(estimates[t]->p_tac, obs.tactile), pose);
    world_points[t] = Vec2(p.x(), p.y());
  }
  if (!world_points.back()) {
    throw ConsistencyError("final step has no extractable contact; cannot fix p_T");
  }
  const Vec2 p_T = *world_points.back();

  LabeledEpisode out;
  out.episode = episode;
  out.weights.resize(n);
  out.completion.resize(n);
  out.contact_found.resize(n);
  double last = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    out.weights[t] = static_cast<float>(center_weight(estimates[t], episode.steps[t].obs.tactile,
                                                      options.normalizer));
    if (world_points[t]) last = completion_index(*world_points[t], episode.p0, p_T);
    out.completion[t] = static_cast<float>(last);
    out.contact_found[t] = world_points[t] ? 1 : 0;
  }
  return out;
}

}  // namespace tracebench
