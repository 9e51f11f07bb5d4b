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

#include "tracebench/demos.hpp"

#include <random>

#include "tracebench/dataset.hpp"
#include "tracebench/error.hpp"
#include "tracebench/seed.hpp"

namespace tracebench {

DemoResult record_demo(const SimConfig& config, const DemoOptions& options, std::uint64_t seed) {
  DemoResult result;
  WorldState world = spawn(config, seed);
  Episode& ep = result.episode;
  ep.p0 = world.anchor;
  ep.rate_hz = 1.0 / config.dt;
  ep.preset = config.preset;
  ep.seed = seed;

  std::mt19937_64 rng(mix_seed(seed, 1));
  std::normal_distribution<double> jitter(0.0, options.jitter);
  int held = 0;
  for (int t = 0; t < options.max_steps && world.status == Status::Running; ++t) {
    const bool stopped = world.grasp.arc >= options.gains.stop_fraction * world.length;
    if (stopped && held++ >= options.hold_steps) break;
    GripperAction action = expert_action(world, options.gains, config.dt);
    if (!stopped && options.jitter > 0.0) {
      action.target_pose.x += jitter(rng);
      action.target_pose.y += jitter(rng);
    }
    EpisodeStep rec;
    rec.obs = observe(world, options.tactile, mix_seed(seed, 1000 + static_cast<std::uint64_t>(t)));
    rec.obs.tactile.timestamp = static_cast<double>(t) / ep.rate_hz;
    rec.action = to_action(action);
    ep.steps.push_back(std::move(rec));
    // Step with exactly the recorded (float32) action so replay reproduces it.
    world = step(world, from_action(ep.steps.back().action), config);
  }
  result.final_world = world;
  result.success = world.status == Status::Running && world.gripper.grasping &&
                   world.grasp.arc >= 0.95 * world.length && ep.steps.size() >= 2;
  return result;
}

std::vector<LabeledEpisode> generate_demos(int n, const SimConfig& config, const DemoOptions& options,
                                           std::uint64_t seed,
                                           const std::function<void(std::uint64_t, bool)>& progress) {
  if (n < 1) throw PreconditionError("need at least one demonstration");
  options.gains.validate();
  std::vector<LabeledEpisode> out;
  const int cap = 5 * n;
  for (int attempt = 0; attempt < cap && static_cast<int>(out.size()) < n; ++attempt) {
    const std::uint64_t s = mix_seed(seed, static_cast<std::uint64_t>(attempt));
    DemoResult demo = record_demo(config, options, s);
    bool kept = false;
    if (demo.success) {
      try {
        out.push_back(label_episode(demo.episode, options.labeling));
        kept = true;
      } catch (const ConsistencyError&) {
        // unlabelable final frame; treat like a failed rollout
      }
    }
    if (progress) progress(s, kept);
  }
  if (static_cast<int>(out.size()) < n) {
    throw Error("expert produced only " + std::to_string(out.size()) + " of " + std::to_string(n) +
                " successful demonstrations for preset '" + std::string(to_string(config.preset)) +
                "' within " + std::to_string(cap) + " attempts");
  }
  return out;
}

std::filesystem::path record_demos(int n, const SimConfig& config, const DemoOptions& options,
                                   std::uint64_t seed, const std::filesystem::path& out,
                                   const std::string& config_echo) {
  write_dataset(out, generate_demos(n, config, options, seed), config_echo);
  return out;
}

}  // namespace tracebench
