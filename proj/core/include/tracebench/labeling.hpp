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
#include <vector>

#include "tracebench/geometry.hpp"
#include "tracebench/image.hpp"
#include "tracebench/sim.hpp"
#include "tracebench/tactile.hpp"

namespace tracebench {

inline constexpr int kVisualResolution = 64;
inline constexpr double kRecordRate = 30.0;

// EE x, y, theta, aperture. Stored as float32 so episodes round-trip exactly.
using Kinematics = std::array<float, 4>;
using ActionVec = std::array<float, 4>;

struct Observation {
  Kinematics kinematic{};
  Image visual;
  TactileFrame tactile;
  bool operator==(const Observation&) const = default;
};

struct EpisodeStep {
  Observation obs;
  ActionVec action{};
  bool operator==(const EpisodeStep&) const = default;
};

struct Episode {
  std::vector<EpisodeStep> steps;
  Vec2 p0{0.0, 0.0};
  double rate_hz = kRecordRate;
  ObjectPreset preset = ObjectPreset::Rope;
  std::uint64_t seed = 0;
  bool operator==(const Episode&) const = default;
};

struct LabeledEpisode {
  Episode episode;
  std::vector<float> weights;
  std::vector<float> completion;
  std::vector<std::uint8_t> contact_found;
  bool operator==(const LabeledEpisode&) const = default;
};

// Observation of a world state. The tactile timestamp is set by the caller.
Observation observe(const WorldState& world, const FrameSpec& tactile_spec, std::uint64_t tactile_seed,
                    int visual_resolution = kVisualResolution);

ActionVec to_action(const GripperAction& action);
GripperAction from_action(const ActionVec& action);

// How the pixel distance from the sensing center is normalized.
enum class CenterNormalizer { CenterNorm, HalfWidth };

inline const double kWeightFloor = 0.36787944117144233;  // exp(-1)

double center_weight(const std::optional<ContactEstimate>& estimate, const TactileFrame& frame,
                     CenterNormalizer normalizer = CenterNormalizer::CenterNorm);

double completion_index(const Vec2& p_t, const Vec2& p_0, const Vec2& p_T);

struct LabelingOptions {
  ExtractionParams extraction{};
  CenterNormalizer normalizer = CenterNormalizer::CenterNorm;
};

LabeledEpisode label_episode(const Episode& episode, const LabelingOptions& options = {});

}  // namespace tracebench
