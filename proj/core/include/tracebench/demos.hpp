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
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tracebench/expert.hpp"
#include "tracebench/labeling.hpp"

namespace tracebench {

struct DemoOptions {
  ExpertGains gains{};
  double jitter = 0.001;  // m, seeded action noise while tracing
  int hold_steps = 15;    // recorded after the expert stops
  int max_steps = 900;
  FrameSpec tactile{};
  LabelingOptions labeling{};
};

struct DemoResult {
  Episode episode;
  WorldState final_world;
  bool success = false;
};

// One seeded expert rollout recorded at the sim rate.
DemoResult record_demo(const SimConfig& config, const DemoOptions& options, std::uint64_t seed);

// Keeps only successful rollouts; failures are re-seeded up to 5n attempts.
// `progress` is called once per attempt with (attempt seed, kept?).
std::vector<LabeledEpisode> generate_demos(
    int n, const SimConfig& config, const DemoOptions& options, std::uint64_t seed,
    const std::function<void(std::uint64_t, bool)>& progress = {});

// generate_demos + write_dataset. Returns the dataset directory.
std::filesystem::path record_demos(int n, const SimConfig& config, const DemoOptions& options,
                                   std::uint64_t seed, const std::filesystem::path& out,
                                   const std::string& config_echo = "{}");

}  // namespace tracebench
