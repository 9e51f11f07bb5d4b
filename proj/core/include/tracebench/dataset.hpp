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
#include <string>
#include <vector>

#include "tracebench/labeling.hpp"

namespace tracebench {

inline constexpr int kDatasetVersion = 1;

// Layout:
//   manifest.json            version, episode list, config echo
//   episode_NNNN/meta.json   seed, preset, p_0, rate, sizes
//   episode_NNNN/kin.f32     T x 8 (o^K then a), float32 LE, row-major
//   episode_NNNN/labels.f32  T x 3 (w, I, contact_found)
//   episode_NNNN/visual.u8   T x R x R
//   episode_NNNN/tactile.tacf  T concatenated TACF records
// `config_echo` must be a JSON document (or empty).
void write_dataset(const std::filesystem::path& dir, const std::vector<LabeledEpisode>& episodes,
                   const std::string& config_echo = "{}");

std::vector<LabeledEpisode> read_dataset(const std::filesystem::path& dir);

// Appends one episode to an existing dataset (creating it if absent).
void append_episode(const std::filesystem::path& dir, const LabeledEpisode& episode,
                    const std::string& config_echo = "{}");

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);

}  // namespace tracebench
