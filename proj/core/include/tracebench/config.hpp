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

#include "tracebench/demos.hpp"
#include "tracebench/eval.hpp"
#include "tracebench/policy.hpp"
#include "tracebench/sim.hpp"

namespace tracebench {

struct ServiceSettings {
  int port = 7878;
  std::string bind = "127.0.0.1";
  double tick_hz = 30.0;
  int broadcast_every = 2;  // ticks per state broadcast
  std::string dataset = "teleop_data";
  std::uint64_t seed = 1;
  int w_max_samples = 10000;
  double alert_lambda = 0.2;
};

// Everything a subcommand can be configured with. Defaults are the
// documented values; the INI file and --section.key flags override them.
struct RunConfig {
  SimConfig sim{};
  FrameSpec tactile{};
  LabelingOptions labeling{};
  DemoOptions demos{};  // tactile/labeling copied from above on use
  PolicyConfig policy{};
  TrainHyper train{};
  EvalSettings eval{};
  ServiceSettings service{};

  DemoOptions demo_options() const;
};

struct ConfigKey {
  std::string key;   // "section.name"
  std::string help;
};

// Every configurable key, in file order.
const std::vector<ConfigKey>& config_keys();

// Current value of a key, formatted as it would appear in the file.
std::string get_config_value(const RunConfig& config, const std::string& key);
// Throws PreconditionError for unknown keys or unparsable values.
void set_config_value(RunConfig& config, const std::string& key, const std::string& value);

// INI with [section] headers; unknown keys are errors.
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});
std::string dump_config(const RunConfig& config);
// Compact JSON of every key, used as the config echo in outputs.
std::string config_json(const RunConfig& config);

}  // namespace tracebench
