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
#include <memory>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tracebench/expert.hpp"
#include "tracebench/sim.hpp"
#include "tracebench/tactile.hpp"

namespace tracebench {

enum class Outcome { Success, RobotCollision, EarlyStopping, OverTracing, ObjectDropping };
inline constexpr std::array<Outcome, 5> kAllOutcomes = {
    Outcome::Success, Outcome::RobotCollision, Outcome::EarlyStopping, Outcome::OverTracing,
    Outcome::ObjectDropping};
std::string_view to_string(Outcome outcome);
Outcome outcome_from_string(std::string_view name);

inline constexpr double kSuccessFraction = 0.95;

// Running summary of a rollout, fed every world state including the first.
struct Trajectory {
  double length = 0.0;
  Vec2 anchor{0.0, 0.0};
  Status status = Status::Running;
  bool grasping = false;
  double final_arc = 0.0;
  double max_arc = 0.0;
  double time = 0.0;
  std::optional<double> success_time;  // first time the arc reached 0.95 L
  std::optional<Vec2> last_contact;
  bool budget_exhausted = false;
  int steps = 0;

  void record(const WorldState& world);
  bool terminated() const { return status != Status::Running || budget_exhausted; }
};

struct TrialOutcome {
  Outcome outcome = Outcome::EarlyStopping;
  std::optional<double> success_time;
  double completion_ratio = 0.0;
  bool contact_seen = false;
  double final_arc = 0.0;
  std::uint64_t seed = 0;
  ObjectPreset preset = ObjectPreset::Rope;
  int steps = 0;
  bool operator==(const TrialOutcome&) const = default;
};

// Throws StateError for a trajectory that has not terminated.
TrialOutcome classify_outcome(const Trajectory& trajectory);

// Distance from the last contact to p_0 over L; 0 (flag false) if no contact.
std::pair<double, bool> completion_ratio(const Trajectory& trajectory);

// Wilson score interval as percentages rounded to one decimal.
std::pair<double, double> wilson_ci(int successes, int trials, double confidence = 0.95);

// Closed-loop controller for one trial. Instances are not shared between trials.
class Controller {
 public:
  virtual ~Controller() = default;
  virtual GripperAction act(const WorldState& world, std::uint64_t obs_seed) = 0;
};
using ControllerFactory = std::function<std::unique_ptr<Controller>()>;

class ExpertController : public Controller {
 public:
  explicit ExpertController(ExpertGains gains, double dt) : gains_(gains), dt_(dt) {}
  GripperAction act(const WorldState& world, std::uint64_t obs_seed) override;

 private:
  ExpertGains gains_;
  double dt_;
};

struct EvalSettings {
  int trials = 10;                  // per preset
  std::uint64_t seed = 1;
  std::vector<ObjectPreset> presets{ObjectPreset::Rope};
  double budget_multiplier = 4.0;   // x the expert's mean completion steps
  int expert_runs = 5;
  ExpertGains expert{};
};

// Steps the expert needs to bring the contact to 0.95 L, averaged over seeded runs.
double expert_mean_steps(const SimConfig& config, const ExpertGains& gains, int runs, std::uint64_t seed);

TrialOutcome run_trial(const SimConfig& config, Controller& controller, std::uint64_t seed, int budget);

struct EvalReport {
  std::vector<TrialOutcome> trials;  // ordered by preset then trial index
};

EvalReport run_eval(const ControllerFactory& factory, const SimConfig& config, const EvalSettings& settings);

// Aggregate counts for one row of the report table.
struct ReportRow {
  std::string label;
  int trials = 0;
  std::array<int, 5> counts{};  // indexed like kAllOutcomes
  double time_mean = 0.0, time_sd = 0.0;
  double ratio_mean = 0.0, ratio_sd = 0.0;
};

std::vector<ReportRow> summarize(const std::vector<TrialOutcome>& trials);
std::string format_table(const std::vector<ReportRow>& rows);

void write_results_csv(const std::filesystem::path& path, const std::vector<TrialOutcome>& trials);
std::vector<TrialOutcome> read_results_csv(const std::filesystem::path& path);

}  // namespace tracebench
