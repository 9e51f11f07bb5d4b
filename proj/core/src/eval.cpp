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

#include "tracebench/eval.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <boost/math/distributions/normal.hpp>

#include "tracebench/error.hpp"
#include "tracebench/parallel.hpp"
#include "tracebench/seed.hpp"

namespace tracebench {

namespace {

constexpr std::array<std::string_view, 5> kOutcomeNames = {"success", "robot_collision", "early_stopping",
                                                          "over_tracing", "object_dropping"};

std::size_t outcome_index(Outcome o) { return static_cast<std::size_t>(o); }

std::pair<double, double> mean_sd(const std::vector<double>& v) {
  if (v.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  if (v.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

double round1(double x) { return std::round(x * 10.0) / 10.0; }

}  // namespace

std::string_view to_string(Outcome outcome) { return kOutcomeNames[outcome_index(outcome)]; }

Outcome outcome_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kOutcomeNames.size(); ++i) {
    if (kOutcomeNames[i] == name) return kAllOutcomes[i];
  }
  throw FormatError("unknown outcome '" + std::string(name) + "'");
}

void Trajectory::record(const WorldState& world) {
  if (steps == 0) {
    length = world.length;
    anchor = world.anchor;
  }
  status = world.status;
  grasping = world.gripper.grasping && world.status != Status::Dropped;
  time = world.time;
  if (grasping) {
    final_arc = world.grasp.arc;
    max_arc = std::max(max_arc, world.grasp.arc);
    if (const auto c = contact_point(world)) last_contact = c->point;
    if (!success_time && world.grasp.arc >= kSuccessFraction * length) success_time = world.time;
  }
  ++steps;
}

std::pair<double, bool> completion_ratio(const Trajectory& trajectory) {
  if (!trajectory.last_contact || !(trajectory.length > 0.0)) return {0.0, false};
  return {(*trajectory.last_contact - trajectory.anchor).norm() / trajectory.length, true};
}

TrialOutcome classify_outcome(const Trajectory& tr) {
  if (!tr.terminated()) throw StateError("trajectory has not terminated");
  TrialOutcome out;
  out.final_arc = tr.final_arc;
  out.steps = tr.steps;
  std::tie(out.completion_ratio, out.contact_seen) = completion_ratio(tr);
  const double goal = kSuccessFraction * tr.length;
  if (tr.status == Status::Collided) {
    out.outcome = Outcome::RobotCollision;
  } else if (!tr.grasping) {
    out.outcome = tr.max_arc >= goal ? Outcome::OverTracing : Outcome::ObjectDropping;
  } else if (tr.final_arc >= goal) {
    out.outcome = Outcome::Success;
    out.success_time = tr.success_time.value_or(tr.time);
  } else {
    out.outcome = Outcome::EarlyStopping;
  }
  return out;
}

std::pair<double, double> wilson_ci(int successes, int trials, double confidence) {
  if (trials < 1 || successes < 0 || successes > trials) {
    throw PreconditionError("wilson_ci needs 0 <= successes <= trials and trials >= 1");
  }
  if (!(confidence > 0.0 && confidence < 1.0)) throw PreconditionError("confidence must lie in (0, 1)");
  const double z = confidence == 0.95
                       ? 1.959964
                       : boost::math::quantile(boost::math::normal(), 0.5 + 0.5 * confidence);
  const double n = trials;
  const double p = successes / n;
  const double z2 = z * z;
  const double center = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
  const double half = z / (1.0 + z2 / n) * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
  return {round1(100.0 * std::max(0.0, center - half)), round1(100.0 * std::min(1.0, center + half))};
}

GripperAction ExpertController::act(const WorldState& world, std::uint64_t) {
  return expert_action(world, gains_, dt_);
}

double expert_mean_steps(const SimConfig& config, const ExpertGains& gains, int runs, std::uint64_t seed) {
  if (runs < 1) throw PreconditionError("need at least one expert run");
  double total = 0.0;
  constexpr int kCap = 5000;
  for (int r = 0; r < runs; ++r) {
    WorldState world = spawn(config, mix_seed(seed, 0xB0D6E7ULL + static_cast<std::uint64_t>(r)));
    int t = 0;
    while (world.status == Status::Running && world.grasp.arc < kSuccessFraction * world.length && t < kCap) {
      world = step(world, expert_action(world, gains, config.dt), config);
      ++t;
    }
    if (world.status != Status::Running || t >= kCap) {
      throw Error("expert failed while calibrating the step budget for '" +
                  std::string(to_string(config.preset)) + "'");
    }
    total += t;
  }
  return total / runs;
}

TrialOutcome run_trial(const SimConfig& config, Controller& controller, std::uint64_t seed, int budget) {
  WorldState world = spawn(config, seed);
  Trajectory tr;
  tr.record(world);
  for (int t = 0; t < budget && world.status == Status::Running; ++t) {
    const GripperAction action = controller.act(world, mix_seed(seed, 1000 + static_cast<std::uint64_t>(t)));
    world = step(world, action, config);
    tr.record(world);
  }
  if (world.status == Status::Running) {
    world = finish(world);
    tr.budget_exhausted = true;
  }
  TrialOutcome out = classify_outcome(tr);
  out.seed = seed;
  out.preset = config.preset;
  return out;
}

EvalReport run_eval(const ControllerFactory& factory, const SimConfig& config, const EvalSettings& settings) {
  if (settings.trials < 0) throw PreconditionError("trials must be non-negative");
  EvalReport report;
  if (settings.trials == 0) return report;
  for (std::size_t p = 0; p < settings.presets.size(); ++p) {
    SimConfig cfg = config;
    cfg.preset = settings.presets[p];
    const std::uint64_t base = mix_seed(settings.seed, 0xE7A1ULL + static_cast<std::uint64_t>(cfg.preset));
    const int budget = static_cast<int>(
        std::ceil(settings.budget_multiplier * expert_mean_steps(cfg, settings.expert, settings.expert_runs, base)));
    std::vector<TrialOutcome> rows(static_cast<std::size_t>(settings.trials));
    parallel_for(settings.trials, [&](int i) {
      auto controller = factory();
      rows[static_cast<std::size_t>(i)] =
          run_trial(cfg, *controller, mix_seed(base, static_cast<std::uint64_t>(i)), budget);
    });
    report.trials.insert(report.trials.end(), rows.begin(), rows.end());
  }
  return report;
}

std::vector<ReportRow> summarize(const std::vector<TrialOutcome>& trials) {
  std::vector<ReportRow> rows;
  if (trials.empty()) return rows;
  auto build = [](std::string label, const std::vector<const TrialOutcome*>& subset) {
    ReportRow row;
    row.label = std::move(label);
    row.trials = static_cast<int>(subset.size());
    std::vector<double> times;
    std::vector<double> ratios;
    for (const auto* t : subset) {
      ++row.counts[outcome_index(t->outcome)];
      if (t->success_time) times.push_back(*t->success_time);
      ratios.push_back(t->completion_ratio);
    }
    std::tie(row.time_mean, row.time_sd) = mean_sd(times);
    std::tie(row.ratio_mean, row.ratio_sd) = mean_sd(ratios);
    return row;
  };
  std::vector<ObjectPreset> order;
  for (const auto& t : trials) {
    if (std::find(order.begin(), order.end(), t.preset) == order.end()) order.push_back(t.preset);
  }
  std::vector<const TrialOutcome*> all;
  for (const auto preset : order) {
    std::vector<const TrialOutcome*> subset;
    for (const auto& t : trials) {
      if (t.preset == preset) subset.push_back(&t);
    }
    rows.push_back(build(std::string(to_string(preset)), subset));
    all.insert(all.end(), subset.begin(), subset.end());
  }
  if (order.size() > 1) rows.push_back(build("all", all));
  return rows;
}

std::string format_table(const std::vector<ReportRow>& rows) {
  std::ostringstream out;
  out << "| Object | Trials | Success rate (Wilson 95% CI) | Collision | Early stop | Over-trace | Drop "
         "| Success time (s) | Completion ratio |\n";
  out << "|---|---|---|---|---|---|---|---|---|\n";
  char buf[256];
  for (const auto& r : rows) {
    const int s = r.counts[outcome_index(Outcome::Success)];
    const auto [lo, hi] = wilson_ci(s, r.trials);
    std::snprintf(buf, sizeof buf, "| %s | %d | %.1f%% [%.1f, %.1f] | %d | %d | %d | %d | %.2f ± %.2f | %.3f ± %.3f |\n",
                  r.label.c_str(), r.trials, 100.0 * s / r.trials, lo, hi,
                  r.counts[outcome_index(Outcome::RobotCollision)],
                  r.counts[outcome_index(Outcome::EarlyStopping)],
                  r.counts[outcome_index(Outcome::OverTracing)],
                  r.counts[outcome_index(Outcome::ObjectDropping)], r.time_mean, r.time_sd, r.ratio_mean,
                  r.ratio_sd);
    out << buf;
  }
  return out.str();
}

void write_results_csv(const std::filesystem::path& path, const std::vector<TrialOutcome>& trials) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << "seed,preset,outcome,success_time,completion_ratio,contact_seen,final_arc,steps\n";
  char buf[512];
  for (const auto& t : trials) {
    char time_buf[32] = "";
    if (t.success_time) std::snprintf(time_buf, sizeof time_buf, "%.17g", *t.success_time);
    std::snprintf(buf, sizeof buf, "%llu,%s,%s,%s,%.17g,%d,%.17g,%d\n",
                  static_cast<unsigned long long>(t.seed), std::string(to_string(t.preset)).c_str(),
                  std::string(to_string(t.outcome)).c_str(),
                  time_buf, t.completion_ratio,
                  t.contact_seen ? 1 : 0, t.final_arc, t.steps);
    out << buf;
  }
}

std::vector<TrialOutcome> read_results_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (!line.starts_with("seed,preset,outcome")) throw FormatError(path.string() + ": missing header");
  std::vector<TrialOutcome> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (line.back() == ',') f.emplace_back();
    if (f.size() != 8) throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected 8 fields");
    try {
      TrialOutcome t;
      t.seed = std::stoull(f[0]);
      t.preset = preset_from_string(f[1]);
      t.outcome = outcome_from_string(f[2]);
      if (!f[3].empty()) t.success_time = std::stod(f[3]);
      t.completion_ratio = std::stod(f[4]);
      t.contact_seen = f[5] == "1";
      t.final_arc = std::stod(f[6]);
      t.steps = std::stoi(f[7]);
      out.push_back(t);
    } catch (const std::logic_error& e) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const PreconditionError& e) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace tracebench
