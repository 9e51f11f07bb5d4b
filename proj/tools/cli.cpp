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

#include "cli.hpp"

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "tracebench/config.hpp"
#include "tracebench/dataset.hpp"
#include "tracebench/error.hpp"
#include "tracebench/service.hpp"

namespace tracebench::cli {

namespace fs = std::filesystem;

namespace {

std::atomic<bool> g_interrupt{false};

struct Args {
  std::string config_path;
  std::map<std::string, std::string> overrides;

  // gen-demos
  std::string preset;
  int n = 25;
  std::optional<std::uint64_t> seed;
  std::string out;

  // label
  std::string raw;

  // train
  std::string data;
  std::optional<int> epochs;
  std::string ablate = "none";
  std::string curve;

  // eval
  std::string ckpt;
  bool expert = false;
  std::optional<int> trials;
  std::vector<std::string> presets;

  // report
  std::vector<std::string> results;
  std::string format = "table";

  // serve
  std::optional<int> port;
};

RunConfig resolve(const Args& a) {
  RunConfig config;
  if (!a.config_path.empty()) config = load_config(a.config_path);
  for (const auto& [key, value] : a.overrides) set_config_value(config, key, value);
  return config;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path.string());
  f << text;
}

int gen_demos(const Args& a, std::ostream& out) {
  RunConfig config = resolve(a);
  if (!a.preset.empty()) config.sim.preset = preset_from_string(a.preset);
  if (a.n < 1) throw PreconditionError("--n must be at least 1");
  const std::uint64_t seed = a.seed.value_or(1);
  const fs::path dir = a.out.empty() ? fs::path("demos_") += std::string(to_string(config.sim.preset)) : fs::path(a.out);
  int attempt = 0;
  auto episodes = generate_demos(a.n, config.sim, config.demo_options(), seed, [&](std::uint64_t s, bool kept) {
    out << "attempt " << ++attempt << " seed=" << s << " " << (kept ? "success" : "rejected") << "\n";
  });
  write_dataset(dir, episodes, config_json(config));
  out << "wrote " << episodes.size() << " episodes to " << dir.string() << "\n";
  return kOk;
}

int label(const Args& a, std::ostream& out) {
  const RunConfig config = resolve(a);
  if (a.raw.empty() || a.out.empty()) throw PreconditionError("label needs --raw and --out");
  const auto in = read_dataset(a.raw);
  std::vector<LabeledEpisode> labeled;
  labeled.reserve(in.size());
  for (const auto& ep : in) labeled.push_back(label_episode(ep.episode, config.labeling));
  write_dataset(a.out, labeled, config_json(config));
  out << "labeled " << labeled.size() << " episodes into " << a.out << "\n";
  return kOk;
}

int train_cmd(const Args& a, std::ostream& out) {
  RunConfig config = resolve(a);
  if (a.data.empty()) throw PreconditionError("train needs --data");
  if (a.epochs) config.train.epochs = *a.epochs;
  if (a.seed) config.train.seed = *a.seed;
  const Ablation ablation = Ablation::parse(a.ablate);
  const fs::path ckpt = a.out.empty() ? fs::path("policy.ckpt") : fs::path(a.out);
  const fs::path curve = a.curve.empty() ? fs::path(ckpt).replace_extension(".curve.csv") : fs::path(a.curve);

  const auto dataset = read_dataset(a.data);
  std::ostringstream csv;
  csv << "epoch,train_center,train_reg,train_task,train_total,val_center,val_reg,val_task,val_total\n";
  csv.precision(9);
  const int every = std::max(1, config.train.epochs / 20);
  const auto result = train(dataset, config.policy, ablation, config.train, [&](const EpochStats& s) {
    csv << s.epoch << ',' << s.train.center << ',' << s.train.reg << ',' << s.train.task << ',' << s.train.total
        << ',' << s.val.center << ',' << s.val.reg << ',' << s.val.task << ',' << s.val.total << '\n';
    if (s.epoch % every == 0 || s.epoch == config.train.epochs) {
      out << "epoch " << s.epoch << " train " << s.train.total << " val " << s.val.total << "\n";
    }
  });
  save_checkpoint(ckpt, result.policy);
  write_text(curve, csv.str());
  out << "best epoch " << result.best_epoch << "; checkpoint " << ckpt.string() << "; curve " << curve.string()
      << "\n";
  return kOk;
}

int eval_cmd(const Args& a, std::ostream& out) {
  RunConfig config = resolve(a);
  if (a.trials) config.eval.trials = *a.trials;
  if (a.seed) config.eval.seed = *a.seed;
  if (!a.presets.empty()) {
    config.eval.presets.clear();
    for (const auto& p : a.presets) config.eval.presets.push_back(preset_from_string(p));
  }
  if (config.eval.trials < 0) throw PreconditionError("--trials must be non-negative");
  if (a.expert == !a.ckpt.empty()) throw PreconditionError("eval needs exactly one of --ckpt or --expert");

  EvalReport report;
  if (config.eval.trials > 0) {
    if (a.expert) {
      const ExpertGains gains = config.demos.gains;
      const double dt = config.sim.dt;
      report = run_eval([&] { return std::make_unique<ExpertController>(gains, dt); }, config.sim, config.eval);
    } else {
      const Policy policy = load_checkpoint(a.ckpt);
      const FrameSpec tactile = config.tactile;
      report = run_eval([&] { return std::make_unique<PolicyController>(policy, tactile); }, config.sim, config.eval);
    }
  }
  const fs::path dir = a.out.empty() ? fs::path("eval_out") : fs::path(a.out);
  fs::create_directories(dir);
  write_results_csv(dir / "results.csv", report.trials);
  const std::string table = format_table(summarize(report.trials));
  write_text(dir / "report.md", table);
  out << table;
  return kOk;
}

int report_cmd(const Args& a, std::ostream& out) {
  std::vector<TrialOutcome> trials;
  for (const auto& path : a.results) {
    auto part = read_results_csv(path);
    trials.insert(trials.end(), part.begin(), part.end());
  }
  if (a.format == "table") {
    out << format_table(summarize(trials));
  } else if (a.format == "csv") {
    out << "preset,trials,ci_low,ci_high";
    for (auto o : kAllOutcomes) out << ',' << to_string(o);
    out << '\n';
    for (const auto& row : summarize(trials)) {
      const auto [lo, hi] = wilson_ci(row.counts[0], row.trials);
      out << row.label << ',' << row.trials << ',' << lo << ',' << hi;
      for (int c : row.counts) out << ',' << c;
      out << '\n';
    }
  } else {
    throw PreconditionError("--format must be table or csv");
  }
  return kOk;
}

int serve(const Args& a, std::ostream& out) {
  RunConfig config = resolve(a);
  if (a.port) config.service.port = *a.port;
  if (a.seed) config.service.seed = *a.seed;
  if (!a.data.empty()) config.service.dataset = a.data;
  Session session(config);
  session.start();
  out << "serving on " << config.service.bind << ":" << session.port() << "\n" << std::flush;
  while (!g_interrupt) std::this_thread::sleep_for(std::chrono::milliseconds(50));
  session.request_stop();
  session.wait();
  out << "stopped after " << session.ticks() << " ticks; " << session.episodes_written() << " episodes written\n";
  return kOk;
}

}  // namespace

void request_interrupt() { g_interrupt = true; }

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Args a;
  CLI::App app{"tracebench: visual-tactile tracing simulator and learning toolkit"};
  app.require_subcommand(1);
  app.add_option("--config", a.config_path, "INI config file ([section] then key = value)")->check(CLI::ExistingFile);
  for (const auto& k : config_keys()) {
    app.add_option_function<std::string>(
           "--" + k.key, [&a, key = k.key](const std::string& v) { a.overrides[key] = v; },
           k.help + " (default " + get_config_value(RunConfig{}, k.key) + ")")
        ->group("Config keys");
  }

  auto* gen = app.add_subcommand("gen-demos", "Record scripted expert demonstrations into a dataset");
  gen->add_option("--preset", a.preset, "object preset");
  gen->add_option("--n", a.n, "episodes to keep")->capture_default_str();
  gen->add_option("--seed", a.seed, "base seed (default 1)");
  gen->add_option("--out", a.out, "dataset directory");

  auto* lab = app.add_subcommand("label", "Relabel a dataset with the current extraction settings");
  lab->add_option("--raw", a.raw, "input dataset")->required();
  lab->add_option("--out", a.out, "output dataset")->required();

  auto* tr = app.add_subcommand("train", "Train a policy and write a checkpoint plus a loss-curve CSV");
  tr->add_option("--data", a.data, "dataset directory")->required();
  tr->add_option("--epochs", a.epochs, "overrides train.epochs");
  tr->add_option("--seed", a.seed, "overrides train.seed");
  tr->add_option("--ablate", a.ablate, "none, vision, tactile, center or task")
      ->check(CLI::IsMember({"none", "vision", "tactile", "center", "task"}))
      ->capture_default_str();
  tr->add_option("--out", a.out, "checkpoint path (default policy.ckpt)");
  tr->add_option("--curve", a.curve, "curve CSV (default next to the checkpoint)");

  auto* ev = app.add_subcommand("eval", "Roll out a checkpoint (or the expert) and write results.csv and report.md");
  ev->add_option("--ckpt", a.ckpt, "policy checkpoint");
  ev->add_flag("--expert", a.expert, "evaluate the scripted expert instead");
  ev->add_option("--trials", a.trials, "overrides eval.trials");
  ev->add_option("--seed", a.seed, "overrides eval.seed");
  ev->add_option("--preset", a.presets, "one or more presets (overrides eval.presets)");
  ev->add_option("--out", a.out, "output directory (default eval_out)");

  auto* rep = app.add_subcommand("report", "Summarize one or more results.csv files");
  rep->add_option("--results", a.results, "results CSV files")->required();
  rep->add_option("--format", a.format, "table or csv")->capture_default_str();

  auto* srv = app.add_subcommand("serve", "Run the teleoperation service until interrupted");
  srv->add_option("--port", a.port, "overrides service.port (0 picks a free port)");
  srv->add_option("--seed", a.seed, "overrides service.seed");
  srv->add_option("--data", a.data, "overrides service.dataset");

  for (auto* sub : {gen, lab, tr, ev, rep, srv}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*gen) return gen_demos(a, out);
    if (*lab) return label(a, out);
    if (*tr) return train_cmd(a, out);
    if (*ev) return eval_cmd(a, out);
    if (*rep) return report_cmd(a, out);
    if (*srv) return serve(a, out);
  } catch (const PreconditionError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const FormatError& e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const DivergenceError& e) {
    err << "diverged: " << e.what() << "\n";
    return kDivergence;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kUsage;
}

}  // namespace tracebench::cli
