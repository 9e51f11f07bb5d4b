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

#include "tracebench/config.hpp"

#include <charconv>
#include <functional>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <nlohmann/json.hpp>

#include "tracebench/error.hpp"

namespace tracebench {

namespace {

struct Entry {
  ConfigKey desc;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

std::string fmt(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

double parse_double(const std::string& key, const std::string& s) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw PreconditionError(key + ": '" + s + "' is not a number");
  return v;
}

long long parse_int(const std::string& key, const std::string& s) {
  long long v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw PreconditionError(key + ": '" + s + "' is not an integer");
  return v;
}

bool parse_bool(const std::string& key, const std::string& s) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw PreconditionError(key + ": '" + s + "' is not a boolean");
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

template <class T, class Get>
Entry real(std::string key, std::string help, Get member) {
  return {{key, std::move(help)},
          [member](const RunConfig& c) { return fmt(static_cast<double>(member(const_cast<RunConfig&>(c)))); },
          [member, key](RunConfig& c, const std::string& s) { member(c) = static_cast<T>(parse_double(key, s)); }};
}

template <class T, class Get>
Entry integer(std::string key, std::string help, Get member) {
  return {{key, std::move(help)},
          [member](const RunConfig& c) { return std::to_string(member(const_cast<RunConfig&>(c))); },
          [member, key](RunConfig& c, const std::string& s) { member(c) = static_cast<T>(parse_int(key, s)); }};
}

template <class Get>
Entry boolean(std::string key, std::string help, Get member) {
  return {{key, std::move(help)},
          [member](const RunConfig& c) { return std::string(member(const_cast<RunConfig&>(c)) ? "true" : "false"); },
          [member, key](RunConfig& c, const std::string& s) { member(c) = parse_bool(key, s); }};
}

template <class Get>
Entry text(std::string key, std::string help, Get member) {
  return {{key, std::move(help)}, [member](const RunConfig& c) { return member(const_cast<RunConfig&>(c)); },
          [member](RunConfig& c, const std::string& s) { member(c) = s; }};
}

std::vector<Entry> build_entries() {
  std::vector<Entry> e;
  // sim
  e.push_back(Entry{{"sim.preset", "object preset: shoelace|cable|towel|cloth|rope|napkin"},
                    [](const RunConfig& c) { return std::string(to_string(c.sim.preset)); },
                    [](RunConfig& c, const std::string& s) { c.sim.preset = preset_from_string(s); }});
  e.push_back(Entry{{"sim.layout", "initial layout: crumpled|straight"},
                    [](const RunConfig& c) { return std::string(c.sim.layout == Layout::Crumpled ? "crumpled" : "straight"); },
                    [](RunConfig& c, const std::string& s) {
                      if (s == "crumpled") c.sim.layout = Layout::Crumpled;
                      else if (s == "straight") c.sim.layout = Layout::Straight;
                      else throw PreconditionError("sim.layout: expected crumpled or straight");
                    }});
  e.push_back(real<double>("sim.dt", "simulation step, s", [](RunConfig& c) -> double& { return c.sim.dt; }));
  e.push_back(integer<int>("sim.solver_iterations", "constraint solver sweeps per step",
                           [](RunConfig& c) -> int& { return c.sim.solver_iterations; }));
  e.push_back(real<double>("sim.length", "object length L, m", [](RunConfig& c) -> double& { return c.sim.length; }));
  e.push_back(integer<int>("sim.n_particles", "particles along the object",
                           [](RunConfig& c) -> int& { return c.sim.n_particles; }));
  e.push_back(real<double>("sim.anchor_x", "pinned end x, m", [](RunConfig& c) -> double& { return c.sim.anchor.x(); }));
  e.push_back(real<double>("sim.anchor_y", "pinned end y, m", [](RunConfig& c) -> double& { return c.sim.anchor.y(); }));
  e.push_back(real<double>("sim.workspace_x_min", "workspace bound, m",
                           [](RunConfig& c) -> double& { return c.sim.workspace.x_min; }));
  e.push_back(real<double>("sim.workspace_x_max", "workspace bound, m",
                           [](RunConfig& c) -> double& { return c.sim.workspace.x_max; }));
  e.push_back(real<double>("sim.workspace_y_min", "workspace bound, m",
                           [](RunConfig& c) -> double& { return c.sim.workspace.y_min; }));
  e.push_back(real<double>("sim.workspace_y_max", "workspace bound, m",
                           [](RunConfig& c) -> double& { return c.sim.workspace.y_max; }));
  e.push_back(real<double>("sim.heading_spread", "initial lay direction spread, rad",
                           [](RunConfig& c) -> double& { return c.sim.heading_spread; }));
  e.push_back(real<double>("sim.grasp_fraction", "initial grasp arc length / L",
                           [](RunConfig& c) -> double& { return c.sim.grasp_fraction; }));
  e.push_back(real<double>("sim.sensor_length", "sensing window along the finger, m",
                           [](RunConfig& c) -> double& { return c.sim.sensor_length; }));
  e.push_back(real<double>("sim.sensor_width", "sensing window across the finger, m",
                           [](RunConfig& c) -> double& { return c.sim.sensor_width; }));
  e.push_back(real<double>("sim.aperture_max", "largest finger opening, m",
                           [](RunConfig& c) -> double& { return c.sim.aperture_max; }));
  e.push_back(real<double>("sim.max_speed", "gripper speed limit, m/s",
                           [](RunConfig& c) -> double& { return c.sim.max_speed; }));
  e.push_back(real<double>("sim.max_angular_speed", "gripper turn-rate limit, rad/s",
                           [](RunConfig& c) -> double& { return c.sim.max_angular_speed; }));
  e.push_back(real<double>("sim.collision_radius", "gripper-to-pin collision distance, m",
                           [](RunConfig& c) -> double& { return c.sim.collision_radius; }));
  e.push_back(real<double>("sim.tension_limit", "pin tension proxy limit",
                           [](RunConfig& c) -> double& { return c.sim.tension_limit; }));
  e.push_back(real<double>("sim.incoming_drag", "lateral drag of the object entering the fingers",
                           [](RunConfig& c) -> double& { return c.sim.incoming_drag; }));
  e.push_back(real<double>("sim.dangle_mobility", "slip speed per unit dangling pull",
                           [](RunConfig& c) -> double& { return c.sim.dangle_mobility; }));
  e.push_back(real<double>("sim.arm_base_x", "arm base x, m", [](RunConfig& c) -> double& { return c.sim.arm.base.x(); }));
  e.push_back(real<double>("sim.arm_base_y", "arm base y, m", [](RunConfig& c) -> double& { return c.sim.arm.base.y(); }));
  e.push_back(Entry{{"sim.arm_links", "three link lengths, m, comma separated"},
                    [](const RunConfig& c) {
                      const auto& l = c.sim.arm.link_lengths;
                      return fmt(l[0]) + "," + fmt(l[1]) + "," + fmt(l[2]);
                    },
                    [](RunConfig& c, const std::string& s) {
                      const auto parts = split_list(s);
                      if (parts.size() != 3) throw PreconditionError("sim.arm_links: expected three lengths");
                      for (std::size_t i = 0; i < 3; ++i) c.sim.arm.link_lengths[i] = parse_double("sim.arm_links", parts[i]);
                    }});
  // tactile
  e.push_back(integer<int>("tactile.height", "tactile frame rows", [](RunConfig& c) -> int& { return c.tactile.height; }));
  e.push_back(integer<int>("tactile.width", "tactile frame columns", [](RunConfig& c) -> int& { return c.tactile.width; }));
  e.push_back(real<float>("tactile.p2m", "pixels per meter", [](RunConfig& c) -> float& { return c.tactile.p2m; }));
  // labeling
  e.push_back(integer<int>("labeling.binarize_threshold", "contact mask threshold, 0-255",
                           [](RunConfig& c) -> int& { return c.labeling.extraction.binarize_threshold; }));
  e.push_back(real<double>("labeling.gaussian_sigma", "pre-threshold blur, px",
                           [](RunConfig& c) -> double& { return c.labeling.extraction.gaussian_sigma; }));
  e.push_back(real<double>("labeling.min_area", "smallest contact blob, px^2",
                           [](RunConfig& c) -> double& { return c.labeling.extraction.min_area; }));
  e.push_back(integer<int>("labeling.ellipse_min_points", "contour points needed for an ellipse fit",
                           [](RunConfig& c) -> int& { return c.labeling.extraction.ellipse_min_points; }));
  e.push_back(Entry{{"labeling.normalizer", "center weight distance scale: center_norm|half_width"},
                    [](const RunConfig& c) {
                      return std::string(c.labeling.normalizer == CenterNormalizer::CenterNorm ? "center_norm" : "half_width");
                    },
                    [](RunConfig& c, const std::string& s) {
                      if (s == "center_norm") c.labeling.normalizer = CenterNormalizer::CenterNorm;
                      else if (s == "half_width") c.labeling.normalizer = CenterNormalizer::HalfWidth;
                      else throw PreconditionError("labeling.normalizer: expected center_norm or half_width");
                    }});
  // expert
  e.push_back(real<double>("expert.lookahead", "pursuit lookahead, m",
                           [](RunConfig& c) -> double& { return c.demos.gains.lookahead; }));
  e.push_back(real<double>("expert.centering", "contact recentering gain, 1/s",
                           [](RunConfig& c) -> double& { return c.demos.gains.centering; }));
  e.push_back(real<double>("expert.speed", "tracing speed, m/s", [](RunConfig& c) -> double& { return c.demos.gains.speed; }));
  e.push_back(real<double>("expert.stop_fraction", "stop once the contact passes this fraction of L",
                           [](RunConfig& c) -> double& { return c.demos.gains.stop_fraction; }));
  e.push_back(real<double>("expert.jitter", "action noise while tracing, m",
                           [](RunConfig& c) -> double& { return c.demos.jitter; }));
  e.push_back(integer<int>("expert.hold_steps", "steps recorded after stopping",
                           [](RunConfig& c) -> int& { return c.demos.hold_steps; }));
  e.push_back(integer<int>("expert.max_steps", "rollout step cap", [](RunConfig& c) -> int& { return c.demos.max_steps; }));
  // policy
  e.push_back(integer<int>("policy.visual_res", "visual observation side, px",
                           [](RunConfig& c) -> int& { return c.policy.visual_res; }));
  e.push_back(integer<int>("policy.visual_patch", "visual patch side, px",
                           [](RunConfig& c) -> int& { return c.policy.visual_patch; }));
  e.push_back(integer<int>("policy.tactile_res", "tactile observation side, px",
                           [](RunConfig& c) -> int& { return c.policy.tactile_res; }));
  e.push_back(integer<int>("policy.tactile_patch", "tactile patch side, px",
                           [](RunConfig& c) -> int& { return c.policy.tactile_patch; }));
  e.push_back(integer<int>("policy.patch_embed", "patch embedding width",
                           [](RunConfig& c) -> int& { return c.policy.patch_embed; }));
  e.push_back(integer<int>("policy.visual_feat", "visual feature width",
                           [](RunConfig& c) -> int& { return c.policy.visual_feat; }));
  e.push_back(integer<int>("policy.tactile_feat", "tactile feature width",
                           [](RunConfig& c) -> int& { return c.policy.tactile_feat; }));
  e.push_back(integer<int>("policy.kin_embed", "kinematic embedding width",
                           [](RunConfig& c) -> int& { return c.policy.kin_embed; }));
  e.push_back(integer<int>("policy.latent", "latent width", [](RunConfig& c) -> int& { return c.policy.latent; }));
  e.push_back(integer<int>("policy.enc_hidden", "encoder hidden width",
                           [](RunConfig& c) -> int& { return c.policy.enc_hidden; }));
  e.push_back(integer<int>("policy.dec_hidden", "decoder hidden width",
                           [](RunConfig& c) -> int& { return c.policy.dec_hidden; }));
  e.push_back(integer<int>("policy.chunk", "actions per chunk k", [](RunConfig& c) -> int& { return c.policy.chunk; }));
  e.push_back(real<double>("policy.lambda_reg", "KL weight", [](RunConfig& c) -> double& { return c.policy.lambda_reg; }));
  e.push_back(real<double>("policy.lambda_task", "completion loss weight",
                           [](RunConfig& c) -> double& { return c.policy.lambda_task; }));
  // train
  e.push_back(integer<int>("train.epochs", "training epochs", [](RunConfig& c) -> int& { return c.train.epochs; }));
  e.push_back(integer<int>("train.batch", "batch size", [](RunConfig& c) -> int& { return c.train.batch; }));
  e.push_back(real<double>("train.lr", "Adam learning rate", [](RunConfig& c) -> double& { return c.train.lr; }));
  e.push_back(integer<std::uint64_t>("train.seed", "training seed", [](RunConfig& c) -> std::uint64_t& { return c.train.seed; }));
  e.push_back(boolean("train.augment", "randomize brightness, contrast and gamma",
                      [](RunConfig& c) -> bool& { return c.train.augment; }));
  e.push_back(integer<int>("train.samples_per_episode", "random windows per training episode per epoch",
                           [](RunConfig& c) -> int& { return c.train.samples_per_episode; }));
  e.push_back(real<double>("train.val_fraction", "episodes held out for validation",
                           [](RunConfig& c) -> double& { return c.train.val_fraction; }));
  e.push_back(integer<int>("train.val_windows", "fixed validation windows",
                           [](RunConfig& c) -> int& { return c.train.val_windows; }));
  // eval
  e.push_back(integer<int>("eval.trials", "trials per preset", [](RunConfig& c) -> int& { return c.eval.trials; }));
  e.push_back(integer<std::uint64_t>("eval.seed", "evaluation seed", [](RunConfig& c) -> std::uint64_t& { return c.eval.seed; }));
  e.push_back(Entry{{"eval.presets", "presets to evaluate, comma separated"},
                    [](const RunConfig& c) {
                      std::string s;
                      for (const auto p : c.eval.presets) s += (s.empty() ? "" : ",") + std::string(to_string(p));
                      return s;
                    },
                    [](RunConfig& c, const std::string& s) {
                      c.eval.presets.clear();
                      for (const auto& name : split_list(s)) c.eval.presets.push_back(preset_from_string(name));
                    }});
  e.push_back(real<double>("eval.budget_multiplier", "step budget as a multiple of the expert's mean",
                           [](RunConfig& c) -> double& { return c.eval.budget_multiplier; }));
  e.push_back(integer<int>("eval.expert_runs", "expert runs used to set the step budget",
                           [](RunConfig& c) -> int& { return c.eval.expert_runs; }));
  // service
  e.push_back(integer<int>("service.port", "TCP port", [](RunConfig& c) -> int& { return c.service.port; }));
  e.push_back(text("service.bind", "listen address", [](RunConfig& c) -> std::string& { return c.service.bind; }));
  e.push_back(real<double>("service.tick_hz", "simulation rate, Hz", [](RunConfig& c) -> double& { return c.service.tick_hz; }));
  e.push_back(integer<int>("service.broadcast_every", "ticks between state broadcasts",
                           [](RunConfig& c) -> int& { return c.service.broadcast_every; }));
  e.push_back(text("service.dataset", "directory recorded episodes are appended to",
                   [](RunConfig& c) -> std::string& { return c.service.dataset; }));
  e.push_back(integer<std::uint64_t>("service.seed", "initial world seed",
                                     [](RunConfig& c) -> std::uint64_t& { return c.service.seed; }));
  e.push_back(integer<int>("service.w_max_samples", "joint samples for the manipulability maximum",
                           [](RunConfig& c) -> int& { return c.service.w_max_samples; }));
  e.push_back(real<double>("service.alert_lambda", "singularity alert fraction of the maximum",
                           [](RunConfig& c) -> double& { return c.service.alert_lambda; }));
  return e;
}

const std::vector<Entry>& entries() {
  static const std::vector<Entry> e = build_entries();
  return e;
}

const Entry& find_entry(const std::string& key) {
  for (const auto& e : entries()) {
    if (e.desc.key == key) return e;
  }
  throw PreconditionError("unknown config key '" + key + "'");
}

}  // namespace

DemoOptions RunConfig::demo_options() const {
  DemoOptions d = demos;
  d.tactile = tactile;
  d.labeling = labeling;
  return d;
}

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> k;
    for (const auto& e : entries()) k.push_back(e.desc);
    return k;
  }();
  return keys;
}

std::string get_config_value(const RunConfig& config, const std::string& key) { return find_entry(key).get(config); }

void set_config_value(RunConfig& config, const std::string& key, const std::string& value) {
  find_entry(key).set(config, value);
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(path.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw PreconditionError(std::string("config: ") + e.what());
  }
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw PreconditionError("config: key '" + section + "' outside a section");
    for (const auto& [name, value] : body) set_config_value(base, section + "." + name, value.data());
  }
  return base;
}

std::string dump_config(const RunConfig& config) {
  std::string out;
  std::string section;
  for (const auto& k : config_keys()) {
    const auto dot = k.key.find('.');
    const std::string s = k.key.substr(0, dot);
    if (s != section) {
      out += (section.empty() ? "" : "\n") + ("[" + s + "]\n");
      section = s;
    }
    out += "; " + k.help + "\n" + k.key.substr(dot + 1) + " = " + get_config_value(config, k.key) + "\n";
  }
  return out;
}

std::string config_json(const RunConfig& config) {
  nlohmann::ordered_json j;
  for (const auto& k : config_keys()) j[k.key] = get_config_value(config, k.key);
  return j.dump();
}

}  // namespace tracebench
