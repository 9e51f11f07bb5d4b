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

#include "tracebench/dataset.hpp"

#include <cstdio>
#include <fstream>
#include <iterator>
#include <set>

#include <nlohmann/json.hpp>

#include "tracebench/bytes.hpp"
#include "tracebench/error.hpp"

namespace tracebench {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

constexpr const char* kFormatName = "tracebench-dataset";

std::string episode_dir_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "episode_%04zu", i);
  return buf;
}

ojson parse_json_file(const fs::path& path) {
  const auto bytes = read_file(path);
  try {
    return ojson::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_json_file(const fs::path& path, const ojson& doc) {
  const std::string text = doc.dump(2) + "\n";
  write_file(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

// Splits `bytes` into records of `record` bytes, distinguishing a torn
// record (truncated) from a whole-record count that disagrees with T.
void check_stream(const std::vector<std::uint8_t>& bytes, std::size_t record, std::size_t steps,
                  const std::string& name) {
  if (bytes.size() % record != 0) {
    throw TruncatedError(name + ": truncated stream (" + std::to_string(bytes.size()) + " bytes)");
  }
  if (bytes.size() / record != steps) {
    throw ConsistencyError(name + ": holds " + std::to_string(bytes.size() / record) +
                           " records, meta declares " + std::to_string(steps));
  }
}

void write_episode(const fs::path& dir, const LabeledEpisode& le) {
  const Episode& ep = le.episode;
  const std::size_t n = ep.steps.size();
  if (n < 2) throw PreconditionError("an episode needs at least 2 steps");
  if (le.weights.size() != n || le.completion.size() != n || le.contact_found.size() != n) {
    throw ConsistencyError("label streams do not match the episode length");
  }
  const int res = ep.steps.front().obs.visual.width;
  const auto& t0 = ep.steps.front().obs.tactile;
  fs::create_directories(dir);

  std::vector<std::uint8_t> kin, labels, visual, tactile;
  kin.reserve(n * 32);
  for (std::size_t t = 0; t < n; ++t) {
    const auto& step = ep.steps[t];
    if (step.obs.visual.width != res || step.obs.visual.height != res) {
      throw ConsistencyError("visual resolution changes within an episode");
    }
    if (step.obs.tactile.width() != t0.width() || step.obs.tactile.height() != t0.height()) {
      throw ConsistencyError("tactile resolution changes within an episode");
    }
    for (float v : step.obs.kinematic) bytes::put_f32(kin, v);
    for (float v : step.action) bytes::put_f32(kin, v);
    bytes::put_f32(labels, le.weights[t]);
    bytes::put_f32(labels, le.completion[t]);
    bytes::put_f32(labels, le.contact_found[t] ? 1.0f : 0.0f);
    visual.insert(visual.end(), step.obs.visual.pixels.begin(), step.obs.visual.pixels.end());
    append_tacf(tactile, step.obs.tactile);
  }

  ojson meta;
  meta["seed"] = ep.seed;
  meta["preset"] = std::string(to_string(ep.preset));
  meta["p0"] = {ep.p0.x(), ep.p0.y()};
  meta["rate_hz"] = ep.rate_hz;
  meta["steps"] = n;
  meta["visual_resolution"] = res;
  meta["tactile_height"] = t0.height();
  meta["tactile_width"] = t0.width();
  write_json_file(dir / "meta.json", meta);
  write_file(dir / "kin.f32", kin);
  write_file(dir / "labels.f32", labels);
  write_file(dir / "visual.u8", visual);
  write_file(dir / "tactile.tacf", tactile);
}

LabeledEpisode read_episode(const fs::path& dir) {
  const ojson meta = parse_json_file(dir / "meta.json");
  LabeledEpisode le;
  Episode& ep = le.episode;
  std::size_t n = 0;
  int res = 0;
  int th = 0;
  int tw = 0;
  try {
    ep.seed = meta.at("seed").get<std::uint64_t>();
    ep.preset = preset_from_string(meta.at("preset").get<std::string>());
    ep.p0 = {meta.at("p0").at(0).get<double>(), meta.at("p0").at(1).get<double>()};
    ep.rate_hz = meta.at("rate_hz").get<double>();
    n = meta.at("steps").get<std::size_t>();
    res = meta.at("visual_resolution").get<int>();
    th = meta.at("tactile_height").get<int>();
    tw = meta.at("tactile_width").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError((dir / "meta.json").string() + ": " + e.what());
  } catch (const PreconditionError& e) {
    throw FormatError((dir / "meta.json").string() + ": " + e.what());
  }
  if (n < 2 || res <= 0 || th <= 0 || tw <= 0 || !(ep.rate_hz > 0.0)) {
    throw FormatError((dir / "meta.json").string() + ": invalid sizes");
  }

  const auto kin = read_file(dir / "kin.f32");
  const auto labels = read_file(dir / "labels.f32");
  const auto visual = read_file(dir / "visual.u8");
  const auto tactile = read_file(dir / "tactile.tacf");
  check_stream(kin, 32, n, "kin.f32");
  check_stream(labels, 12, n, "labels.f32");
  const auto pixels = static_cast<std::size_t>(res) * static_cast<std::size_t>(res);
  check_stream(visual, pixels, n, "visual.u8");
  check_stream(tactile, kTacfHeaderSize + static_cast<std::size_t>(th) * static_cast<std::size_t>(tw), n,
               "tactile.tacf");

  ep.steps.resize(n);
  le.weights.resize(n);
  le.completion.resize(n);
  le.contact_found.resize(n);
  std::size_t ko = 0;
  std::size_t lo = 0;
  std::size_t to = 0;
  for (std::size_t t = 0; t < n; ++t) {
    auto& step = ep.steps[t];
    for (auto& v : step.obs.kinematic) v = bytes::get_f32(kin, ko);
    for (auto& v : step.action) v = bytes::get_f32(kin, ko);
    le.weights[t] = bytes::get_f32(labels, lo);
    le.completion[t] = bytes::get_f32(labels, lo);
    le.contact_found[t] = bytes::get_f32(labels, lo) != 0.0f ? 1 : 0;
    step.obs.visual = Image(res, res);
    std::copy_n(visual.begin() + static_cast<std::ptrdiff_t>(t * pixels), pixels,
                step.obs.visual.pixels.begin());
    step.obs.tactile = read_tacf(tactile, to, static_cast<double>(t) / ep.rate_hz);
    if (step.obs.tactile.height() != th || step.obs.tactile.width() != tw) {
      throw ConsistencyError("tactile.tacf: frame size disagrees with meta.json");
    }
  }
  return le;
}

ojson manifest_for(const std::vector<std::string>& dirs, const std::vector<std::size_t>& steps,
                   const std::string& config_echo) {
  ojson manifest;
  manifest["format"] = kFormatName;
  manifest["version"] = kDatasetVersion;
  manifest["episode_count"] = dirs.size();
  ojson list = ojson::array();
  for (std::size_t i = 0; i < dirs.size(); ++i) list.push_back({{"dir", dirs[i]}, {"steps", steps[i]}});
  manifest["episodes"] = list;
  try {
    manifest["config"] = config_echo.empty() ? ojson::object() : ojson::parse(config_echo);
  } catch (const nlohmann::json::exception& e) {
    throw PreconditionError(std::string("config echo is not JSON: ") + e.what());
  }
  return manifest;
}

}  // namespace

std::vector<std::uint8_t> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("short write to " + path.string());
}

void write_dataset(const fs::path& dir, const std::vector<LabeledEpisode>& episodes,
                   const std::string& config_echo) {
  fs::create_directories(dir);
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_directory() && entry.path().filename().string().starts_with("episode_")) {
      fs::remove_all(entry.path());
    }
  }
  std::vector<std::string> dirs;
  std::vector<std::size_t> steps;
  for (std::size_t i = 0; i < episodes.size(); ++i) {
    dirs.push_back(episode_dir_name(i));
    steps.push_back(episodes[i].episode.steps.size());
    write_episode(dir / dirs.back(), episodes[i]);
  }
  write_json_file(dir / "manifest.json", manifest_for(dirs, steps, config_echo));
}

void append_episode(const fs::path& dir, const LabeledEpisode& episode, const std::string& config_echo) {
  std::vector<std::string> dirs;
  std::vector<std::size_t> steps;
  std::string echo = config_echo;
  if (fs::exists(dir / "manifest.json")) {
    const ojson manifest = parse_json_file(dir / "manifest.json");
    for (const auto& e : manifest.at("episodes")) {
      dirs.push_back(e.at("dir").get<std::string>());
      steps.push_back(e.at("steps").get<std::size_t>());
    }
    if (manifest.contains("config")) echo = manifest["config"].dump();
  }
  fs::create_directories(dir);
  dirs.push_back(episode_dir_name(dirs.size()));
  steps.push_back(episode.episode.steps.size());
  write_episode(dir / dirs.back(), episode);
  write_json_file(dir / "manifest.json", manifest_for(dirs, steps, echo));
}

std::vector<LabeledEpisode> read_dataset(const fs::path& dir) {
  const ojson manifest = parse_json_file(dir / "manifest.json");
  std::vector<std::string> dirs;
  try {
    if (manifest.at("format").get<std::string>() != kFormatName) {
      throw FormatError("manifest.json: not a tracebench dataset");
    }
    const int version = manifest.at("version").get<int>();
    if (version != kDatasetVersion) {
      throw VersionError("dataset version " + std::to_string(version) + " is not supported (expected " +
                         std::to_string(kDatasetVersion) + ")");
    }
    for (const auto& e : manifest.at("episodes")) dirs.push_back(e.at("dir").get<std::string>());
    if (manifest.at("episode_count").get<std::size_t>() != dirs.size()) {
      throw ConsistencyError("manifest.json: episode_count disagrees with the episode list");
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("manifest.json: ") + e.what());
  }

  std::set<std::string> on_disk;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (entry.is_directory() && name.starts_with("episode_")) on_disk.insert(name);
  }
  if (on_disk != std::set<std::string>(dirs.begin(), dirs.end())) {
    throw ConsistencyError("manifest.json lists " + std::to_string(dirs.size()) + " episodes, " +
                           std::to_string(on_disk.size()) + " episode directories on disk");
  }
  std::vector<LabeledEpisode> out;
  out.reserve(dirs.size());
  for (const auto& d : dirs) out.push_back(read_episode(dir / d));
  return out;
}

}  // namespace tracebench
