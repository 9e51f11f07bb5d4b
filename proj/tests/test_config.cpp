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

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "tracebench/config.hpp"
#include "tracebench/error.hpp"

using namespace tracebench;
namespace fs = std::filesystem;

TEST_SUITE("config") {
  TEST_CASE("every key reads back what it was set to") {
    const RunConfig defaults;
    std::set<std::string> seen;
    for (const auto& k : config_keys()) {
      CAPTURE(k.key);
      CHECK(seen.insert(k.key).second);
      CHECK(k.key.find('.') != std::string::npos);
      CHECK_FALSE(k.help.empty());
      RunConfig c;
      const std::string v = get_config_value(defaults, k.key);
      set_config_value(c, k.key, v);
      CHECK(get_config_value(c, k.key) == v);
    }
    CHECK(seen.count("sim.dt"));
    CHECK(seen.count("train.epochs"));
    CHECK(seen.count("service.port"));
  }

  TEST_CASE("setting a value changes the struct") {
    RunConfig c;
    set_config_value(c, "sim.dt", "0.02");
    CHECK(c.sim.dt == 0.02);
    set_config_value(c, "sim.preset", "cable");
    CHECK(c.sim.preset == ObjectPreset::Cable);
    set_config_value(c, "service.port", "9000");
    CHECK(c.service.port == 9000);
  }

  TEST_CASE("bad keys and values") {
    RunConfig c;
    CHECK_THROWS_AS(set_config_value(c, "sim.nope", "1"), PreconditionError);
    CHECK_THROWS_AS(get_config_value(c, "nope"), PreconditionError);
    CHECK_THROWS_AS(set_config_value(c, "sim.dt", "fast"), PreconditionError);
    CHECK_THROWS_AS(set_config_value(c, "service.port", "1.5"), PreconditionError);
  }

  TEST_CASE("ini load and dump") {
    const fs::path p = fs::temp_directory_path() / "tracebench_cfg.ini";
    {
      std::ofstream f(p);
      f << "[sim]\ndt = 0.05\npreset = cable\n\n[train]\nepochs = 7\n";
    }
    const RunConfig c = load_config(p);
    CHECK(c.sim.dt == 0.05);
    CHECK(c.sim.preset == ObjectPreset::Cable);
    CHECK(get_config_value(c, "train.epochs") == "7");

    // A dump loads back to the same values.
    {
      std::ofstream f(p);
      f << dump_config(c);
    }
    const RunConfig d = load_config(p);
    for (const auto& k : config_keys()) CHECK(get_config_value(d, k.key) == get_config_value(c, k.key));
    CHECK(config_json(d) == config_json(c));

    {
      std::ofstream f(p);
      f << "[sim]\nbogus = 1\n";
    }
    CHECK_THROWS_AS(load_config(p), PreconditionError);
    {
      std::ofstream f(p);
      f << "dt = 1\n";
    }
    CHECK_THROWS_AS(load_config(p), PreconditionError);
    fs::remove(p);
  }
}
