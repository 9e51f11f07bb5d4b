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

#include <cmath>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "tracebench/dataset.hpp"
#include "tracebench/demos.hpp"
#include "tracebench/error.hpp"
#include "tracebench/labeling.hpp"

using namespace tracebench;
namespace fs = std::filesystem;

namespace {

TactileFrame frame32() {
  TactileFrame f;
  f.image = Image(32, 32);
  return f;
}

ContactEstimate at(double u, double v) {
  ContactEstimate e;
  e.p_tac = {u, v};
  return e;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) : path(fs::temp_directory_path() / ("tracebench_test_" + tag)) {
    fs::remove_all(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

const std::vector<LabeledEpisode>& demos() {
  static const auto eps = generate_demos(3, SimConfig{}, DemoOptions{}, 5);
  return eps;
}

}  // namespace

TEST_SUITE("labeling") {
  TEST_CASE("center weight anchors") {
    const auto f = frame32();
    CHECK(center_weight(at(16, 16), f) == 1.0);
    CHECK(center_weight(at(0, 0), f) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
    CHECK(center_weight(at(24, 16), f) == doctest::Approx(0.702188501327).epsilon(1e-10));
    CHECK(center_weight(at(20, 13), f) == doctest::Approx(0.801740035342).epsilon(1e-10));
    CHECK(center_weight(std::nullopt, f) == kWeightFloor);
  }

  TEST_CASE("center weight decreases with distance") {
    const auto f = frame32();
    double last = 2.0;
    for (double d = 0.0; d < 16.0; d += 0.5) {
      const double w = center_weight(at(16 + d, 16), f);
      CHECK(w < last);
      CHECK(w > 0.0);
      CHECK(w <= 1.0);
      last = w;
    }
    CHECK(center_weight(at(24, 16), f, CenterNormalizer::HalfWidth) == doctest::Approx(std::exp(-0.5)));
  }

  TEST_CASE("completion index arithmetic and clamps") {
    const Vec2 p0(0, 0), pT(0.4, 0);
    CHECK(completion_index(p0, p0, pT) == 0.0);
    CHECK(completion_index(pT, p0, pT) == 1.0);
    CHECK(completion_index({0.1, 0}, p0, pT) == doctest::Approx(0.25));
    CHECK(completion_index({0.5, 0}, p0, pT) == 1.0);
    CHECK_THROWS_AS(completion_index({0.1, 0}, p0, p0), PreconditionError);
  }

  TEST_CASE("completion index is invariant to rigid motions") {
    const Vec2 p0(0.1, -0.2), pT(0.35, 0.1), pt(0.2, 0.05);
    const double base = completion_index(pt, p0, pT);
    const Pose2 T{0.7, -1.3, 2.1};
    CHECK(completion_index(T.apply(pt), T.apply(p0), T.apply(pT)) == doctest::Approx(base).epsilon(1e-12));
  }

  TEST_CASE("expert demos label cleanly") {
    for (const auto& le : demos()) {
      REQUIRE(le.weights.size() == le.episode.steps.size());
      CHECK(le.completion.back() == 1.0f);
      for (std::size_t t = 0; t < le.weights.size(); ++t) {
        CHECK(le.weights[t] > 0.0f);
        CHECK(le.weights[t] <= 1.0f);
        CHECK(le.contact_found[t] == 1);
        if (t > 0) CHECK(le.completion[t] >= le.completion[t - 1] - 0.02f);
      }
    }
  }

  TEST_CASE("blank mid frames hold the last completion") {
    auto ep = demos()[0].episode;
    for (std::size_t t = 20; t < 30; ++t) {
      for (auto& p : ep.steps[t].obs.tactile.image.pixels) p = 10;
    }
    const auto le = label_episode(ep);
    for (std::size_t t = 20; t < 30; ++t) {
      CHECK(le.contact_found[t] == 0);
      CHECK(le.weights[t] == static_cast<float>(kWeightFloor));
      CHECK(le.completion[t] == le.completion[19]);
    }
  }

  TEST_CASE("centered contacts give weights near one") {
    auto ep = demos()[0].episode;
    for (auto& s : ep.steps) s.obs.tactile = render_band(FrameSpec{}, BandSpec{}, 1, 1);
    // Same contact every step: completion undefined, so only weights matter.
    ep.steps.back().obs.kinematic[0] += 0.1f;
    const auto le = label_episode(ep);
    for (float w : le.weights) CHECK(w >= 0.99f);
  }

  TEST_CASE("label preconditions") {
    Episode ep = demos()[0].episode;
    ep.steps.resize(1);
    CHECK_THROWS_AS(label_episode(ep), PreconditionError);
    ep = demos()[0].episode;
    for (auto& p : ep.steps.back().obs.tactile.image.pixels) p = 10;
    CHECK_THROWS_AS(label_episode(ep), ConsistencyError);
  }

  TEST_CASE("labeling is deterministic") {
    const auto& le = demos()[1];
    CHECK(label_episode(le.episode) == le);
  }
}

TEST_SUITE("demos") {
  TEST_CASE("n below one is a precondition error") {
    CHECK_THROWS_AS(generate_demos(0, SimConfig{}, DemoOptions{}, 1), PreconditionError);
  }

  TEST_CASE("same seed gives identical demos") {
    CHECK(generate_demos(2, SimConfig{}, DemoOptions{}, 9) == generate_demos(2, SimConfig{}, DemoOptions{}, 9));
  }

  TEST_CASE("infeasible gains exhaust the attempt cap with the preset named") {
    DemoOptions o;
    o.max_steps = 5;  // never reaches the end
    try {
      generate_demos(2, SimConfig{}, o, 1);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("rope") != std::string::npos);
    }
  }

  TEST_CASE("recorded actions replay the rollout") {
    const SimConfig c;
    const auto r = record_demo(c, DemoOptions{}, 4);
    REQUIRE(r.success);
    WorldState w = spawn(c, 4);
    for (const auto& s : r.episode.steps) w = step(w, from_action(s.action), c);
    CHECK(w == r.final_world);
  }
}

TEST_SUITE("dataset") {
  TEST_CASE("round trip is exact") {
    TempDir d("roundtrip");
    write_dataset(d.path, demos(), R"({"k":"v"})");
    CHECK(read_dataset(d.path) == demos());
  }

  TEST_CASE("append adds an episode") {
    TempDir d("append");
    write_dataset(d.path, {demos()[0]});
    append_episode(d.path, demos()[1]);
    const auto back = read_dataset(d.path);
    REQUIRE(back.size() == 2);
    CHECK(back[1] == demos()[1]);
  }

  TEST_CASE("append creates a missing dataset") {
    TempDir d("append_new");
    append_episode(d.path, demos()[2]);
    CHECK(read_dataset(d.path) == std::vector<LabeledEpisode>{demos()[2]});
  }

  TEST_CASE("distinct corruption errors") {
    TempDir d("corrupt");
    write_dataset(d.path, {demos()[0]});
    const fs::path ep = d.path / "episode_0000";

    SUBCASE("bad tactile magic") {
      auto bytes = read_file(ep / "tactile.tacf");
      bytes[0] = 'Z';
      write_file(ep / "tactile.tacf", bytes);
      CHECK_THROWS_AS(read_dataset(d.path), FormatError);
    }
    SUBCASE("version mismatch") {
      auto m = nlohmann::json::parse(std::ifstream(d.path / "manifest.json"));
      m["version"] = 99;
      std::ofstream(d.path / "manifest.json") << m.dump();
      CHECK_THROWS_AS(read_dataset(d.path), VersionError);
    }
    SUBCASE("truncated stream") {
      auto bytes = read_file(ep / "kin.f32");
      bytes.resize(bytes.size() - 3);
      write_file(ep / "kin.f32", bytes);
      CHECK_THROWS_AS(read_dataset(d.path), TruncatedError);
    }
    SUBCASE("stream lengths disagree") {
      auto bytes = read_file(ep / "labels.f32");
      bytes.resize(bytes.size() - 12);
      write_file(ep / "labels.f32", bytes);
      CHECK_THROWS_AS(read_dataset(d.path), ConsistencyError);
    }
    SUBCASE("manifest count vs directories") {
      fs::create_directories(d.path / "episode_0001");
      CHECK_THROWS_AS(read_dataset(d.path), ConsistencyError);
    }
    SUBCASE("missing manifest") {
      fs::remove(d.path / "manifest.json");
      CHECK_THROWS_AS(read_dataset(d.path), FormatError);
    }
  }
}
