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
#include <random>

#include "tracebench/arm.hpp"
#include "tracebench/error.hpp"
#include "tracebench/expert.hpp"
#include "tracebench/render.hpp"
#include "tracebench/sim.hpp"

using namespace tracebench;

namespace {

SimConfig straight_config(double length = 0.5) {
  SimConfig c;
  c.layout = Layout::Straight;
  c.heading_spread = 0.0;
  c.length = length;
  c.workspace.x_max = length + 0.2;
  return c;
}

}  // namespace

TEST_SUITE("sim") {
  TEST_CASE("spawn is deterministic per seed") {
    const SimConfig c;
    CHECK(spawn(c, 7) == spawn(c, 7));
    CHECK_FALSE(spawn(c, 7) == spawn(c, 8));
  }

  TEST_CASE("spawn rejects a two-particle rope") {
    SimConfig c;
    c.n_particles = 2;
    CHECK_THROWS_AS(spawn(c, 1), PreconditionError);
  }

  TEST_CASE("spawn rejects a workspace the walk cannot fit in") {
    SimConfig c;
    c.workspace = {-0.01, 0.05, -0.01, 0.05};
    CHECK_THROWS_AS(spawn(c, 1), PreconditionError);
  }

  TEST_CASE("total rest length equals L over seeds") {
    const SimConfig c;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const auto w = spawn(c, seed);
      CHECK(w.rope.total_rest_length() == doctest::Approx(c.length).epsilon(1e-12));
      CHECK(w.rope.particles.front() == c.anchor);
      CHECK(w.gripper.grasping);
      CHECK(w.grasp.arc <= 0.05 * c.length + 1e-12);
    }
  }

  TEST_CASE("pinned particle never moves") {
    const SimConfig c;
    WorldState w = spawn(c, 3);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> d(-0.05, 0.05);
    for (int t = 0; t < 200 && w.status == Status::Running; ++t) {
      GripperAction a = expert_action(w, ExpertGains{});
      a.target_pose.x += d(rng);
      a.target_pose.y += d(rng);
      w = step(w, a, c);
      REQUIRE(w.rope.particles.front() == c.anchor);
    }
  }

  TEST_CASE("holding pose on a straight rope leaves the contact in place") {
    const auto c = straight_config();
    WorldState w = spawn(c, 1);
    const auto before = contact_point(w);
    REQUIRE(before);
    for (int t = 0; t < 30; ++t) w = step(w, hold_action(w), c);
    const auto after = contact_point(w);
    REQUIRE(after);
    CHECK((after->point - before->point).norm() < 1e-6);
    CHECK(w.status == Status::Running);
  }

  TEST_CASE("contact point on a taut line") {
    auto c = straight_config(1.0);
    WorldState w = spawn(c, 1);
    w.gripper.pose = {0.3, 0.0, 0.0};
    w.grasp = {0.3, 0.0};
    const auto cp = contact_point(w);
    REQUIRE(cp);
    CHECK(cp->arc == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(cp->point.x() == doctest::Approx(0.3));
    CHECK(cp->point.y() == doctest::Approx(0.0));

    w.gripper.grasping = false;
    CHECK_FALSE(contact_point(w));
  }

  TEST_CASE("a fast perpendicular jerk drops the rope from a small window") {
    auto c = straight_config();
    c.sensor_length = 0.004;
    WorldState w = spawn(c, 1);
    for (int t = 0; t < 3 && w.status == Status::Running; ++t) {
      GripperAction a = hold_action(w);
      a.target_pose.y += 0.05;  // across the rope
      w = step(w, a, c);
    }
    CHECK(w.status == Status::Dropped);
    CHECK_FALSE(contact_point(w));
  }

  TEST_CASE("opening the gripper drops the rope") {
    const SimConfig c;
    WorldState w = spawn(c, 2);
    GripperAction a = hold_action(w);
    a.target_aperture = c.aperture_max;
    w = step(w, a, c);
    CHECK(w.status == Status::Dropped);
  }

  TEST_CASE("stepping a finished world is an error") {
    const SimConfig c;
    const WorldState w = finish(spawn(c, 2));
    CHECK(w.status == Status::Done);
    CHECK_THROWS_AS(step(w, hold_action(w), c), StateError);
  }

  TEST_CASE("per-step gripper displacement respects the velocity limit") {
    const SimConfig c;
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      WorldState w = spawn(c, seed);
      for (int t = 0; t < 50 && w.status == Status::Running; ++t) {
        const GripperAction a{{w.gripper.pose.x + d(rng), w.gripper.pose.y + d(rng), d(rng) * 3.0},
                              w.gripper.aperture};
        const WorldState next = step(w, a, c);
        CHECK((next.gripper.pose.position() - w.gripper.pose.position()).norm() <= c.max_speed * c.dt + 1e-9);
        w = next;
      }
    }
  }

  TEST_CASE("arm forward kinematics follows the gripper") {
    const SimConfig c;
    WorldState w = spawn(c, 4);
    for (int t = 0; t < 60 && w.status == Status::Running; ++t) {
      w = step(w, expert_action(w, ExpertGains{}), c);
      const Vec2 tip = forward_kinematics(w.arm.base, w.arm.link_lengths, w.arm.joint_angles);
      CHECK((tip - w.gripper.pose.position()).norm() < 1e-6);
    }
  }

  TEST_CASE("contact arc increases along an expert rollout") {
    const SimConfig c;
    const ExpertGains gains;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      WorldState w = spawn(c, seed);
      double last = contact_point(w)->arc;
      int increases = 0;
      while (w.status == Status::Running && w.grasp.arc < gains.stop_fraction * c.length - 0.01) {
        w = step(w, expert_action(w, gains), c);
        REQUIRE(w.status == Status::Running);
        const double s = contact_point(w)->arc;
        CHECK(s > last);
        increases += s > last;
        last = s;
      }
      CHECK(increases > 50);
    }
  }

  TEST_CASE("strain stays within two percent") {
    const SimConfig c;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      WorldState w = spawn(c, seed);
      for (int t = 0; t < 150 && w.status == Status::Running; ++t) {
        w = step(w, expert_action(w, ExpertGains{}), c);
        CHECK(max_strain(w.rope) <= 0.02);
      }
    }
  }
}

TEST_SUITE("render") {
  TEST_CASE("empty scene is background") {
    WorldState w;
    w.workspace = Workspace{};
    w.gripper.pose = {5.0, 5.0, 0.0};  // outside the view
    const Image img = render_visual(w, 64);
    for (auto p : img.pixels) REQUIRE(p == kVisualBackground);
  }

  TEST_CASE("render is deterministic and rejects bad resolutions") {
    const auto w = spawn(SimConfig{}, 9);
    CHECK(render_visual(w, 64) == render_visual(w, 64));
    CHECK_THROWS_AS(render_visual(w, 16), PreconditionError);
    CHECK_THROWS_AS(render_visual(w, 512), PreconditionError);
  }

  TEST_CASE("rope pixels are bright") {
    const auto w = spawn(SimConfig{}, 5);
    const int res = 128;
    const Image img = render_visual(w, res);
    const auto view = ViewTransform::for_workspace(w.workspace, res);
    // Independent sampling: the pixel containing any point of the polyline
    // has its center within sqrt(2)/2 px of the line.
    int checked = 0;
    for (double s = 0.0; s <= w.length; s += 0.002) {
      const Vec2 px = view.to_pixel(w.rope.point_at(s));
      const int c = static_cast<int>(std::floor(px.x()));
      const int r = static_cast<int>(std::floor(px.y()));
      if (c < 0 || r < 0 || c >= res || r >= res) continue;
      CHECK(img.at(c, r) >= 200);
      ++checked;
    }
    CHECK(checked > 200);
  }
}
