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

#include <Eigen/Dense>

#include "tracebench/error.hpp"
#include "tracebench/sim.hpp"
#include "tracebench/tactile.hpp"

using namespace tracebench;

TEST_SUITE("tactile") {
  TEST_CASE("background frame stays below the noise ceiling") {
    const auto f = render_band(FrameSpec{}, std::nullopt, 1, 99);
    for (auto p : f.image.pixels) REQUIRE(p <= 20 + 4 * 5);
    CHECK_FALSE(extract_contact(f, ExtractionParams{}));
  }

  TEST_CASE("no grasp renders background") {
    auto w = spawn(SimConfig{}, 1);
    w.gripper.grasping = false;
    const auto f = render_tactile(w, FrameSpec{}, 3);
    for (auto p : f.image.pixels) REQUIRE(p <= 40);
  }

  TEST_CASE("render is deterministic") {
    const auto w = spawn(SimConfig{}, 4);
    CHECK(render_tactile(w, FrameSpec{}, 12) == render_tactile(w, FrameSpec{}, 12));
  }

  TEST_CASE("centered grasp puts the band centroid on the sensing center") {
    const auto w = spawn(SimConfig{}, 2);  // spawns with zero contact offset
    const auto f = render_tactile(w, FrameSpec{}, 5);
    double sx = 0, sy = 0, n = 0;
    for (int r = 0; r < f.height(); ++r) {
      for (int c = 0; c < f.width(); ++c) {
        if (f.image.at(c, r) > 60) {
          sx += c + 0.5;
          sy += r + 0.5;
          n += 1;
        }
      }
    }
    REQUIRE(n > 0);
    CHECK(std::hypot(sx / n - 16.0, sy / n - 16.0) <= 1.0);
  }

  TEST_CASE("odd frame sizes are rejected") {
    FrameSpec s;
    s.width = 31;
    CHECK_THROWS_AS(render_band(s, BandSpec{}, 1, 1), PreconditionError);
  }

  TEST_CASE("extraction accuracy on random placements") {
    const FrameSpec spec;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> where(3.2, 28.8);
    std::uniform_real_distribution<double> ang(-M_PI, M_PI);
    for (int i = 0; i < 100; ++i) {
      BandSpec b;
      b.contact = {where(rng), where(rng)};
      const double a = ang(rng);
      b.direction = {std::cos(a), std::sin(a)};
      const auto f = render_band(spec, b, 7, static_cast<std::uint64_t>(i));
      const auto e = extract_contact(f, ExtractionParams{});
      REQUIRE(e);
      CHECK((e->p_tac - b.contact).norm() <= 2.0);
      CHECK(e->contact_area >= ExtractionParams{}.min_area);
      CHECK(e->p_tac.x() >= 0.0);
      CHECK(e->p_tac.x() < 32.0);
    }
  }

  TEST_CASE("extraction is translation equivariant") {
    const FrameSpec spec;
    BandSpec b;
    b.contact = {14.0, 15.0};
    b.direction = {0.0, 1.0};
    const auto e0 = extract_contact(render_band(spec, b, 3, 0), ExtractionParams{});
    for (double dx : {-3.0, -1.0, 2.0, 4.0}) {
      BandSpec moved = b;
      moved.contact.y() += 0.0;
      moved.contact.x() += dx;
      const auto e1 = extract_contact(render_band(spec, moved, 3, 0), ExtractionParams{});
      REQUIRE(e0);
      REQUIRE(e1);
      CHECK(std::abs((e1->p_tac.x() - e0->p_tac.x()) - dx) <= 0.5);
    }
  }

  TEST_CASE("small blob falls back to PCA at its centroid") {
    TactileFrame f;
    f.image = Image(32, 32, 10);
    for (int r = 10; r < 12; ++r) {
      for (int c = 20; c < 22; ++c) f.image.at(c, r) = 255;
    }
    ExtractionParams p;
    p.gaussian_sigma = 0.3;  // keep the 2x2 blob at four boundary pixels
    p.min_area = 3.0;
    const auto e = extract_contact(f, p);
    REQUIRE(e);
    CHECK(e->method == ContactMethod::PCA);
    CHECK(e->p_tac.x() == doctest::Approx(21.0));
    CHECK(e->p_tac.y() == doctest::Approx(11.0));
  }

  TEST_CASE("large band uses the ellipse fit") {
    BandSpec b;
    const auto e = extract_contact(render_band(FrameSpec{}, b, 1, 1), ExtractionParams{});
    REQUIRE(e);
    CHECK(e->method == ContactMethod::EllipseFit);
  }

  TEST_CASE("extraction is deterministic") {
    const auto f = render_band(FrameSpec{}, BandSpec{}, 2, 2);
    const auto a = extract_contact(f, ExtractionParams{});
    const auto b = extract_contact(f, ExtractionParams{});
    REQUIRE(a);
    REQUIRE(b);
    CHECK(a->p_tac == b->p_tac);
  }

  TEST_CASE("ellipse fit recovers a known ellipse") {
    std::vector<Vec2> pts;
    for (int i = 0; i < 40; ++i) {
      const double t = 2.0 * M_PI * i / 40;
      const double x = 4.0 * std::cos(t), y = 1.5 * std::sin(t);
      pts.emplace_back(10.0 + x * std::cos(0.4) - y * std::sin(0.4), 7.0 + x * std::sin(0.4) + y * std::cos(0.4));
    }
    const auto e = fit_ellipse(pts);
    REQUIRE(e);
    CHECK(e->center.x() == doctest::Approx(10.0).epsilon(1e-9));
    CHECK(e->center.y() == doctest::Approx(7.0).epsilon(1e-9));
    std::vector<Vec2> line{{0, 0}, {1, 1}, {2, 2}, {3, 3}, {4, 4}, {5, 5}};
    CHECK_FALSE(fit_ellipse(line));
  }

  TEST_CASE("pixel to gripper arithmetic") {
    TactileFrame f;
    f.image = Image(32, 32);
    f.p2m = 2000.0f;
    const Vec3 origin = pixel_to_gripper(f.center(), f);
    CHECK(origin.norm() == 0.0);
    const Vec3 p = pixel_to_gripper(f.center() + Vec2(100.0, -50.0), f);
    CHECK(p.x() == doctest::Approx(0.05));
    CHECK(p.y() == doctest::Approx(-0.025));
    CHECK(p.z() == 0.0);
    const Vec2 back = gripper_to_pixel(p, f);
    CHECK((back - (f.center() + Vec2(100.0, -50.0))).norm() < 1e-9);
  }

  TEST_CASE("gripper to world transforms") {
    const Vec3 q = gripper_to_world({0.1, 0.0, 0.0}, {1.0, 2.0, M_PI / 2});
    CHECK(q.x() == doctest::Approx(1.0));
    CHECK(q.y() == doctest::Approx(2.1));
    CHECK(gripper_to_world({0.3, -0.2, 0.0}, {}) == Vec3(0.3, -0.2, 0.0));

    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    auto matrix = [](const Pose2& p) {
      Eigen::Matrix3d m;
      m << std::cos(p.theta), -std::sin(p.theta), p.x, std::sin(p.theta), std::cos(p.theta), p.y, 0, 0, 1;
      return m;
    };
    for (int i = 0; i < 50; ++i) {
      const Pose2 a{u(rng), u(rng), u(rng)}, b{u(rng), u(rng), u(rng)};
      const Vec3 pt(u(rng), u(rng), 0.0);
      const Vec3 composed = gripper_to_world(gripper_to_world(pt, b), a);
      const Eigen::Vector3d oracle = matrix(a) * matrix(b) * Eigen::Vector3d(pt.x(), pt.y(), 1.0);
      CHECK((composed.head<2>() - oracle.head<2>()).norm() < 1e-12);
      const Vec3 round = world_to_gripper(gripper_to_world(pt, a), a);
      CHECK((round - pt).norm() < 1e-9);
    }
  }

  TEST_CASE("tacf round trip and corruption") {
    const auto f = render_band(FrameSpec{}, BandSpec{}, 4, 4, 0.5);
    std::vector<std::uint8_t> bytes;
    append_tacf(bytes, f);
    CHECK(bytes.size() == kTacfHeaderSize + 32 * 32);
    std::size_t off = 0;
    CHECK(read_tacf(bytes, off, 0.5) == f);
    CHECK(off == bytes.size());

    auto bad = bytes;
    bad[0] = 'X';
    off = 0;
    CHECK_THROWS_AS(read_tacf(bad, off, 0.0), FormatError);
    bad = bytes;
    bad[4] = 9;  // version
    off = 0;
    CHECK_THROWS_AS(read_tacf(bad, off, 0.0), VersionError);
    bad = bytes;
    bad.resize(100);
    off = 0;
    CHECK_THROWS_AS(read_tacf(bad, off, 0.0), TruncatedError);
  }
}
