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

#include "tracebench/error.hpp"
#include "tracebench/eval.hpp"
#include "tracebench/expert.hpp"

using namespace tracebench;
namespace fs = std::filesystem;

namespace {

Trajectory ended(double frac, bool grasping, Status status, bool budget = false) {
  Trajectory tr;
  tr.length = 1.0;
  tr.status = status;
  tr.grasping = grasping;
  tr.final_arc = tr.max_arc = frac;
  tr.last_contact = Vec2(frac, 0.0);
  tr.budget_exhausted = budget;
  if (frac >= 0.95 && grasping) tr.success_time = 3.0;
  return tr;
}

}  // namespace

TEST_SUITE("eval") {
  TEST_CASE("wilson intervals from the result tables") {
    // Values frozen from tests/oracles/oracles.py (statsmodels).
    struct Row {
      int k, n;
      double lo, hi;
    };
    for (const Row r : {Row{32, 40, 65.2, 89.5}, Row{28, 40, 54.6, 81.9}, Row{27, 40, 52.0, 79.9},
                        Row{9, 10, 59.6, 98.2}, Row{8, 10, 49.0, 94.3}, Row{7, 10, 39.7, 89.2},
                        Row{6, 10, 31.3, 83.2}, Row{14, 20, 48.1, 85.5}, Row{12, 20, 38.7, 78.1},
                        Row{0, 10, 0.0, 27.8}, Row{10, 10, 72.2, 100.0}, Row{1, 1, 20.7, 100.0}}) {
      const auto [lo, hi] = wilson_ci(r.k, r.n);
      CHECK(lo == r.lo);
      CHECK(hi == r.hi);
    }
    const auto [lo90, hi90] = wilson_ci(14, 20, 0.90);
    CHECK(lo90 == 51.6);
    CHECK(hi90 == 83.6);
  }

  TEST_CASE("wilson monotone and symmetric") {
    for (int n : {10, 20, 40}) {
      for (int k = 0; k <= n; ++k) {
        const auto [lo, hi] = wilson_ci(k, n);
        const auto [mlo, mhi] = wilson_ci(n - k, n);
        CHECK(lo == doctest::Approx(100.0 - mhi));
        CHECK(hi == doctest::Approx(100.0 - mlo));
        if (k > 0) {
          const auto [plo, phi] = wilson_ci(k - 1, n);
          CHECK(lo >= plo);
          CHECK(hi >= phi);
        }
      }
    }
    CHECK_THROWS_AS(wilson_ci(3, 2), PreconditionError);
    CHECK_THROWS_AS(wilson_ci(0, 0), PreconditionError);
  }

  TEST_CASE("outcome classes") {
    CHECK(classify_outcome(ended(0.96, true, Status::Done, true)).outcome == Outcome::Success);
    CHECK(classify_outcome(ended(0.97, false, Status::Dropped)).outcome == Outcome::OverTracing);
    CHECK(classify_outcome(ended(0.5, false, Status::Dropped)).outcome == Outcome::ObjectDropping);
    CHECK(classify_outcome(ended(0.5, true, Status::Done, true)).outcome == Outcome::EarlyStopping);
    CHECK(classify_outcome(ended(0.99, true, Status::Collided)).outcome == Outcome::RobotCollision);
    CHECK(classify_outcome(ended(0.94, false, Status::Dropped)).outcome == Outcome::ObjectDropping);
    CHECK(classify_outcome(ended(0.96, false, Status::Dropped)).outcome == Outcome::OverTracing);
    CHECK_THROWS_AS(classify_outcome(ended(0.5, true, Status::Running)), StateError);
  }

  TEST_CASE("completion ratio") {
    auto tr = ended(0.5, false, Status::Dropped);
    CHECK(completion_ratio(tr).first == doctest::Approx(0.5));
    CHECK(completion_ratio(tr).second);
    tr.last_contact.reset();
    CHECK(completion_ratio(tr).first == 0.0);
    CHECK_FALSE(completion_ratio(tr).second);
    CHECK(classify_outcome(ended(1.0, true, Status::Done, true)).completion_ratio == doctest::Approx(1.0));
  }

  TEST_CASE("outcome names round trip") {
    for (auto o : kAllOutcomes) CHECK(outcome_from_string(to_string(o)) == o);
    CHECK_THROWS_AS(outcome_from_string("nope"), FormatError);
  }

  TEST_CASE("expert on a taut line always succeeds") {
    SimConfig c;
    c.layout = Layout::Straight;
    EvalSettings s;
    s.trials = 10;
    const auto rep = run_eval([&] { return std::make_unique<ExpertController>(ExpertGains{}, c.dt); }, c, s);
    REQUIRE(rep.trials.size() == 10);
    for (const auto& t : rep.trials) {
      CHECK(t.outcome == Outcome::Success);
      CHECK(t.completion_ratio >= 0.95 - 0.02);
      CHECK(t.success_time.has_value());
    }
  }

  TEST_CASE("eval is deterministic and empty when asked for no trials") {
    const SimConfig c;
    EvalSettings s;
    s.trials = 4;
    auto f = [&] { return std::make_unique<ExpertController>(ExpertGains{}, c.dt); };
    CHECK(run_eval(f, c, s).trials == run_eval(f, c, s).trials);
    s.trials = 0;
    CHECK(run_eval(f, c, s).trials.empty());
    CHECK(summarize({}).empty());
  }

  TEST_CASE("crumpled full trace ratio matches the straightened fraction") {
    const SimConfig c;
    EvalSettings s;
    s.trials = 5;
    const auto rep = run_eval([&] { return std::make_unique<ExpertController>(ExpertGains{}, c.dt); }, c, s);
    for (const auto& t : rep.trials) {
      REQUIRE(t.outcome == Outcome::Success);
      CHECK(t.completion_ratio <= 1.0 + 1e-9);
      // The taut-grasp model pulls the traced part straight: distance equals arc.
      CHECK(std::abs(t.completion_ratio - t.final_arc / c.length) <= 0.05);
    }
  }

  TEST_CASE("table rows and csv round trip") {
    std::vector<TrialOutcome> trials;
    for (int i = 0; i < 40; ++i) {
      TrialOutcome t;
      t.seed = static_cast<std::uint64_t>(i);
      t.outcome = i < 32 ? Outcome::Success : kAllOutcomes[static_cast<std::size_t>(1 + i % 4)];
      if (t.outcome == Outcome::Success) t.success_time = 3.0 + 0.01 * i;
      t.completion_ratio = 0.9;
      t.preset = i % 2 ? ObjectPreset::Rope : ObjectPreset::Cable;
      trials.push_back(t);
    }
    const auto rows = summarize(trials);
    REQUIRE(rows.size() == 3);
    CHECK(rows.back().label == "all");
    CHECK(rows.back().trials == 40);
    const auto table = format_table(rows);
    CHECK(table.find("80.0% [65.2, 89.5]") != std::string::npos);

    const fs::path p = fs::temp_directory_path() / "tracebench_results.csv";
    write_results_csv(p, trials);
    CHECK(read_results_csv(p) == trials);
    std::ofstream(p, std::ios::app) << "1,rope,bogus,,0,0,0,0\n";
    CHECK_THROWS_AS(read_results_csv(p), FormatError);
    fs::remove(p);
  }
}
