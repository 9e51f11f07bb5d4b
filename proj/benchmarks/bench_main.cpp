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

#include <benchmark/benchmark.h>

#include "tracebench/demos.hpp"
#include "tracebench/expert.hpp"
#include "tracebench/policy.hpp"
#include "tracebench/render.hpp"
#include "tracebench/sim.hpp"
#include "tracebench/tactile.hpp"

using namespace tracebench;

namespace {

void BM_Step(benchmark::State& state) {
  SimConfig c;
  c.n_particles = static_cast<int>(state.range(0));
  const WorldState start = spawn(c, 3);
  WorldState w = start;
  for (auto _ : state) {
    if (w.status != Status::Running) w = start;
    w = step(w, expert_action(w, ExpertGains{}, c.dt), c);
    benchmark::DoNotOptimize(w.tick);
  }
}
BENCHMARK(BM_Step)->Arg(40)->Arg(80)->Arg(160);

void BM_RenderVisual(benchmark::State& state) {
  const WorldState w = spawn(SimConfig{}, 3);
  const int res = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(render_visual(w, res).pixels.data());
}
BENCHMARK(BM_RenderVisual)->Arg(64)->Arg(128);

void BM_RenderBand(benchmark::State& state) {
  const FrameSpec spec;
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(render_band(spec, BandSpec{}, 7, ++seed).image.pixels.data());
}
BENCHMARK(BM_RenderBand);

void BM_ExtractContact(benchmark::State& state) {
  const FrameSpec spec;
  const TactileFrame f = render_band(spec, BandSpec{{14.3, 17.8}, {0.8, 0.6}}, 7, 9);
  const ExtractionParams p;
  for (auto _ : state) benchmark::DoNotOptimize(extract_contact(f, p));
}
BENCHMARK(BM_ExtractContact);

void BM_TotalLoss(benchmark::State& state) {
  static const auto eps = generate_demos(2, SimConfig{}, DemoOptions{}, 5);
  const PolicyConfig c;
  const auto stats = compute_norm_stats(eps, c.chunk);
  const Params params = init_params(c, 1);
  std::vector<Sample> batch;
  for (int i = 0; i < 8; ++i) batch.push_back(make_sample(eps[static_cast<std::size_t>(i % 2)], 9 * i, stats, c));
  const bool with_grad = state.range(0) != 0;
  Eigen::VectorXd grad;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    const auto l = total_loss(params, batch, {}, ++seed, with_grad ? &grad : nullptr);
    benchmark::DoNotOptimize(l.total);
  }
}
BENCHMARK(BM_TotalLoss)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
