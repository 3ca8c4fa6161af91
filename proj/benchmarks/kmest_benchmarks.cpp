// Copyright 2026 The kmest Authors.
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

#include <cmath>
#include <vector>

#include "kmest/binning.hpp"
#include "kmest/integrators.hpp"
#include "kmest/regression.hpp"
#include "kmest/rng.hpp"
#include "kmest/stochastic_integrals.hpp"

namespace {

using namespace kmest;

const SdeModel& cubic() {
  static const SdeModel m = builtin_model("cubic", default_params("cubic"));
  return m;
}

void BM_Step(benchmark::State& state) {
  const auto scheme = static_cast<Scheme>(state.range(0));
  const double dt = 5e-4;
  Rng rng(1);
  double x = 0.0;
  for (auto _ : state) {
    const auto ints = derive_multiple_integrals(sample_step_noise(dt, rng), dt);
    x = step(cubic(), x, ints, scheme);
    benchmark::DoNotOptimize(x);
  }
  state.SetLabel(std::string(to_string(scheme)));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Step)->DenseRange(0, 2);

void BM_GeneratePairs(benchmark::State& state) {
  SimulationConfig sim;
  sim.seed = 7;
  const auto count = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(generate_pairs(cubic(), sim, 0.01, FixedCount{count}));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_GeneratePairs)->Arg(10'000)->Unit(benchmark::kMillisecond);

void BM_Estimate(benchmark::State& state) {
  SimulationConfig sim;
  sim.seed = 9;
  const auto pairs = generate_pairs(cubic(), sim, 0.01, FixedCount{200'000});
  const BinGrid grid = make_grid(0.5, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(estimate(pairs, grid));
  state.SetItemsProcessed(state.iterations() * 200'000);
}
BENCHMARK(BM_Estimate)->Arg(10)->Arg(40)->Unit(benchmark::kMicrosecond);

void BM_LassoCv(benchmark::State& state) {
  Rng rng(3);
  std::vector<FitPoint> pts;
  for (int k = 0; k < 20; ++k) {
    const double x = -0.475 + 0.05 * k;
    pts.push_back({x, -x * x * x + 0.2 * rng.normal(), 1.0});
  }
  FitOptions opt;
  opt.degree = 7;
  for (auto _ : state) benchmark::DoNotOptimize(fit(pts, opt));
}
BENCHMARK(BM_LassoCv)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
