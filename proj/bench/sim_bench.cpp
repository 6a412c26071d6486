/*
 * Copyright 2026 The risklqr Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


// Serial references against the OpenMP kernels: noise sampling and Monte
// Carlo rollouts on the planar double integrator under gusty wind.

#include <cstdint>

#include <benchmark/benchmark.h>
#include <Eigen/Dense>

#include "risklqr/moments.hpp"
#include "risklqr/noise.hpp"
#include "risklqr/riccati.hpp"
#include "risklqr/sim.hpp"

namespace {

using namespace risklqr;

struct Plant {
  SystemModel model;
  CostSpec cost;
  NoiseSpec noise;
  AffinePolicy policy;
};

const Plant& plant() {
  static const Plant p = [] {
    const double Ts = 0.5;
    Plant out;
    out.model.A.setIdentity(4, 4);
    out.model.A(0, 1) = Ts;
    out.model.A(2, 3) = Ts;
    out.model.B.setZero(4, 2);
    out.model.B(0, 0) = Ts * Ts / 2;
    out.model.B(1, 0) = Ts;
    out.model.B(2, 1) = Ts * Ts / 2;
    out.model.B(3, 1) = Ts;
    out.model.x0 = Vector::Zero(4);
    out.model.horizon = 200;
    Vector q(4);
    q << 1, 0.1, 2, 0.1;
    out.cost = CostSpec::make(q.asDiagonal(), Matrix::Identity(2, 2));
    noise::Gaussian calm{Eigen::Vector2d(-10.0, 0.0),
                         Eigen::Vector2d(30.0, 5.0).asDiagonal()};
    noise::Gaussian gust{Eigen::Vector2d(40.0, 0.0),
                         Eigen::Vector2d(60.0, 5.0).asDiagonal()};
    out.noise = NoiseSpec::linear_map(
        out.model.B, NoiseSpec::mixture({0.8, 0.2}, {calm, gust}));
    const NoiseStats s = noise_stats(out.noise, out.cost.Qc);
    out.policy = steady_state(out.model, out.cost, s, 1.0)
                     .expand(out.model.require_horizon());
    return out;
  }();
  return p;
}

void BM_SampleSerial(benchmark::State& state) {
  const auto& p = plant();
  for (auto _ : state)
    benchmark::DoNotOptimize(sample_serial(p.noise, 7, state.range(0)));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_SampleParallel(benchmark::State& state) {
  const auto& p = plant();
  for (auto _ : state)
    benchmark::DoNotOptimize(sample(p.noise, 7, state.range(0)));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_EstimateSerial(benchmark::State& state) {
  const auto& p = plant();
  for (auto _ : state)
    benchmark::DoNotOptimize(estimate_serial(p.policy, p.model, p.noise,
                                             p.cost, 2020, state.range(0)));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_EstimateParallel(benchmark::State& state) {
  const auto& p = plant();
  for (auto _ : state)
    benchmark::DoNotOptimize(
        estimate(p.policy, p.model, p.noise, p.cost, 2020, state.range(0)));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

BENCHMARK(BM_SampleSerial)->Arg(1 << 16)->Arg(1 << 20)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SampleParallel)->Arg(1 << 16)->Arg(1 << 20)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EstimateSerial)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EstimateParallel)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
