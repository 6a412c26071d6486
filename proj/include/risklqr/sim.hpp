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

// Monte Carlo rollouts of the closed loop x_{t+1} = A x_t + B u_t + w_{t+1}
// under an affine policy.
//
// The noise w_{t+1} of rollout r is drawn from the Philox stream
// (seed, r, t + 1), so a rollout is a pure function of (seed, r) and the
// parallel estimator matches the serial one bit for bit.

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "risklqr/model.hpp"
#include "risklqr/moments.hpp"
#include "risklqr/noise.hpp"
#include "risklqr/riccati.hpp"

namespace risklqr {

struct Trajectory {
  Matrix states;           // (N+1) x n
  Matrix inputs;           // N x p
  Vector stage_penalties;  // x_t' Q x_t, t = 0..N
  Vector pred_errors;      // Delta_t, t = 1..N (index t - 1)
};

/// One time step as seen by a streaming sink. `input` is null at t = N and
/// `delta` is empty at t = 0.
struct StepRecord {
  int t = 0;
  const Vector* state = nullptr;
  const Vector* input = nullptr;
  double stage_penalty = 0.0;
  std::optional<double> delta;
};

struct RolloutSummary {
  double cost = 0.0;     // realized quadratic cost
  double risk_raw = 0.0; // sum_{t=1..N} Delta_t^2
};

struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
};

struct EstimateReport {
  Estimate j_hat;
  Estimate jr_raw_hat;
  std::int64_t n_rollouts = 0;
  std::uint64_t seed = 0;
};

struct CdfPoint {
  double value = 0.0;
  double fraction = 0.0;
};

class Simulator {
 public:
  Simulator(AffinePolicy policy, SystemModel model, const NoiseSpec& spec,
            CostSpec cost);

  int horizon() const { return policy_.horizon(); }

  /// Streams every step of rollout `index` to `sink` without storing it.
  void run(std::uint64_t seed, std::uint64_t index,
           const std::function<void(const StepRecord&)>& sink) const;

  Trajectory rollout(std::uint64_t seed, std::uint64_t index) const;
  RolloutSummary summarize(std::uint64_t seed, std::uint64_t index) const;

 private:
  template <class Sink>
  void simulate(std::uint64_t seed, std::uint64_t index, Sink&& sink) const;

  AffinePolicy policy_;
  SystemModel model_;
  CostSpec cost_;
  NoiseSampler sampler_;
  Vector mean_;
  double trace_wqc_ = 0.0;
};

Trajectory rollout(const AffinePolicy& policy, const SystemModel& model,
                   const NoiseSpec& spec, const CostSpec& cost,
                   std::uint64_t seed, std::uint64_t rollout_index);

/// Per-rollout summaries for indices 0..n-1, computed with OpenMP.
/// threads <= 0 selects default_threads().
std::vector<RolloutSummary> summarize_rollouts(const Simulator& sim,
                                               std::uint64_t seed,
                                               std::int64_t n_rollouts,
                                               int threads = 0);

/// Single-threaded reference for summarize_rollouts().
std::vector<RolloutSummary> summarize_rollouts_serial(const Simulator& sim,
                                                      std::uint64_t seed,
                                                      std::int64_t n_rollouts);

/// Mean and standard error (sample sd / sqrt(n)), reduced in index order.
EstimateReport reduce_summaries(std::span<const RolloutSummary> summaries,
                                std::uint64_t seed);

/// Monte Carlo estimates of J and of sum_t E[Delta_t^2]; n_rollouts >= 100.
EstimateReport estimate(const AffinePolicy& policy, const SystemModel& model,
                        const NoiseSpec& spec, const CostSpec& cost,
                        std::uint64_t seed, std::int64_t n_rollouts,
                        int threads = 0);

EstimateReport estimate_serial(const AffinePolicy& policy,
                               const SystemModel& model, const NoiseSpec& spec,
                               const CostSpec& cost, std::uint64_t seed,
                               std::int64_t n_rollouts);

/// Right-continuous step CDF with ties merged: (v_k, #{x <= v_k} / m).
std::vector<CdfPoint> empirical_cdf(std::span<const double> values);

}  // namespace risklqr
