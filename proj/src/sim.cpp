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

#include "risklqr/sim.hpp"

#include <algorithm>
#include <cmath>

#include "risklqr/errors.hpp"

namespace risklqr {

namespace {

constexpr std::int64_t kMinRollouts = 100;

void check_count(std::int64_t n) {
  if (n < kMinRollouts)
    throw InvalidInput("estimate needs at least 100 rollouts");
}

}  // namespace

Simulator::Simulator(AffinePolicy policy, SystemModel model,
                     const NoiseSpec& spec, CostSpec cost)
    : policy_(std::move(policy)),
      model_(std::move(model)),
      cost_(std::move(cost)),
      sampler_(spec) {
  model_.check();
  cost_.check(model_.states(), model_.inputs());
  policy_.check(model_.states(), model_.inputs());
  if (sampler_.dimension() != model_.states())
    throw DimensionError("noise dimension " +
                         std::to_string(sampler_.dimension()) +
                         " does not match " +
                         std::to_string(model_.states()) + " states");
  if (model_.horizon && *model_.horizon != policy_.horizon())
    throw DimensionError("policy horizon does not match model horizon");
  const NoiseStats stats = noise_stats(spec, cost_.Qc);
  mean_ = stats.mean;
  trace_wqc_ = (stats.cov * cost_.Qc).trace();
}

template <class Sink>
void Simulator::simulate(std::uint64_t seed, std::uint64_t index,
                         Sink&& sink) const {
  const Matrix& A = model_.A;
  const Matrix& B = model_.B;
  const Matrix& Q = cost_.Q;
  const Matrix& Qc = cost_.Qc;
  const int N = policy_.horizon();

  Vector x = model_.x0;
  Vector u(model_.inputs());
  Vector next(model_.states());
  Vector predicted(model_.states());
  Vector w(model_.states());
  StepRecord rec;
  for (int t = 0; t <= N; ++t) {
    rec.t = t;
    rec.state = &x;
    rec.stage_penalty = x.dot(Q * x);
    if (t > 0) {
      rec.delta = x.dot(Qc * x) - (predicted.dot(Qc * predicted) + trace_wqc_);
    }
    if (t == N) {
      rec.input = nullptr;
      sink(rec);
      break;
    }
    u = policy_.control(t, x);
    rec.input = &u;
    sink(rec);

    next = A * x + B * u;
    predicted = next + mean_;
    CounterRng rng(seed, index, static_cast<std::uint32_t>(t + 1));
    sampler_.draw(rng, w);
    x = next + w;
  }
}

void Simulator::run(std::uint64_t seed, std::uint64_t index,
                    const std::function<void(const StepRecord&)>& sink) const {
  simulate(seed, index, sink);
}

Trajectory Simulator::rollout(std::uint64_t seed, std::uint64_t index) const {
  const int N = horizon();
  Trajectory tr;
  tr.states.resize(N + 1, model_.states());
  tr.inputs.resize(N, model_.inputs());
  tr.stage_penalties.resize(N + 1);
  tr.pred_errors.resize(N);
  simulate(seed, index, [&](const StepRecord& r) {
    tr.states.row(r.t) = r.state->transpose();
    if (r.input) tr.inputs.row(r.t) = r.input->transpose();
    tr.stage_penalties(r.t) = r.stage_penalty;
    if (r.delta) tr.pred_errors(r.t - 1) = *r.delta;
  });
  return tr;
}

RolloutSummary Simulator::summarize(std::uint64_t seed,
                                    std::uint64_t index) const {
  RolloutSummary s;
  const Matrix& R = cost_.R;
  simulate(seed, index, [&](const StepRecord& r) {
    s.cost += r.stage_penalty;
    if (r.input) s.cost += r.input->dot(R * *r.input);
    if (r.delta) s.risk_raw += *r.delta * *r.delta;
  });
  return s;
}

Trajectory rollout(const AffinePolicy& policy, const SystemModel& model,
                   const NoiseSpec& spec, const CostSpec& cost,
                   std::uint64_t seed, std::uint64_t rollout_index) {
  return Simulator(policy, model, spec, cost).rollout(seed, rollout_index);
}

std::vector<RolloutSummary> summarize_rollouts(const Simulator& sim,
                                               std::uint64_t seed,
                                               std::int64_t n_rollouts,
                                               int threads) {
  if (n_rollouts < 1) throw InvalidInput("need at least one rollout");
  std::vector<RolloutSummary> out(static_cast<std::size_t>(n_rollouts));
  const int nthreads = threads > 0 ? threads : default_threads();
#pragma omp parallel for num_threads(nthreads) schedule(static)
  for (std::int64_t r = 0; r < n_rollouts; ++r)
    out[static_cast<std::size_t>(r)] =
        sim.summarize(seed, static_cast<std::uint64_t>(r));
  return out;
}

std::vector<RolloutSummary> summarize_rollouts_serial(
    const Simulator& sim, std::uint64_t seed, std::int64_t n_rollouts) {
  if (n_rollouts < 1) throw InvalidInput("need at least one rollout");
  std::vector<RolloutSummary> out(static_cast<std::size_t>(n_rollouts));
  for (std::int64_t r = 0; r < n_rollouts; ++r)
    out[static_cast<std::size_t>(r)] =
        sim.summarize(seed, static_cast<std::uint64_t>(r));
  return out;
}

EstimateReport reduce_summaries(std::span<const RolloutSummary> summaries,
                                std::uint64_t seed) {
  const auto n = static_cast<double>(summaries.size());
  if (summaries.size() < 2)
    throw InvalidInput("need at least two rollouts for a standard error");
  auto moments = [&](auto field) {
    double sum = 0.0;
    for (const auto& s : summaries) sum += field(s);
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto& s : summaries) {
      const double d = field(s) - mean;
      ss += d * d;
    }
    return Estimate{mean, std::sqrt(ss / (n - 1.0)) / std::sqrt(n)};
  };
  EstimateReport rep;
  rep.j_hat = moments([](const RolloutSummary& s) { return s.cost; });
  rep.jr_raw_hat = moments([](const RolloutSummary& s) { return s.risk_raw; });
  rep.n_rollouts = static_cast<std::int64_t>(summaries.size());
  rep.seed = seed;
  return rep;
}

EstimateReport estimate(const AffinePolicy& policy, const SystemModel& model,
                        const NoiseSpec& spec, const CostSpec& cost,
                        std::uint64_t seed, std::int64_t n_rollouts,
                        int threads) {
  check_count(n_rollouts);
  const Simulator sim(policy, model, spec, cost);
  const auto s = summarize_rollouts(sim, seed, n_rollouts, threads);
  return reduce_summaries(s, seed);
}

EstimateReport estimate_serial(const AffinePolicy& policy,
                               const SystemModel& model, const NoiseSpec& spec,
                               const CostSpec& cost, std::uint64_t seed,
                               std::int64_t n_rollouts) {
  check_count(n_rollouts);
  const Simulator sim(policy, model, spec, cost);
  const auto s = summarize_rollouts_serial(sim, seed, n_rollouts);
  return reduce_summaries(s, seed);
}

std::vector<CdfPoint> empirical_cdf(std::span<const double> values) {
  if (values.empty()) throw InvalidInput("empirical_cdf of an empty sample");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const auto m = static_cast<double>(sorted.size());
  std::vector<CdfPoint> out;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    if (k + 1 < sorted.size() && sorted[k + 1] == sorted[k]) continue;
    out.push_back({sorted[k], static_cast<double>(k + 1) / m});
  }
  return out;
}

}  // namespace risklqr
