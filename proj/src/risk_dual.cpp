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

#include "risklqr/risk_dual.hpp"

#include <cmath>
#include <iterator>
#include <map>
#include <sstream>

#include "risklqr/errors.hpp"

namespace risklqr {

namespace {

void check_inputs(const AffinePolicy& policy, const SystemModel& model,
                  const NoiseStats& stats) {
  model.check();
  policy.check(model.states(), model.inputs());
  if (model.horizon && *model.horizon != policy.horizon())
    throw DimensionError("policy horizon " +
                         std::to_string(policy.horizon()) +
                         " does not match model horizon " +
                         std::to_string(*model.horizon));
  const auto n = model.states();
  if (stats.mean.size() != n || stats.cov.rows() != n || stats.m3.size() != n)
    throw DimensionError("noise statistics do not match the plant");
}

void check_qc(const Matrix& Qc, int n) {
  if (Qc.rows() != n || Qc.cols() != n)
    throw DimensionError("Qc does not match the plant");
}

// Tracks every evaluated (mu, J_R) and enforces that J_R is nonincreasing
// in mu up to a relative slack.
class MonotoneTrace {
 public:
  explicit MonotoneTrace(double tol) : tol_(tol) {}

  void add(double mu, double jr) {
    const auto it = points_.emplace(mu, jr).first;
    if (it != points_.begin()) check(*std::prev(it), *it);
    if (const auto next = std::next(it); next != points_.end())
      check(*it, *next);
  }

  std::vector<std::pair<double, double>> in_order() const {
    return {points_.begin(), points_.end()};
  }

 private:
  void check(const std::pair<const double, double>& lo,
             const std::pair<const double, double>& hi) const {
    const double slack =
        tol_ * (1.0 + std::max(std::abs(lo.second), std::abs(hi.second)));
    if (hi.second > lo.second + slack) {
      std::ostringstream os;
      os.precision(17);
      os << "risk functional increased with mu: J_R(" << lo.first
         << ") = " << lo.second << " < J_R(" << hi.first
         << ") = " << hi.second;
      throw NumericalError(os.str());
    }
  }

  double tol_;
  std::map<double, double> points_;
};

}  // namespace

std::string to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::optimal_interior:
      return "optimal_interior";
    case SolveStatus::optimal_active:
      return "optimal_active";
    case SolveStatus::infeasible:
      return "infeasible";
  }
  return "unknown";
}

double epsilon_bar(double epsilon, int N, const NoiseStats& stats,
                   const Matrix& Qc) {
  if (!std::isfinite(epsilon) || epsilon < 0.0)
    throw InvalidInput("epsilon must be finite and >= 0");
  if (N < 1) throw InvalidInput("horizon must be >= 1");
  check_qc(Qc, stats.dimension());
  const Matrix WQ = stats.cov * Qc;
  const double n = static_cast<double>(N);
  return epsilon - n * stats.m4 + 4.0 * n * (WQ * WQ).trace();
}

RiskEvaluation risk_value(const AffinePolicy& policy, const SystemModel& model,
                          const NoiseStats& stats, const Matrix& Qc) {
  check_inputs(policy, model, stats);
  check_qc(Qc, model.states());
  const Matrix& A = model.A;
  const Matrix& B = model.B;
  const Matrix& W = stats.cov;
  const Matrix source_P = 4.0 * Qc * W * Qc;
  const Vector source_z = 4.0 * Qc * stats.m3;

  Matrix P = source_P;
  Vector z = source_z;
  double r = 0.0;
  for (int t = policy.horizon(); t >= 1; --t) {
    const auto s = static_cast<std::size_t>(t - 1);
    const Matrix closed = A + B * policy.gains[s];
    const Vector b =
        B * (policy.offsets_l[s] + policy.offsets_h[s]) + stats.mean;
    const Vector Pb = P * b;
    r += (P * W).trace() + z.dot(b) + b.dot(Pb);
    z = closed.transpose() * (z + 2.0 * Pb) + source_z;
    P = symmetrized(closed.transpose() * P * closed + source_P);
  }

  RiskEvaluation out;
  const Vector& x0 = model.x0;
  out.jr = x0.dot(P * x0) + z.dot(x0) + r -
           (x0.dot(source_P * x0) + source_z.dot(x0));
  out.P0 = std::move(P);
  out.z0 = std::move(z);
  out.r0 = r;
  out.method = RiskMethod::recursion;
  return out;
}

MomentTrajectory moment_propagation(const AffinePolicy& policy,
                                    const SystemModel& model,
                                    const NoiseStats& stats) {
  check_inputs(policy, model, stats);
  const auto N = static_cast<std::size_t>(policy.horizon());
  const auto n = model.states();
  MomentTrajectory out;
  out.means.reserve(N + 1);
  out.covs.reserve(N + 1);
  out.means.push_back(model.x0);
  out.covs.push_back(Matrix::Zero(n, n));
  for (std::size_t t = 0; t < N; ++t) {
    const Matrix closed = model.A + model.B * policy.gains[t];
    out.means.push_back(
        closed * out.means[t] +
        model.B * (policy.offsets_l[t] + policy.offsets_h[t]) + stats.mean);
    out.covs.push_back(
        symmetrized(closed * out.covs[t] * closed.transpose() + stats.cov));
  }
  return out;
}

RiskEvaluation risk_value_by_moments(const AffinePolicy& policy,
                                     const SystemModel& model,
                                     const NoiseStats& stats,
                                     const Matrix& Qc) {
  check_qc(Qc, model.states());
  const MomentTrajectory mt = moment_propagation(policy, model, stats);
  const Matrix QWQ = Qc * stats.cov * Qc;
  const Vector QM3 = Qc * stats.m3;
  double jr = 0.0;
  for (std::size_t t = 1; t < mt.means.size(); ++t) {
    const Vector& m = mt.means[t];
    jr += 4.0 * ((QWQ * mt.covs[t]).trace() + m.dot(QWQ * m)) +
          4.0 * m.dot(QM3);
  }
  RiskEvaluation out;
  out.jr = jr;
  out.method = RiskMethod::moment_propagation;
  return out;
}

double lqr_cost(const AffinePolicy& policy, const SystemModel& model,
                const NoiseStats& stats, const CostSpec& cost) {
  cost.check(model.states(), model.inputs());
  const MomentTrajectory mt = moment_propagation(policy, model, stats);
  const Matrix& Q = cost.Q;
  const Matrix& R = cost.R;
  double j = 0.0;
  for (std::size_t t = 0; t < mt.means.size(); ++t)
    j += (Q * mt.covs[t]).trace() + mt.means[t].dot(Q * mt.means[t]);
  for (std::size_t t = 0; t + 1 < mt.means.size(); ++t) {
    const Matrix& K = policy.gains[t];
    const Vector u =
        K * mt.means[t] + policy.offsets_l[t] + policy.offsets_h[t];
    j += (K * mt.covs[t] * K.transpose() * R).trace() + u.dot(R * u);
  }
  return j;
}

double lagrangian_eval(const AffinePolicy& policy, const SystemModel& model,
                       const NoiseStats& stats, const CostSpec& cost,
                       double mu, double eps_bar) {
  const double j = lqr_cost(policy, model, stats, cost);
  if (mu == 0.0) return j;
  const double jr = risk_value(policy, model, stats, cost.Qc).jr;
  return j + mu * jr - mu * eps_bar;
}

Solution solve_risk_constrained(const SystemModel& model, const CostSpec& cost,
                                const NoiseStats& stats,
                                const BisectionOptions& options) {
  const double eps_bar =
      epsilon_bar(cost.epsilon, model.require_horizon(), stats, cost.Qc);
  return solve_for_epsilon_bar(model, cost, stats, eps_bar, options);
}

Solution solve_for_epsilon_bar(const SystemModel& model, const CostSpec& cost,
                               const NoiseStats& stats, double eps_bar,
                               const BisectionOptions& options) {
  if (!std::isfinite(eps_bar)) throw InvalidInput("eps_bar must be finite");
  if (!(options.mu_max > 0.0) || !(options.tol_rel > 0.0))
    throw InvalidInput("mu_max and tol_rel must be positive");

  MonotoneTrace trace(options.monotonicity_tol);
  struct Point {
    double mu;
    AffinePolicy policy;
    double jr;
  };
  auto evaluate = [&](double mu) {
    Point p{mu, backward_pass(model, cost, stats, mu), 0.0};
    p.jr = risk_value(p.policy, model, stats, cost.Qc).jr;
    trace.add(mu, p.jr);
    return p;
  };
  auto finish = [&](Point p, SolveStatus status) {
    Solution s;
    s.mu_star = p.mu;
    s.jr = p.jr;
    s.policy = std::move(p.policy);
    s.j = lqr_cost(s.policy, model, stats, cost);
    s.eps_bar = eps_bar;
    s.status = status;
    s.trace = trace.in_order();
    if (status != SolveStatus::infeasible)
      s.kkt = kkt_certificate(s, model, cost, stats, options.kkt);
    return s;
  };

  Point zero = evaluate(0.0);
  if (zero.jr <= eps_bar)
    return finish(std::move(zero), SolveStatus::optimal_interior);

  double lo = 0.0;
  Point hi = evaluate(std::min(1.0, options.mu_max));
  for (int doublings = 0; hi.jr > eps_bar; ++doublings) {
    if (hi.mu >= options.mu_max || doublings >= options.max_doublings)
      return finish(std::move(hi), SolveStatus::infeasible);
    lo = hi.mu;
    hi = evaluate(std::min(2.0 * hi.mu, options.mu_max));
  }

  while (hi.mu - lo > options.tol_rel * hi.mu) {
    const double mid = 0.5 * (lo + hi.mu);
    if (mid <= lo || mid >= hi.mu) break;
    Point p = evaluate(mid);
    if (p.jr <= eps_bar)
      hi = std::move(p);
    else
      lo = mid;
  }
  return finish(std::move(hi), SolveStatus::optimal_active);
}

KktReport kkt_certificate(const Solution& solution, const SystemModel& model,
                          const CostSpec& cost, const NoiseStats& stats,
                          const KktTolerances& tolerances) {
  const double mu = solution.mu_star;
  const double eps_bar = solution.eps_bar;
  const double jr = risk_value(solution.policy, model, stats, cost.Qc).jr;
  const double dual = dual_value(model, cost, stats, mu, eps_bar);
  const double lagrangian =
      lagrangian_eval(solution.policy, model, stats, cost, mu, eps_bar);

  KktReport r;
  r.stationarity_gap = lagrangian - dual;
  r.primal_feasibility = std::max(0.0, jr - eps_bar);
  r.complementary_slackness = std::abs(mu * (jr - eps_bar));
  const double budget_scale = 1.0 + std::abs(eps_bar);
  r.passed =
      std::abs(r.stationarity_gap) <=
          tolerances.stationarity * (1.0 + std::abs(dual)) &&
      r.primal_feasibility <= tolerances.feasibility * budget_scale &&
      r.complementary_slackness <= tolerances.slackness * budget_scale;
  return r;
}

}  // namespace risklqr
