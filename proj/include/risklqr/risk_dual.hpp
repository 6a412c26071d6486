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

// Risk functional, LQR cost and Lagrangian evaluation under a fixed affine
// policy; bisection on the multiplier and the KKT certificate.
//
// The risk functional is the quadratic form
//
//   J_R(u) = E sum_{t=1..N} [ 4 x_t' Qc W Qc x_t + 4 x_t' Qc M3 ]
//
// which differs from the raw predictive-variance sum sum_t E[Delta_t^2] by
// the constant N m4 - 4 N Tr((W Qc)^2). eps_bar absorbs that constant.

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "risklqr/model.hpp"
#include "risklqr/moments.hpp"
#include "risklqr/riccati.hpp"

namespace risklqr {

enum class RiskMethod { recursion, moment_propagation };

struct RiskEvaluation {
  Matrix P0;
  Vector z0;
  double r0 = 0.0;
  double jr = 0.0;
  RiskMethod method = RiskMethod::recursion;
};

struct MomentTrajectory {
  std::vector<Vector> means;  // m_t, t = 0..N
  std::vector<Matrix> covs;   // Sigma_t
};

enum class SolveStatus { optimal_interior, optimal_active, infeasible };

std::string to_string(SolveStatus status);

struct KktTolerances {
  double stationarity = 1e-6;  // scaled by 1 + |D(mu*)|
  double feasibility = 1e-6;   // scaled by 1 + |eps_bar|
  double slackness = 1e-6;     // scaled by 1 + |eps_bar|
};

struct KktReport {
  double stationarity_gap = 0.0;
  double primal_feasibility = 0.0;
  double complementary_slackness = 0.0;
  bool passed = false;
};

struct BisectionOptions {
  double mu_max = 1e12;
  double tol_rel = 1e-9;
  int max_doublings = 60;
  double monotonicity_tol = 1e-9;  // relative slack on J_R(mu) ordering
  KktTolerances kkt;
};

struct Solution {
  double mu_star = 0.0;
  AffinePolicy policy;
  double j = 0.0;
  double jr = 0.0;
  double eps_bar = 0.0;
  SolveStatus status = SolveStatus::infeasible;
  KktReport kkt;
  std::vector<std::pair<double, double>> trace;  // evaluated (mu, J_R)
};

/// eps - N m4 + 4 N Tr((W Qc)^2). May be negative.
double epsilon_bar(double epsilon, int N, const NoiseStats& stats,
                   const Matrix& Qc);

/// Backward risk recursion for J_R under `policy`, with the deterministic
/// stage-0 terms removed so jr is the t = 1..N sum.
RiskEvaluation risk_value(const AffinePolicy& policy, const SystemModel& model,
                          const NoiseStats& stats, const Matrix& Qc);

/// J_R from the closed-loop moments; independent of risk_value's recursion.
RiskEvaluation risk_value_by_moments(const AffinePolicy& policy,
                                     const SystemModel& model,
                                     const NoiseStats& stats,
                                     const Matrix& Qc);

/// m_0 = x0, Sigma_0 = 0, m_{t+1} = (A + BK_t) m_t + B(l_t + h_t) + wbar,
/// Sigma_{t+1} = (A + BK_t) Sigma_t (A + BK_t)' + W.
MomentTrajectory moment_propagation(const AffinePolicy& policy,
                                    const SystemModel& model,
                                    const NoiseStats& stats);

/// Expected quadratic cost J(u) of the affine policy.
double lqr_cost(const AffinePolicy& policy, const SystemModel& model,
                const NoiseStats& stats, const CostSpec& cost);

/// J(u) + mu J_R(u) - mu eps_bar.
double lagrangian_eval(const AffinePolicy& policy, const SystemModel& model,
                       const NoiseStats& stats, const CostSpec& cost,
                       double mu, double eps_bar);

/// Smallest mu with J_R(u*(mu)) <= eps_bar, by doubling from mu = 1 and
/// bisecting the bracket. The budget is eps_bar(cost.epsilon, N, ...).
Solution solve_risk_constrained(const SystemModel& model, const CostSpec& cost,
                                const NoiseStats& stats,
                                const BisectionOptions& options = {});

/// As above with the shifted budget given directly.
Solution solve_for_epsilon_bar(const SystemModel& model, const CostSpec& cost,
                               const NoiseStats& stats, double eps_bar,
                               const BisectionOptions& options = {});

/// Checks stationarity, primal feasibility and complementary slackness of
/// (solution.policy, solution.mu_star). D(mu*) comes from a fresh backward
/// pass, so a tampered policy shows up as a stationarity gap.
KktReport kkt_certificate(const Solution& solution, const SystemModel& model,
                          const CostSpec& cost, const NoiseStats& stats,
                          const KktTolerances& tolerances = {});

}  // namespace risklqr
