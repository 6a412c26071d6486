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

// Risk-aware Riccati machinery for a fixed multiplier mu >= 0.
//
// The Lagrangian J + mu (J_R - eps_bar) is a tracking LQR problem with the
// inflated penalty Q_mu = Q + 4 mu Qc W Qc and a linear state term
// 4 mu M3' Qc x. Its cost-to-go is
//
//   L_t(x) = x' V_t x + 4 mu M3' S_t' x + 2 wbar' T_t' x + c_t
//
// and the minimizer is u_t = K_t x_t + l_t + h_t, where l_t tracks away
// from the skewed noise direction and h_t cancels the noise mean.

#pragma once

#include <vector>

#include "risklqr/model.hpp"
#include "risklqr/moments.hpp"

namespace risklqr {

struct AffinePolicy {
  std::vector<Matrix> gains;      // K_t, t = 0..N-1
  std::vector<Vector> offsets_l;  // l_t
  std::vector<Vector> offsets_h;  // h_t
  std::vector<Matrix> values_V;   // V_t, t = 0..N
  std::vector<Matrix> values_S;
  std::vector<Matrix> values_T;
  std::vector<double> constants_c;
  double mu = 0.0;
  bool steady = false;

  int horizon() const { return static_cast<int>(gains.size()); }
  Vector control(int t, const Vector& x) const {
    const auto i = static_cast<std::size_t>(t);
    return gains[i] * x + offsets_l[i] + offsets_h[i];
  }
  /// Shape checks against an (n, p) plant; throws DimensionError.
  void check(int states, int inputs) const;
};

struct SteadyStatePolicy {
  Matrix V, K, S, T;
  Vector l, h;
  double c_stage = 0.0;  // per-stage increment of the constant term
  double mu = 0.0;
  int iterations = 0;
  double residual = 0.0;
  std::vector<double> residual_trace;

  /// Stationary law repeated over `horizon` stages (steady = true).
  AffinePolicy expand(int horizon) const;
};

struct SteadyStateOptions {
  double tol = 1e-12;
  int max_iter = 100000;
};

/// Q + 4 mu Q W Q.
Matrix inflated_penalty(const Matrix& Q, const Matrix& W, double mu);
/// Q + 4 mu Qc W Qc.
Matrix inflated_penalty(const Matrix& Q, const Matrix& Qc, const Matrix& W,
                        double mu);

/// Finite-horizon backward pass from V_N = Q_mu, S_N = Qc, T_N = 0,
/// c_N = 0 over the model's horizon.
AffinePolicy backward_pass(const SystemModel& model, const CostSpec& cost,
                           const NoiseStats& stats, double mu);

/// Value iteration on the risk-aware Riccati map until the relative max-norm
/// step falls below options.tol. Throws ConvergenceError when max_iter is
/// exhausted and NumericalError if A + BK is not Schur stable.
SteadyStatePolicy steady_state(const SystemModel& model, const CostSpec& cost,
                               const NoiseStats& stats, double mu,
                               const SteadyStateOptions& options = {});

/// D(mu) = L_0(x0) + g(mu) with
/// g(mu) = -mu eps_bar - 4 mu x0' Qc W Qc x0 - 4 mu M3' Qc x0.
double dual_value(const SystemModel& model, const CostSpec& cost,
                  const NoiseStats& stats, double mu, double eps_bar);

/// Same as above for an already synthesized finite-horizon policy.
double dual_value(const AffinePolicy& policy, const SystemModel& model,
                  const CostSpec& cost, const NoiseStats& stats,
                  double eps_bar);

}  // namespace risklqr
