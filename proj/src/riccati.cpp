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

#include "risklqr/riccati.hpp"

#include <cmath>
#include <sstream>
#include <string>

#include "risklqr/errors.hpp"

namespace risklqr {

namespace {

constexpr double kLyapunovResidualTol = 1e-8;

void check_mu(double mu) {
  if (!std::isfinite(mu) || mu < 0.0)
    throw InvalidInput("multiplier mu must be finite and >= 0");
}

void check_stats(const NoiseStats& stats, int n) {
  if (stats.mean.size() != n || stats.cov.rows() != n ||
      stats.cov.cols() != n || stats.m3.size() != n)
    throw DimensionError("noise statistics have dimension " +
                         std::to_string(stats.mean.size()) +
                         ", plant has " + std::to_string(n) + " states");
}

// One stage of the backward recursion, from the cost-to-go at t to the
// policy and cost-to-go at t - 1.
struct Stage {
  Matrix K;
  Vector l, h;
  Matrix V, S, T;
  double c = 0.0;
};

class StageSolver {
 public:
  StageSolver(const SystemModel& model, const CostSpec& cost,
              const NoiseStats& stats, double mu)
      : A_(model.A),
        B_(model.B),
        Qc_(cost.Qc),
        R_(cost.R),
        Qmu_(inflated_penalty(cost.Q, cost.Qc, stats.cov, mu)),
        W_(stats.cov),
        wbar_(stats.mean),
        m3_(stats.m3),
        mu_(mu) {}

  const Matrix& q_mu() const { return Qmu_; }

  Stage step(const Matrix& V, const Matrix& S, const Matrix& T,
             double c) const {
    const Matrix BtV = B_.transpose() * V;
    const Matrix H = BtV * B_ + R_;
    const Eigen::LLT<Matrix> llt(H);
    if (llt.info() != Eigen::Success)
      throw NumericalError("B'VB + R is not positive definite");

    Stage out;
    out.K = -llt.solve(BtV * A_);
    out.V = symmetrized(A_.transpose() * V * A_ + Qmu_ +
                        A_.transpose() * BtV.transpose() * out.K);
    const Matrix closed = A_ + B_ * out.K;
    out.S = closed.transpose() * S + Qc_;
    out.T = closed.transpose() * (T + V);
    if (mu_ == 0.0)
      out.l = Vector::Zero(B_.cols());
    else
      out.l = -2.0 * mu_ * llt.solve(B_.transpose() * (S * m3_));
    out.h = -llt.solve(B_.transpose() * ((V + T) * wbar_));
    const Vector offset = out.l + out.h;
    // The mean-coupling term uses S_t, not the terminal S_N: with S_N,
    // D(mu) != L(u*(mu), mu) whenever wbar and M3 are both nonzero.
    out.c = c + (W_ * V).trace() +
            wbar_.dot((2.0 * T.transpose() + V) * wbar_) +
            4.0 * mu_ * m3_.dot(S.transpose() * wbar_) -
            offset.dot(H * offset);
    return out;
  }

  Matrix riccati_map(const Matrix& V) const {
    const Matrix BtV = B_.transpose() * V;
    const Matrix BtVA = BtV * A_;
    const Eigen::LLT<Matrix> llt(BtV * B_ + R_);
    if (llt.info() != Eigen::Success)
      throw NumericalError("B'VB + R is not positive definite");
    return symmetrized(A_.transpose() * V * A_ + Qmu_ -
                       BtVA.transpose() * llt.solve(BtVA));
  }

 private:
  const Matrix& A_;
  const Matrix& B_;
  const Matrix& Qc_;
  const Matrix& R_;
  Matrix Qmu_;
  const Matrix& W_;
  const Vector& wbar_;
  const Vector& m3_;
  double mu_;
};

Matrix solve_checked(const Eigen::PartialPivLU<Matrix>& lu, const Matrix& M,
                     const Matrix& rhs) {
  Matrix x = lu.solve(rhs);
  const double err = (M * x - rhs).cwiseAbs().maxCoeff();
  if (!x.allFinite() ||
      err > kLyapunovResidualTol * (1.0 + rhs.cwiseAbs().maxCoeff()))
    throw NumericalError("(I - (A+BK)') solve residual too large");
  return x;
}

}  // namespace

void AffinePolicy::check(int states, int inputs) const {
  const auto N = gains.size();
  if (N < 1) throw DimensionError("policy has no stages");
  if (offsets_l.size() != N || offsets_h.size() != N)
    throw DimensionError("policy offset lists do not match the horizon");
  for (std::size_t t = 0; t < N; ++t) {
    if (gains[t].rows() != inputs || gains[t].cols() != states ||
        offsets_l[t].size() != inputs || offsets_h[t].size() != inputs)
      throw DimensionError("policy stage " + std::to_string(t) +
                           " does not match the plant dimensions");
  }
}

AffinePolicy SteadyStatePolicy::expand(int horizon) const {
  if (horizon < 1) throw InvalidInput("horizon must be >= 1");
  const auto N = static_cast<std::size_t>(horizon);
  AffinePolicy p;
  p.mu = mu;
  p.steady = true;
  p.gains.assign(N, K);
  p.offsets_l.assign(N, l);
  p.offsets_h.assign(N, h);
  p.values_V.assign(N + 1, V);
  p.values_S.assign(N + 1, S);
  p.values_T.assign(N + 1, T);
  p.constants_c.resize(N + 1);
  for (std::size_t t = 0; t <= N; ++t)
    p.constants_c[t] = static_cast<double>(N - t) * c_stage;
  return p;
}

Matrix inflated_penalty(const Matrix& Q, const Matrix& W, double mu) {
  return inflated_penalty(Q, Q, W, mu);
}

Matrix inflated_penalty(const Matrix& Q, const Matrix& Qc, const Matrix& W,
                        double mu) {
  check_mu(mu);
  if (Q.rows() != Q.cols() || Qc.rows() != Q.rows() ||
      Qc.cols() != Q.cols() || W.rows() != Q.rows() || W.cols() != Q.cols())
    throw DimensionError("inflated_penalty operands differ in shape");
  return symmetrized(Q + 4.0 * mu * Qc * W * Qc);
}

AffinePolicy backward_pass(const SystemModel& model, const CostSpec& cost,
                           const NoiseStats& stats, double mu) {
  model.check();
  cost.check(model.states(), model.inputs());
  check_stats(stats, model.states());
  check_mu(mu);
  const int N = model.require_horizon();
  const auto n = model.states();
  const auto uN = static_cast<std::size_t>(N);

  const StageSolver solver(model, cost, stats, mu);
  AffinePolicy p;
  p.mu = mu;
  p.gains.resize(uN);
  p.offsets_l.resize(uN);
  p.offsets_h.resize(uN);
  p.values_V.resize(uN + 1);
  p.values_S.resize(uN + 1);
  p.values_T.resize(uN + 1);
  p.constants_c.resize(uN + 1);

  p.values_V[uN] = solver.q_mu();
  p.values_S[uN] = cost.Qc;
  p.values_T[uN] = Matrix::Zero(n, n);
  p.constants_c[uN] = 0.0;

  for (std::size_t t = uN; t >= 1; --t) {
    Stage s = solver.step(p.values_V[t], p.values_S[t], p.values_T[t],
                          p.constants_c[t]);
    p.gains[t - 1] = std::move(s.K);
    p.offsets_l[t - 1] = std::move(s.l);
    p.offsets_h[t - 1] = std::move(s.h);
    p.values_V[t - 1] = std::move(s.V);
    p.values_S[t - 1] = std::move(s.S);
    p.values_T[t - 1] = std::move(s.T);
    p.constants_c[t - 1] = s.c;
  }
  return p;
}

SteadyStatePolicy steady_state(const SystemModel& model, const CostSpec& cost,
                               const NoiseStats& stats, double mu,
                               const SteadyStateOptions& options) {
  model.check();
  cost.check(model.states(), model.inputs());
  check_stats(stats, model.states());
  check_mu(mu);
  const StageSolver solver(model, cost, stats, mu);

  SteadyStatePolicy out;
  out.mu = mu;
  Matrix V = solver.q_mu();
  bool converged = false;
  for (int k = 0; k < options.max_iter; ++k) {
    Matrix next = solver.riccati_map(V);
    if (!next.allFinite())
      throw NumericalError("Riccati iteration produced non-finite values");
    const double step = (next - V).cwiseAbs().maxCoeff();
    const double scale = 1.0 + V.cwiseAbs().maxCoeff();
    out.residual_trace.push_back(step);
    V = std::move(next);
    out.iterations = k + 1;
    if (step <= options.tol * scale) {
      converged = true;
      break;
    }
  }
  out.residual = out.residual_trace.empty() ? 0.0 : out.residual_trace.back();
  if (!converged) {
    std::ostringstream os;
    os << "Riccati iteration did not converge in " << options.max_iter
       << " iterations (last step " << out.residual << ")";
    throw ConvergenceError(os.str(), out.residual_trace);
  }

  const auto n = model.states();
  const Matrix& A = model.A;
  const Matrix& B = model.B;
  const Matrix H = B.transpose() * V * B + cost.R;
  const Eigen::LLT<Matrix> llt(H);
  if (llt.info() != Eigen::Success)
    throw NumericalError("B'VB + R is not positive definite");
  out.V = V;
  out.K = -llt.solve(B.transpose() * V * A);
  const Matrix closed = A + B * out.K;
  const double rho = spectral_radius(closed);
  if (!(rho < 1.0)) {
    std::ostringstream os;
    os << "closed loop is not stable at convergence (spectral radius " << rho
       << ")";
    throw NumericalError(os.str());
  }

  const Matrix M = Matrix::Identity(n, n) - closed.transpose();
  const Eigen::PartialPivLU<Matrix> lu(M);
  out.S = solve_checked(lu, M, cost.Qc);
  out.T = solve_checked(lu, M, closed.transpose() * V);
  if (mu == 0.0)
    out.l = Vector::Zero(model.inputs());
  else
    out.l = -2.0 * mu * llt.solve(B.transpose() * (out.S * stats.m3));
  out.h = -llt.solve(B.transpose() * ((V + out.T) * stats.mean));

  // Stationary increment of c_t: the backward step's constant term
  // evaluated at the fixed point.
  const Stage s = solver.step(out.V, out.S, out.T, 0.0);
  out.c_stage = s.c;
  return out;
}

double dual_value(const SystemModel& model, const CostSpec& cost,
                  const NoiseStats& stats, double mu, double eps_bar) {
  return dual_value(backward_pass(model, cost, stats, mu), model, cost, stats,
                    eps_bar);
}

double dual_value(const AffinePolicy& policy, const SystemModel& model,
                  const CostSpec& cost, const NoiseStats& stats,
                  double eps_bar) {
  policy.check(model.states(), model.inputs());
  if (policy.values_V.empty() || policy.constants_c.empty())
    throw InvalidInput("policy carries no value-function terms");
  const double mu = policy.mu;
  const Vector& x0 = model.x0;
  const Matrix& Qc = cost.Qc;
  const double cost_to_go =
      x0.dot(policy.values_V.front() * x0) +
      4.0 * mu * stats.m3.dot(policy.values_S.front().transpose() * x0) +
      2.0 * stats.mean.dot(policy.values_T.front().transpose() * x0) +
      policy.constants_c.front();
  const double g = -mu * eps_bar - 4.0 * mu * x0.dot(Qc * stats.cov * Qc * x0) -
                   4.0 * mu * stats.m3.dot(Qc * x0);
  return cost_to_go + g;
}

}  // namespace risklqr
