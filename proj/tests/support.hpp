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

// Shared fixtures and reference computations for the test suites. Nothing
// here calls into the library's numerical routines, so it can serve as an
// oracle for them.

#pragma once

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "risklqr/model.hpp"
#include "risklqr/moments.hpp"
#include "risklqr/noise.hpp"
#include "risklqr/riccati.hpp"

namespace risklqr::testing {

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

inline double max_abs(const Matrix& M) {
  return M.size() == 0 ? 0.0 : M.cwiseAbs().maxCoeff();
}

class Random {
 public:
  explicit Random(std::uint64_t seed) : gen_(seed) {}

  double normal() { return norm_(gen_); }
  double uniform(double a, double b) {
    return std::uniform_real_distribution<double>(a, b)(gen_);
  }
  int integer(int a, int b) {
    return std::uniform_int_distribution<int>(a, b)(gen_);
  }

  Matrix matrix(int r, int c) {
    Matrix M(r, c);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) M(i, j) = normal();
    return M;
  }
  Vector vector(int n) { return matrix(n, 1); }

  /// G G' / n + floor I.
  Matrix spd(int n, double floor = 0.1) {
    const Matrix G = matrix(n, n);
    return G * G.transpose() / n + floor * Matrix::Identity(n, n);
  }

  /// A with spectral radius scaled to `radius`.
  Matrix dynamics(int n, double radius) {
    Matrix A = matrix(n, n);
    const double rho =
        A.eigenvalues().cwiseAbs().maxCoeff();
    return A * (radius / std::max(rho, 1e-6));
  }

 private:
  std::mt19937_64 gen_;
  std::normal_distribution<double> norm_;
};

/// Random finite-horizon problem with a stabilizable (A, B): B has full
/// row rank whenever p >= n, and otherwise A is scaled to be Schur.
struct Problem {
  SystemModel model;
  CostSpec cost;
};

inline Problem random_problem(Random& rng, int n, int p, int N) {
  Problem pr;
  const double radius = p >= n ? rng.uniform(0.5, 1.4) : rng.uniform(0.3, 0.95);
  pr.model.A = rng.dynamics(n, radius);
  pr.model.B = rng.matrix(n, p);
  pr.model.x0 = rng.vector(n);
  pr.model.horizon = N;
  pr.cost = CostSpec::make(rng.spd(n), rng.spd(p, 0.5));
  return pr;
}

/// Scalar Bernoulli shock: beta w.p. 1/beta, else 0.
inline NoiseSpec bernoulli(double beta = 4.0) {
  return NoiseSpec::discrete({Vector::Constant(1, beta), Vector::Zero(1)},
                             {1.0 / beta, 1.0 - 1.0 / beta});
}

/// Scalar Bernoulli shock applied through a fixed direction g.
inline NoiseSpec bernoulli_along(const Vector& g, double beta = 4.0) {
  return NoiseSpec::linear_map(g, bernoulli(beta));
}

/// x' = x + u + w with Q = 1, R = 1e-8.
inline Problem bernoulli_plant(int N) {
  Problem pr;
  pr.model.A = Matrix::Ones(1, 1);
  pr.model.B = Matrix::Ones(1, 1);
  pr.model.x0 = Vector::Zero(1);
  pr.model.horizon = N;
  pr.cost = CostSpec::make(Matrix::Ones(1, 1), Matrix::Constant(1, 1, 1e-8));
  return pr;
}

/// Planar double integrator with sampling time 0.5.
inline Problem double_integrator(int N) {
  const double Ts = 0.5;
  Problem pr;
  pr.model.A.setIdentity(4, 4);
  pr.model.A(0, 1) = Ts;
  pr.model.A(2, 3) = Ts;
  pr.model.B.setZero(4, 2);
  pr.model.B(0, 0) = Ts * Ts / 2;
  pr.model.B(1, 0) = Ts;
  pr.model.B(2, 1) = Ts * Ts / 2;
  pr.model.B(3, 1) = Ts;
  pr.model.x0 = Vector::Zero(4);
  pr.model.horizon = N;
  Vector q(4);
  q << 1, 0.1, 2, 0.1;
  pr.cost = CostSpec::make(q.asDiagonal(), Matrix::Identity(2, 2));
  return pr;
}

/// Centered wind force through B: the gust axis is a two-component mixture
/// with variances (30, 60), or standard deviations when `as_std`.
inline NoiseSpec wind(const Matrix& B, bool as_std = false) {
  auto var = [&](double v) { return as_std ? v * v : v; };
  noise::Gaussian calm{Eigen::Vector2d(-10.0, 0.0),
                       Eigen::Vector2d(var(30.0), var(5.0)).asDiagonal()};
  noise::Gaussian gust{Eigen::Vector2d(40.0, 0.0),
                       Eigen::Vector2d(var(60.0), var(5.0)).asDiagonal()};
  return NoiseSpec::linear_map(B, NoiseSpec::mixture({0.8, 0.2}, {calm, gust}));
}

/// Exact statistics of a weighted atom set, by direct enumeration.
inline NoiseStats enumerate_stats(const std::vector<Vector>& atoms,
                                  const std::vector<double>& probs,
                                  const Matrix& Qc) {
  const auto n = atoms.front().size();
  NoiseStats s;
  s.mean = Vector::Zero(n);
  for (std::size_t i = 0; i < atoms.size(); ++i) s.mean += probs[i] * atoms[i];
  s.cov = Matrix::Zero(n, n);
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    const Vector d = atoms[i] - s.mean;
    s.cov += probs[i] * d * d.transpose();
  }
  const double tr = (s.cov * Qc).trace();
  s.m3 = Vector::Zero(n);
  s.m4 = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    const Vector d = atoms[i] - s.mean;
    const double q = d.dot(Qc * d);
    s.m3 += probs[i] * q * d;
    s.m4 += probs[i] * (q - tr) * (q - tr);
  }
  s.qc_used = Qc;
  return s;
}

/// Closed-loop first and second moments of x_t under an affine policy.
struct Moments {
  std::vector<Vector> mean;
  std::vector<Matrix> cov;
};

inline Moments propagate(const AffinePolicy& pol, const SystemModel& m,
                         const NoiseStats& s) {
  Moments out;
  out.mean.push_back(m.x0);
  out.cov.push_back(Matrix::Zero(m.states(), m.states()));
  for (int t = 0; t < pol.horizon(); ++t) {
    const Matrix F = m.A + m.B * pol.gains[t];
    const Vector b = m.B * (pol.offsets_l[t] + pol.offsets_h[t]);
    out.mean.push_back(F * out.mean.back() + b + s.mean);
    out.cov.push_back(F * out.cov.back() * F.transpose() + s.cov);
  }
  return out;
}

/// E sum_t x'Qx + u'Ru.
inline double expected_cost(const AffinePolicy& pol, const SystemModel& m,
                            const NoiseStats& s, const CostSpec& c) {
  const Moments mo = propagate(pol, m, s);
  double j = 0.0;
  for (std::size_t t = 0; t < mo.mean.size(); ++t) {
    j += (c.Q * mo.cov[t]).trace() + mo.mean[t].dot(c.Q * mo.mean[t]);
    if (t + 1 < mo.mean.size()) {
      const Matrix& K = pol.gains[t];
      const Vector u = K * mo.mean[t] + pol.offsets_l[t] + pol.offsets_h[t];
      j += (c.R * K * mo.cov[t] * K.transpose()).trace() + u.dot(c.R * u);
    }
  }
  return j;
}

/// sum_{t>=1} E[4 x'QcWQcx + 4 x'Qc M3].
inline double expected_risk(const AffinePolicy& pol, const SystemModel& m,
                            const NoiseStats& s, const Matrix& Qc) {
  const Moments mo = propagate(pol, m, s);
  const Matrix P = 4.0 * Qc * s.cov * Qc;
  const Vector z = 4.0 * Qc * s.m3;
  double jr = 0.0;
  for (std::size_t t = 1; t < mo.mean.size(); ++t)
    jr += (P * mo.cov[t]).trace() + mo.mean[t].dot(P * mo.mean[t]) +
          z.dot(mo.mean[t]);
  return jr;
}

/// Stationary DARE solution by plain value iteration (risk-neutral).
inline Matrix dare(const Matrix& A, const Matrix& B, const Matrix& Q,
                   const Matrix& R, int iters = 20000) {
  Matrix P = Q;
  for (int k = 0; k < iters; ++k) {
    const Matrix G = (R + B.transpose() * P * B)
                         .ldlt()
                         .solve(B.transpose() * P * A);
    P = A.transpose() * P * A - A.transpose() * P * B * G + Q;
    P = 0.5 * (P + P.transpose());
  }
  return P;
}

inline Matrix dare_gain(const Matrix& A, const Matrix& B, const Matrix& P,
                        const Matrix& R) {
  return -(R + B.transpose() * P * B).ldlt().solve(B.transpose() * P * A);
}

}  // namespace risklqr::testing
