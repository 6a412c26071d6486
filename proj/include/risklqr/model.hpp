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

// Plant and cost descriptors, plus numerical checks of the standing LQR
// assumptions: (A, B) stabilizable, (A, Q^{1/2}) detectable, Q, Qc PSD and
// R PD.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace risklqr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// x_{t+1} = A x_t + B u_t + w_{t+1}, deterministic x_0.
struct SystemModel {
  Matrix A;
  Matrix B;
  Vector x0;
  std::optional<int> horizon;

  int states() const { return static_cast<int>(A.rows()); }
  int inputs() const { return static_cast<int>(B.cols()); }

  /// Throws DimensionError / InvalidInput on malformed data.
  void check() const;
  /// Horizon, or InvalidInput if the model was built for steady-state use.
  int require_horizon() const;
};

struct CostSpec {
  Matrix Q;
  Matrix R;
  Matrix Qc;  // constraint weighting; set equal to Q by make()
  double epsilon = 0.0;

  static CostSpec make(Matrix Q, Matrix R, double epsilon = 0.0);
  static CostSpec make(Matrix Q, Matrix R, Matrix Qc, double epsilon);

  void check(int states, int inputs) const;
};

struct ValidationReport {
  bool stabilizable = false;
  bool detectable = false;
  bool psd_ok = false;
  std::vector<std::string> messages;

  bool ok() const { return stabilizable && detectable && psd_ok; }
};

inline constexpr double kDefaultRankTol = 1e-8;
inline constexpr double kPsdTol = 1e-10;

ValidationReport validate(const SystemModel& model, const CostSpec& cost,
                          double tol = kDefaultRankTol);

/// max |lambda_i(M)|.
double spectral_radius(const Matrix& M);

/// Symmetric PSD square root via eigendecomposition. Eigenvalues in
/// [-kPsdTol, 0) are clamped to zero; anything more negative throws
/// InvalidInput.
Matrix psd_sqrt(const Matrix& M);

/// Smallest eigenvalue of the symmetric part of M.
double min_eigenvalue(const Matrix& M);

Matrix symmetrized(const Matrix& M);

bool all_finite(const Matrix& M);

}  // namespace risklqr
