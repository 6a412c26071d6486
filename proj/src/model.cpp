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

#include "risklqr/model.hpp"

#include <cmath>
#include <complex>
#include <sstream>

#include "risklqr/errors.hpp"

namespace risklqr {

namespace {

constexpr double kSymTol = 1e-9;
constexpr double kPdTol = 1e-12;

std::string shape(const Matrix& M) {
  std::ostringstream os;
  os << M.rows() << "x" << M.cols();
  return os.str();
}

bool is_symmetric(const Matrix& M) {
  const double scale = 1.0 + M.cwiseAbs().maxCoeff();
  return (M - M.transpose()).cwiseAbs().maxCoeff() <= kSymTol * scale;
}

// Hautus test: [A - lambda I, B] has full row rank for every eigenvalue
// lambda of A with |lambda| >= 1 - tol.
bool hautus_full_rank(const Matrix& A, const Matrix& B, double tol) {
  using CMatrix = Eigen::MatrixXcd;
  const Eigen::Index n = A.rows();
  const Eigen::VectorXcd eig = A.eigenvalues();
  for (Eigen::Index i = 0; i < eig.size(); ++i) {
    const std::complex<double> lambda = eig(i);
    if (std::abs(lambda) < 1.0 - tol) continue;
    CMatrix H(n, n + B.cols());
    H.leftCols(n) = A.cast<std::complex<double>>() -
                    lambda * CMatrix::Identity(n, n);
    H.rightCols(B.cols()) = B.cast<std::complex<double>>();
    const Eigen::VectorXd sv =
        Eigen::JacobiSVD<CMatrix>(H).singularValues();
    const double smax = sv.maxCoeff();
    if (smax == 0.0 || sv(n - 1) <= tol * smax) return false;
  }
  return true;
}

}  // namespace

void SystemModel::check() const {
  if (A.rows() < 1 || A.rows() != A.cols())
    throw DimensionError("A must be square and nonempty, got " + shape(A));
  if (B.rows() != A.rows() || B.cols() < 1)
    throw DimensionError("B must have " + std::to_string(A.rows()) +
                         " rows and at least one column, got " + shape(B));
  if (x0.size() != A.rows())
    throw DimensionError("x0 has length " + std::to_string(x0.size()) +
                         ", expected " + std::to_string(A.rows()));
  if (!all_finite(A) || !all_finite(B) || !all_finite(x0))
    throw InvalidInput("model contains non-finite entries");
  if (horizon && *horizon < 1)
    throw InvalidInput("horizon must be >= 1");
}

int SystemModel::require_horizon() const {
  if (!horizon) throw InvalidInput("model has no horizon");
  return *horizon;
}

CostSpec CostSpec::make(Matrix Q, Matrix R, double epsilon) {
  Matrix Qc = Q;
  return make(std::move(Q), std::move(R), std::move(Qc), epsilon);
}

CostSpec CostSpec::make(Matrix Q, Matrix R, Matrix Qc, double epsilon) {
  CostSpec c;
  c.Q = std::move(Q);
  c.R = std::move(R);
  c.Qc = std::move(Qc);
  c.epsilon = epsilon;
  return c;
}

namespace {

void check_cost_shapes(const CostSpec& c, int states, int inputs) {
  if (c.Q.rows() != states || c.Q.cols() != states)
    throw DimensionError("Q must be " + std::to_string(states) + "x" +
                         std::to_string(states) + ", got " + shape(c.Q));
  if (c.Qc.rows() != states || c.Qc.cols() != states)
    throw DimensionError("Qc must be " + std::to_string(states) + "x" +
                         std::to_string(states) + ", got " + shape(c.Qc));
  if (c.R.rows() != inputs || c.R.cols() != inputs)
    throw DimensionError("R must be " + std::to_string(inputs) + "x" +
                         std::to_string(inputs) + ", got " + shape(c.R));
  if (!all_finite(c.Q) || !all_finite(c.R) || !all_finite(c.Qc) ||
      !std::isfinite(c.epsilon))
    throw InvalidInput("cost contains non-finite entries");
  if (c.epsilon < 0.0) throw InvalidInput("risk budget epsilon must be >= 0");
}

std::vector<std::string> definiteness_problems(const CostSpec& c) {
  std::vector<std::string> out;
  if (!is_symmetric(c.Q)) out.emplace_back("Q is not symmetric");
  if (!is_symmetric(c.Qc)) out.emplace_back("Qc is not symmetric");
  if (!is_symmetric(c.R)) out.emplace_back("R is not symmetric");
  if (!out.empty()) return out;
  if (min_eigenvalue(c.Q) < -kPsdTol) out.emplace_back("Q is not PSD");
  if (min_eigenvalue(c.Qc) < -kPsdTol) out.emplace_back("Qc is not PSD");
  if (min_eigenvalue(c.R) < kPdTol)
    out.emplace_back("R is not positive definite");
  return out;
}

}  // namespace

void CostSpec::check(int states, int inputs) const {
  check_cost_shapes(*this, states, inputs);
  const auto problems = definiteness_problems(*this);
  if (!problems.empty()) throw InvalidInput(problems.front());
}

ValidationReport validate(const SystemModel& model, const CostSpec& cost,
                          double tol) {
  model.check();
  check_cost_shapes(cost, model.states(), model.inputs());

  ValidationReport report;
  report.messages = definiteness_problems(cost);
  report.psd_ok = report.messages.empty();

  report.stabilizable = hautus_full_rank(model.A, model.B, tol);
  if (!report.stabilizable)
    report.messages.push_back("(A, B) is not stabilizable");

  if (report.psd_ok) {
    const Matrix C = psd_sqrt(symmetrized(cost.Q));
    report.detectable =
        hautus_full_rank(model.A.transpose(), C.transpose(), tol);
    if (!report.detectable)
      report.messages.push_back("(A, Q^1/2) is not detectable");
  } else {
    report.messages.push_back("detectability not checked: Q invalid");
  }
  return report;
}

double spectral_radius(const Matrix& M) {
  if (M.rows() != M.cols())
    throw DimensionError("spectral_radius needs a square matrix, got " +
                         shape(M));
  if (M.size() == 0) return 0.0;
  return M.eigenvalues().cwiseAbs().maxCoeff();
}

Matrix psd_sqrt(const Matrix& M) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(M));
  Vector d = es.eigenvalues();
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (d(i) < -kPsdTol) throw InvalidInput("matrix is not PSD");
    d(i) = d(i) < 0.0 ? 0.0 : std::sqrt(d(i));
  }
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

double min_eigenvalue(const Matrix& M) {
  if (M.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(M),
                                           Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

Matrix symmetrized(const Matrix& M) { return 0.5 * (M + M.transpose()); }

bool all_finite(const Matrix& M) { return M.allFinite(); }

}  // namespace risklqr
