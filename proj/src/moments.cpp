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

#include "risklqr/moments.hpp"

#include <cstdlib>
#include <string>
#include <variant>

#include <omp.h>

#include "risklqr/errors.hpp"

namespace risklqr {

namespace {

constexpr double kM4ClampTol = 1e-12;

// Discrete law: rows of `points` with probabilities `weights`.
struct AtomForm {
  Vector weights;
  Matrix points;
};

struct MixtureForm {
  std::vector<double> weights;
  std::vector<noise::Gaussian> components;
};

using ExactForm = std::variant<AtomForm, MixtureForm>;

ExactForm reduce(const NoiseSpec& spec) {
  if (const auto* d = std::get_if<noise::Degenerate>(&spec.kind)) {
    return AtomForm{Vector::Ones(1), d->value.transpose()};
  }
  if (const auto* g = std::get_if<noise::Gaussian>(&spec.kind)) {
    return MixtureForm{{1.0}, {*g}};
  }
  if (const auto* m = std::get_if<noise::GaussianMixture>(&spec.kind)) {
    return MixtureForm{m->weights, m->components};
  }
  if (const auto* f = std::get_if<noise::FiniteDiscrete>(&spec.kind)) {
    AtomForm a{Vector(static_cast<Eigen::Index>(f->probs.size())),
               Matrix(static_cast<Eigen::Index>(f->atoms.size()),
                      f->atoms.front().size())};
    for (std::size_t i = 0; i < f->atoms.size(); ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      a.weights(r) = f->probs[i];
      a.points.row(r) = f->atoms[i].transpose();
    }
    return a;
  }
  if (const auto* e = std::get_if<noise::Empirical>(&spec.kind)) {
    const auto m = e->samples.rows();
    return AtomForm{Vector::Constant(m, 1.0 / static_cast<double>(m)),
                    e->samples};
  }
  const auto& l = std::get<noise::LinearMap>(spec.kind);
  ExactForm inner = reduce(*l.inner);
  if (auto* a = std::get_if<AtomForm>(&inner)) {
    a->points = a->points * l.G.transpose();
    return inner;
  }
  auto& mix = std::get<MixtureForm>(inner);
  for (auto& c : mix.components) {
    c.mean = l.G * c.mean;
    c.cov = symmetrized(l.G * c.cov * l.G.transpose());
  }
  return inner;
}

double clamp_m4(double m4, double scale) {
  if (m4 < 0.0) {
    if (m4 < -kM4ClampTol * (1.0 + scale))
      throw NumericalError("fourth-moment statistic is negative: " +
                           std::to_string(m4));
    return 0.0;
  }
  return m4;
}

NoiseStats stats_from_atoms(const AtomForm& a, const Matrix& Qc) {
  NoiseStats s;
  s.qc_used = Qc;
  s.mean = a.points.transpose() * a.weights;
  const Matrix centered = a.points.rowwise() - s.mean.transpose();
  s.cov = symmetrized(centered.transpose() * a.weights.asDiagonal() *
                      centered);
  const double trace = (s.cov * Qc).trace();
  // q_i = delta_i' Qc delta_i
  const Vector q = (centered * Qc).cwiseProduct(centered).rowwise().sum();
  s.m3 = centered.transpose() * a.weights.cwiseProduct(q);
  const Vector dev = q.array() - trace;
  s.m4 = clamp_m4(a.weights.dot(dev.cwiseProduct(dev)), trace * trace);
  return s;
}

NoiseStats stats_from_mixture(const MixtureForm& m, const Matrix& Qc) {
  NoiseStats s;
  s.qc_used = Qc;
  if (m.components.size() == 1) {
    const auto& g = m.components.front();
    s.mean = g.mean;
    s.cov = symmetrized(g.cov);
    s.m3 = Vector::Zero(g.mean.size());
    const Matrix QS = Qc * s.cov;
    s.m4 = 2.0 * (QS * QS).trace();
    return s;
  }

  const auto n = m.components.front().mean.size();
  s.mean = Vector::Zero(n);
  for (std::size_t i = 0; i < m.components.size(); ++i)
    s.mean += m.weights[i] * m.components[i].mean;

  s.cov = Matrix::Zero(n, n);
  for (std::size_t i = 0; i < m.components.size(); ++i) {
    const Vector d = m.components[i].mean - s.mean;
    s.cov += m.weights[i] * (m.components[i].cov + d * d.transpose());
  }
  s.cov = symmetrized(s.cov);

  s.m3 = Vector::Zero(n);
  double second = 0.0;  // E[(delta' Qc delta)^2]
  for (std::size_t i = 0; i < m.components.size(); ++i) {
    const auto& c = m.components[i];
    const Vector d = c.mean - s.mean;
    const Matrix QS = Qc * c.cov;
    const double tr = QS.trace();
    const double quad = d.dot(Qc * d);
    s.m3 += m.weights[i] * (d * (quad + tr) + 2.0 * c.cov * (Qc * d));
    second += m.weights[i] * (2.0 * (QS * QS).trace() +
                              4.0 * d.dot(Qc * c.cov * Qc * d) +
                              (tr + quad) * (tr + quad));
  }
  const double trace = (s.cov * Qc).trace();
  s.m4 = clamp_m4(second - trace * trace, trace * trace);
  return s;
}

void check_qc(const Matrix& Qc, int dim) {
  if (Qc.rows() != dim || Qc.cols() != dim)
    throw DimensionError("Qc must be " + std::to_string(dim) + "x" +
                         std::to_string(dim) + " to match the noise");
  if (!Qc.allFinite()) throw InvalidInput("Qc has non-finite entries");
}

}  // namespace

NoiseStats noise_stats(const NoiseSpec& spec, const Matrix& Qc) {
  spec.check();
  check_qc(Qc, spec.dimension());
  const ExactForm form = reduce(spec);
  if (const auto* a = std::get_if<AtomForm>(&form))
    return stats_from_atoms(*a, Qc);
  return stats_from_mixture(std::get<MixtureForm>(form), Qc);
}

NoiseStats empirical_stats(const Matrix& samples, const Matrix& Qc) {
  const auto m = samples.rows();
  if (m < 2) throw InvalidInput("empirical_stats needs at least 2 samples");
  check_qc(Qc, static_cast<int>(samples.cols()));
  return stats_from_atoms(
      AtomForm{Vector::Constant(m, 1.0 / static_cast<double>(m)), samples},
      Qc);
}

int default_threads() {
  if (const char* env = std::getenv("RISKLQR_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
  }
  return omp_get_max_threads();
}

Matrix sample(const NoiseSpec& spec, std::uint64_t seed, std::int64_t count,
              int threads) {
  if (count < 1) throw InvalidInput("sample count must be >= 1");
  const NoiseSampler sampler(spec);
  // Row-major so each row is one contiguous draw.
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> out(
      count, sampler.dimension());
  const int nthreads = threads > 0 ? threads : default_threads();
#pragma omp parallel for num_threads(nthreads) schedule(static)
  for (std::int64_t i = 0; i < count; ++i) {
    CounterRng rng(seed, static_cast<std::uint64_t>(i), kSampleLane);
    out.row(i) = sampler.draw(rng).transpose();
  }
  return out;
}

Matrix sample_serial(const NoiseSpec& spec, std::uint64_t seed,
                     std::int64_t count) {
  if (count < 1) throw InvalidInput("sample count must be >= 1");
  const NoiseSampler sampler(spec);
  Matrix out(count, sampler.dimension());
  for (std::int64_t i = 0; i < count; ++i) {
    CounterRng rng(seed, static_cast<std::uint64_t>(i), kSampleLane);
    out.row(i) = sampler.draw(rng).transpose();
  }
  return out;
}

}  // namespace risklqr
