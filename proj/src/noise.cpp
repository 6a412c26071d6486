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

#include "risklqr/noise.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "risklqr/errors.hpp"

namespace risklqr {

namespace {

constexpr double kProbTol = 1e-12;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_probabilities(const std::vector<double>& p, const char* what) {
  if (p.empty()) throw InvalidInput(std::string(what) + " is empty");
  double total = 0.0;
  for (double v : p) {
    if (!std::isfinite(v) || v < 0.0)
      throw InvalidInput(std::string(what) + " has a negative entry");
    total += v;
  }
  if (std::abs(total - 1.0) > kProbTol)
    throw InvalidInput(std::string(what) + " does not sum to 1");
}

void check_gaussian(const noise::Gaussian& g) {
  const auto n = g.mean.size();
  if (n < 1) throw DimensionError("gaussian mean is empty");
  if (g.cov.rows() != n || g.cov.cols() != n)
    throw DimensionError("gaussian covariance shape does not match mean");
  if (!g.mean.allFinite() || !g.cov.allFinite())
    throw InvalidInput("gaussian has non-finite entries");
  const double scale = 1.0 + g.cov.cwiseAbs().maxCoeff();
  if ((g.cov - g.cov.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw InvalidInput("gaussian covariance is not symmetric");
  if (min_eigenvalue(g.cov) < -kPsdTol * scale)
    throw InvalidInput("gaussian covariance is not PSD");
}

std::vector<double> cumulative(const std::vector<double>& p) {
  std::vector<double> c(p.size());
  std::partial_sum(p.begin(), p.end(), c.begin());
  c.back() = 1.0;
  return c;
}

std::size_t pick(const std::vector<double>& cdf, double u) {
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  return std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()),
                               cdf.size() - 1);
}

}  // namespace

NoiseSpec NoiseSpec::degenerate(Vector value) {
  return {noise::Degenerate{std::move(value)}};
}

NoiseSpec NoiseSpec::gaussian(Vector mean, Matrix cov) {
  return {noise::Gaussian{std::move(mean), std::move(cov)}};
}

NoiseSpec NoiseSpec::mixture(std::vector<double> weights,
                             std::vector<noise::Gaussian> components) {
  return {noise::GaussianMixture{std::move(weights), std::move(components)}};
}

NoiseSpec NoiseSpec::discrete(std::vector<Vector> atoms,
                              std::vector<double> probs) {
  return {noise::FiniteDiscrete{std::move(atoms), std::move(probs)}};
}

NoiseSpec NoiseSpec::empirical(Matrix samples) {
  return {noise::Empirical{std::move(samples)}};
}

NoiseSpec NoiseSpec::linear_map(Matrix G, NoiseSpec inner) {
  return {noise::LinearMap{
      std::move(G), std::make_shared<const NoiseSpec>(std::move(inner))}};
}

int NoiseSpec::dimension() const {
  return std::visit(
      overloaded{
          [](const noise::Degenerate& d) {
            return static_cast<int>(d.value.size());
          },
          [](const noise::Gaussian& g) {
            return static_cast<int>(g.mean.size());
          },
          [](const noise::GaussianMixture& m) {
            return m.components.empty()
                       ? 0
                       : static_cast<int>(m.components.front().mean.size());
          },
          [](const noise::FiniteDiscrete& f) {
            return f.atoms.empty() ? 0
                                   : static_cast<int>(f.atoms.front().size());
          },
          [](const noise::Empirical& e) {
            return static_cast<int>(e.samples.cols());
          },
          [](const noise::LinearMap& l) {
            return static_cast<int>(l.G.rows());
          },
      },
      kind);
}

void NoiseSpec::check() const {
  std::visit(
      overloaded{
          [](const noise::Degenerate& d) {
            if (d.value.size() < 1)
              throw DimensionError("degenerate value is empty");
            if (!d.value.allFinite())
              throw InvalidInput("degenerate value is not finite");
          },
          [](const noise::Gaussian& g) { check_gaussian(g); },
          [](const noise::GaussianMixture& m) {
            check_probabilities(m.weights, "mixture weights");
            if (m.weights.size() != m.components.size())
              throw DimensionError(
                  "mixture weights and components differ in length");
            for (const auto& c : m.components) {
              check_gaussian(c);
              if (c.mean.size() != m.components.front().mean.size())
                throw DimensionError("mixture components differ in dimension");
            }
          },
          [](const noise::FiniteDiscrete& f) {
            check_probabilities(f.probs, "discrete probabilities");
            if (f.atoms.size() != f.probs.size())
              throw DimensionError("atoms and probabilities differ in length");
            for (const auto& a : f.atoms) {
              if (a.size() < 1 || a.size() != f.atoms.front().size())
                throw DimensionError("atoms differ in dimension");
              if (!a.allFinite()) throw InvalidInput("atom is not finite");
            }
          },
          [](const noise::Empirical& e) {
            if (e.samples.rows() < 2)
              throw InvalidInput("empirical noise needs at least 2 samples");
            if (e.samples.cols() < 1)
              throw DimensionError("empirical samples have no columns");
            if (!e.samples.allFinite())
              throw InvalidInput("empirical samples are not finite");
          },
          [](const noise::LinearMap& l) {
            if (!l.inner) throw InvalidInput("linear map has no inner spec");
            l.inner->check();
            if (l.G.rows() < 1 || l.G.cols() != l.inner->dimension())
              throw DimensionError("linear map G has " +
                                   std::to_string(l.G.cols()) +
                                   " columns, inner dimension is " +
                                   std::to_string(l.inner->dimension()));
            if (!l.G.allFinite())
              throw InvalidInput("linear map G is not finite");
          },
      },
      kind);
}

NoiseSampler::NoiseSampler(const NoiseSpec& spec) {
  spec.check();
  dim_ = spec.dimension();
  auto factor = [](const noise::Gaussian& g) {
    return Component{g.mean, psd_sqrt(g.cov)};
  };
  std::visit(overloaded{
                 [&](const noise::Degenerate& d) {
                   mode_ = Mode::kFixed;
                   atoms_ = {d.value};
                 },
                 [&](const noise::Gaussian& g) {
                   mode_ = Mode::kGaussian;
                   components_ = {factor(g)};
                 },
                 [&](const noise::GaussianMixture& m) {
                   mode_ = Mode::kMixture;
                   for (const auto& c : m.components)
                     components_.push_back(factor(c));
                   cumulative_ = cumulative(m.weights);
                 },
                 [&](const noise::FiniteDiscrete& f) {
                   mode_ = Mode::kDiscrete;
                   atoms_ = f.atoms;
                   cumulative_ = cumulative(f.probs);
                 },
                 [&](const noise::Empirical& e) {
                   mode_ = Mode::kEmpirical;
                   samples_ = e.samples;
                 },
                 [&](const noise::LinearMap& l) {
                   mode_ = Mode::kMap;
                   map_ = l.G;
                   inner_ = std::make_shared<const NoiseSampler>(*l.inner);
                 },
             },
             spec.kind);
}

void NoiseSampler::draw(CounterRng& rng, Eigen::Ref<Vector> out) const {
  auto gaussian = [&](const Component& c) {
    Vector z(c.mean.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
    out = c.mean + c.factor * z;
  };
  switch (mode_) {
    case Mode::kFixed:
      out = atoms_.front();
      break;
    case Mode::kGaussian:
      gaussian(components_.front());
      break;
    case Mode::kMixture:
      gaussian(components_[pick(cumulative_, rng.uniform())]);
      break;
    case Mode::kDiscrete:
      out = atoms_[pick(cumulative_, rng.uniform())];
      break;
    case Mode::kEmpirical: {
      const auto rows = static_cast<std::uint64_t>(samples_.rows());
      // Lemire's multiply-shift; the bias at these sizes is < 2^-32.
      const auto row = static_cast<Eigen::Index>(
          (std::uint64_t{rng.next_u32()} * rows) >> 32);
      out = samples_.row(row).transpose();
      break;
    }
    case Mode::kMap:
      out = map_ * inner_->draw(rng);
      break;
  }
}

Vector NoiseSampler::draw(CounterRng& rng) const {
  Vector out(dim_);
  draw(rng, out);
  return out;
}

}  // namespace risklqr
