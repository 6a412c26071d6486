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

#pragma once

#include <memory>
#include <variant>
#include <vector>

#include "risklqr/model.hpp"
#include "risklqr/rng.hpp"

namespace risklqr {

struct NoiseSpec;

namespace noise {

struct Degenerate {
  Vector value;
};

struct Gaussian {
  Vector mean;
  Matrix cov;
};

struct GaussianMixture {
  std::vector<double> weights;
  std::vector<Gaussian> components;
};

struct FiniteDiscrete {
  std::vector<Vector> atoms;
  std::vector<double> probs;
};

/// Rows are samples; draws resample rows uniformly.
struct Empirical {
  Matrix samples;
};

/// w = G d with d distributed according to `inner`.
struct LinearMap {
  Matrix G;
  std::shared_ptr<const NoiseSpec> inner;
};

}  // namespace noise

/// Distribution of the i.i.d. process noise w_t.
struct NoiseSpec {
  using Kind = std::variant<noise::Degenerate, noise::Gaussian,
                            noise::GaussianMixture, noise::FiniteDiscrete,
                            noise::Empirical, noise::LinearMap>;
  Kind kind;

  static NoiseSpec degenerate(Vector value);
  static NoiseSpec gaussian(Vector mean, Matrix cov);
  static NoiseSpec mixture(std::vector<double> weights,
                           std::vector<noise::Gaussian> components);
  static NoiseSpec discrete(std::vector<Vector> atoms,
                            std::vector<double> probs);
  static NoiseSpec empirical(Matrix samples);
  static NoiseSpec linear_map(Matrix G, NoiseSpec inner);

  /// Dimension of w.
  int dimension() const;
  /// Throws DimensionError / InvalidInput on a malformed spec.
  void check() const;
};

/// Preprocessed sampler: factors covariances once, then draws from a
/// CounterRng stream.
class NoiseSampler {
 public:
  explicit NoiseSampler(const NoiseSpec& spec);

  int dimension() const { return dim_; }
  void draw(CounterRng& rng, Eigen::Ref<Vector> out) const;
  Vector draw(CounterRng& rng) const;

 private:
  struct Component {
    Vector mean;
    Matrix factor;  // factor * factor' = cov
  };
  enum class Mode { kFixed, kGaussian, kMixture, kDiscrete, kEmpirical, kMap };

  Mode mode_ = Mode::kFixed;
  int dim_ = 0;
  std::vector<Component> components_;
  std::vector<double> cumulative_;  // mixture / discrete CDF
  std::vector<Vector> atoms_;
  Matrix samples_;
  Matrix map_;
  std::shared_ptr<const NoiseSampler> inner_;
};

}  // namespace risklqr
