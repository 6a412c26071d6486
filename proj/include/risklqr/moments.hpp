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

// Sufficient noise statistics for the risk functional:
//
//   mean = E w
//   cov  = E (w - mean)(w - mean)'
//   m3   = E (w - mean) (w - mean)' Qc (w - mean)
//   m4   = E [ (w - mean)' Qc (w - mean) - Tr(cov Qc) ]^2
//
// Every NoiseSpec variant is reduced exactly to either a weighted atom set
// (degenerate, discrete, empirical) or a Gaussian mixture (Gaussian,
// mixture); linear maps push either form forward in closed form.

#pragma once

#include <cstdint>

#include "risklqr/model.hpp"
#include "risklqr/noise.hpp"

namespace risklqr {

struct NoiseStats {
  Vector mean;
  Matrix cov;
  Vector m3;
  double m4 = 0.0;
  Matrix qc_used;

  int dimension() const { return static_cast<int>(mean.size()); }
};

NoiseStats noise_stats(const NoiseSpec& spec, const Matrix& Qc);

/// Plug-in (1/m normalized) estimates with the sample mean in place of the
/// true mean. Rows of `samples` are draws.
NoiseStats empirical_stats(const Matrix& samples, const Matrix& Qc);

/// Stream lane reserved for sample(); rollouts use lanes t + 1.
inline constexpr std::uint32_t kSampleLane = 0;

/// `count` i.i.d. draws as rows. Row i is drawn from the Philox stream
/// (seed, i, kSampleLane), so the result is independent of `threads`.
/// threads <= 0 selects default_threads().
Matrix sample(const NoiseSpec& spec, std::uint64_t seed, std::int64_t count,
              int threads = 0);

/// Single-threaded reference for sample().
Matrix sample_serial(const NoiseSpec& spec, std::uint64_t seed,
                     std::int64_t count);

/// RISKLQR_THREADS if set to a positive integer, else the OpenMP default.
int default_threads();

}  // namespace risklqr
