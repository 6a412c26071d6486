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

// JSON and CSV encodings. Matrices are nested row-major arrays; a bare
// number is accepted wherever a 1-vector or 1x1 matrix is expected. All
// floating-point output uses 17 significant digits, so written files
// round-trip exactly and identical inputs give byte-identical files.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>

#include <json.hpp>

#include "risklqr/model.hpp"
#include "risklqr/moments.hpp"
#include "risklqr/noise.hpp"
#include "risklqr/riccati.hpp"
#include "risklqr/risk_dual.hpp"
#include "risklqr/sim.hpp"

namespace risklqr::io {

using Json = nlohmann::json;

std::string format_number(double v);

/// Pretty JSON with %.17g numbers; arrays of scalars stay on one line.
void write_json(std::ostream& os, const Json& j);
void write_json_file(const std::filesystem::path& path, const Json& j);
Json read_json_file(const std::filesystem::path& path);

Matrix matrix_from_json(const Json& j);
Vector vector_from_json(const Json& j);
Json to_json(const Matrix& m);
Json to_json(const Vector& v);

SystemModel model_from_json(const Json& j);
Json to_json(const SystemModel& m);
/// "Qc" defaults to "Q"; "epsilon" defaults to 0.
CostSpec cost_from_json(const Json& j);
NoiseSpec noise_from_json(const Json& j);
Json to_json(const NoiseStats& s);

Json policy_to_json(const AffinePolicy& p);
AffinePolicy policy_from_json(const Json& j);

Json to_json(const KktReport& k);
/// Solution summary without the policy arrays (those go to policy.json).
Json solution_to_json(const Solution& s);
Json to_json(const EstimateReport& e);

struct EpsilonBudget {
  double value;
};
struct EpsilonBarBudget {
  double value;
};
struct MultiplierBudget {
  double value;
};
using Budget = std::variant<EpsilonBudget, EpsilonBarBudget, MultiplierBudget>;

struct SolverConfig {
  BisectionOptions bisection;
  SteadyStateOptions steady;
  bool use_steady_state = false;  // fixed-mu synthesis via the ARE limit
};

struct SimConfig {
  std::uint64_t seed = 0;
  std::int64_t n_rollouts = 1000;
  bool trajectory_mode = false;
  std::int64_t cdf_rollouts = 1;
};

struct RunConfig {
  SystemModel model;
  std::optional<NoiseSpec> noise;
  std::optional<CostSpec> cost;
  std::optional<Budget> budget;
  SolverConfig solver;
  SimConfig sim;
  std::filesystem::path output = ".";
};

RunConfig config_from_json(const Json& j);
RunConfig load_config(const std::filesystem::path& path);

/// Writes one CSV record; numbers use format_number.
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& os) : os_(os) {}
  void header(const std::vector<std::string>& names);
  CsvWriter& field(double v);
  CsvWriter& field(std::int64_t v);
  CsvWriter& empty_field();
  void end_row();

 private:
  void sep();
  std::ostream& os_;
  bool first_ = true;
};

}  // namespace risklqr::io
