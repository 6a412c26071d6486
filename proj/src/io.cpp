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

#include "risklqr/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "risklqr/errors.hpp"

namespace risklqr::io {

namespace {

const Json& require(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key))
    throw InvalidInput(std::string("missing field \"") + key + "\"");
  return j.at(key);
}

double number(const Json& j, const char* what) {
  if (!j.is_number())
    throw InvalidInput(std::string(what) + " must be a number");
  return j.get<double>();
}

std::vector<double> numbers(const Json& j, const char* what) {
  if (j.is_number()) return {j.get<double>()};
  if (!j.is_array())
    throw InvalidInput(std::string(what) + " must be an array of numbers");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& e : j) out.push_back(number(e, what));
  return out;
}

bool scalar_array(const Json& j) {
  for (const auto& e : j)
    if (e.is_array() || e.is_object()) return false;
  return true;
}

void emit(std::ostream& os, const Json& j, int indent) {
  const std::string pad(static_cast<std::size_t>(indent), ' ');
  const std::string inner(static_cast<std::size_t>(indent + 2), ' ');
  if (j.is_number_float()) {
    os << format_number(j.get<double>());
  } else if (j.is_object()) {
    if (j.empty()) {
      os << "{}";
      return;
    }
    os << "{\n";
    bool first = true;
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (!first) os << ",\n";
      first = false;
      os << inner << Json(it.key()).dump() << ": ";
      emit(os, it.value(), indent + 2);
    }
    os << "\n" << pad << "}";
  } else if (j.is_array()) {
    if (j.empty()) {
      os << "[]";
      return;
    }
    if (scalar_array(j)) {
      os << "[";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) os << ", ";
        emit(os, j[i], 0);
      }
      os << "]";
      return;
    }
    os << "[\n";
    for (std::size_t i = 0; i < j.size(); ++i) {
      if (i) os << ",\n";
      os << inner;
      emit(os, j[i], indent + 2);
    }
    os << "\n" << pad << "]";
  } else {
    os << j.dump();
  }
}

noise::Gaussian gaussian_from_json(const Json& j) {
  noise::Gaussian g;
  g.mean = vector_from_json(require(j, "mean"));
  const bool has_cov = j.contains("cov");
  const bool has_std = j.contains("std");
  if (has_cov == has_std)
    throw InvalidInput("gaussian needs exactly one of \"cov\" or \"std\"");
  if (has_cov) {
    g.cov = matrix_from_json(j.at("cov"));
  } else {
    const Vector sd = vector_from_json(j.at("std"));
    if ((sd.array() < 0.0).any())
      throw InvalidInput("gaussian \"std\" entries must be >= 0");
    g.cov = sd.cwiseProduct(sd).asDiagonal();
  }
  return g;
}

// Stacked per-stage arrays: {"shape": [stages, rows, cols], "data": [...]}.
Json stack(const std::vector<Matrix>& ms) {
  const auto rows = ms.empty() ? 0 : ms.front().rows();
  const auto cols = ms.empty() ? 0 : ms.front().cols();
  Json data = Json::array();
  for (const auto& m : ms)
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  return {{"shape", {ms.size(), rows, cols}}, {"data", std::move(data)}};
}

Json stack(const std::vector<Vector>& vs) {
  const auto len = vs.empty() ? 0 : vs.front().size();
  Json data = Json::array();
  for (const auto& v : vs)
    for (Eigen::Index i = 0; i < v.size(); ++i) data.push_back(v(i));
  return {{"shape", {vs.size(), len}}, {"data", std::move(data)}};
}

std::vector<std::size_t> shape_of(const Json& j, std::size_t rank,
                                  const char* what) {
  const Json& s = require(j, "shape");
  if (!s.is_array() || s.size() != rank)
    throw InvalidInput(std::string(what) + " has a malformed shape");
  std::vector<std::size_t> out;
  for (const auto& e : s) out.push_back(e.get<std::size_t>());
  return out;
}

std::vector<double> data_of(const Json& j, std::size_t expected,
                            const char* what) {
  std::vector<double> d = numbers(require(j, "data"), what);
  if (d.size() != expected)
    throw InvalidInput(std::string(what) + " data does not match its shape");
  return d;
}

std::vector<Matrix> unstack_matrices(const Json& j, const char* what) {
  const auto s = shape_of(j, 3, what);
  const auto d = data_of(j, s[0] * s[1] * s[2], what);
  std::vector<Matrix> out(s[0]);
  std::size_t k = 0;
  for (auto& m : out) {
    m.resize(static_cast<Eigen::Index>(s[1]), static_cast<Eigen::Index>(s[2]));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = d[k++];
  }
  return out;
}

std::vector<Vector> unstack_vectors(const Json& j, const char* what) {
  const auto s = shape_of(j, 2, what);
  const auto d = data_of(j, s[0] * s[1], what);
  std::vector<Vector> out(s[0]);
  std::size_t k = 0;
  for (auto& v : out) {
    v.resize(static_cast<Eigen::Index>(s[1]));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = d[k++];
  }
  return out;
}

}  // namespace

std::string format_number(double v) {
  if (!std::isfinite(v)) return "null";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_json(std::ostream& os, const Json& j) {
  emit(os, j, 0);
  os << "\n";
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
  std::ofstream os(path);
  if (!os) throw InvalidInput("cannot open " + path.string() + " for writing");
  write_json(os, j);
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw InvalidInput("cannot open " + path.string());
  try {
    return Json::parse(is);
  } catch (const Json::exception& e) {
    throw InvalidInput(path.string() + ": " + e.what());
  }
}

Matrix matrix_from_json(const Json& j) {
  if (j.is_number()) return Matrix::Constant(1, 1, j.get<double>());
  if (!j.is_array() || j.empty())
    throw InvalidInput("matrix must be a nonempty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  Eigen::Index cols = -1;
  Matrix m;
  for (Eigen::Index r = 0; r < rows; ++r) {
    const std::vector<double> row =
        numbers(j[static_cast<std::size_t>(r)], "matrix row");
    if (cols < 0) {
      cols = static_cast<Eigen::Index>(row.size());
      m.resize(rows, cols);
    } else if (static_cast<Eigen::Index>(row.size()) != cols) {
      throw DimensionError("matrix rows differ in length");
    }
    for (Eigen::Index c = 0; c < cols; ++c)
      m(r, c) = row[static_cast<std::size_t>(c)];
  }
  return m;
}

Vector vector_from_json(const Json& j) {
  const std::vector<double> v = numbers(j, "vector");
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Json to_json(const Matrix& m) {
  Json out = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(std::move(row));
  }
  return out;
}

Json to_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

SystemModel model_from_json(const Json& j) {
  SystemModel m;
  m.A = matrix_from_json(require(j, "A"));
  m.B = matrix_from_json(require(j, "B"));
  m.x0 = j.contains("x0") ? vector_from_json(j.at("x0"))
                          : Vector::Zero(m.A.rows());
  if (j.contains("horizon") && !j.at("horizon").is_null()) {
    if (!j.at("horizon").is_number_integer())
      throw InvalidInput("horizon must be an integer");
    m.horizon = j.at("horizon").get<int>();
  }
  m.check();
  return m;
}

Json to_json(const SystemModel& m) {
  Json j = {{"A", to_json(m.A)}, {"B", to_json(m.B)}, {"x0", to_json(m.x0)}};
  if (m.horizon) j["horizon"] = *m.horizon;
  return j;
}

CostSpec cost_from_json(const Json& j) {
  Matrix Q = matrix_from_json(require(j, "Q"));
  Matrix R = matrix_from_json(require(j, "R"));
  Matrix Qc = j.contains("Qc") ? matrix_from_json(j.at("Qc")) : Q;
  const double eps = j.contains("epsilon") ? number(j.at("epsilon"), "epsilon")
                                           : 0.0;
  return CostSpec::make(std::move(Q), std::move(R), std::move(Qc), eps);
}

NoiseSpec noise_from_json(const Json& j) {
  const Json& type_field = require(j, "type");
  if (!type_field.is_string()) throw InvalidInput("noise type must be a string");
  const std::string type = type_field.get<std::string>();
  NoiseSpec spec;
  if (type == "degenerate") {
    spec = NoiseSpec::degenerate(vector_from_json(require(j, "value")));
  } else if (type == "gaussian") {
    const noise::Gaussian g = gaussian_from_json(j);
    spec = NoiseSpec::gaussian(g.mean, g.cov);
  } else if (type == "mixture") {
    std::vector<noise::Gaussian> comps;
    for (const auto& c : require(j, "components"))
      comps.push_back(gaussian_from_json(c));
    spec = NoiseSpec::mixture(numbers(require(j, "weights"), "weights"),
                              std::move(comps));
  } else if (type == "discrete") {
    std::vector<Vector> atoms;
    for (const auto& a : require(j, "atoms")) atoms.push_back(vector_from_json(a));
    spec = NoiseSpec::discrete(std::move(atoms),
                               numbers(require(j, "probs"), "probs"));
  } else if (type == "empirical") {
    spec = NoiseSpec::empirical(matrix_from_json(require(j, "samples")));
  } else if (type == "linear_map") {
    spec = NoiseSpec::linear_map(matrix_from_json(require(j, "G")),
                                 noise_from_json(require(j, "inner")));
  } else {
    throw InvalidInput("unknown noise type \"" + type + "\"");
  }
  spec.check();
  return spec;
}

Json to_json(const NoiseStats& s) {
  return {{"mean", to_json(s.mean)},
          {"cov", to_json(s.cov)},
          {"m3", to_json(s.m3)},
          {"m4", s.m4},
          {"qc", to_json(s.qc_used)}};
}

Json policy_to_json(const AffinePolicy& p) {
  return {{"mu", p.mu},
          {"steady", p.steady},
          {"horizon", p.horizon()},
          {"K", stack(p.gains)},
          {"l", stack(p.offsets_l)},
          {"h", stack(p.offsets_h)},
          {"V", stack(p.values_V)},
          {"S", stack(p.values_S)},
          {"T", stack(p.values_T)},
          {"c",
           {{"shape", {p.constants_c.size()}}, {"data", p.constants_c}}}};
}

AffinePolicy policy_from_json(const Json& j) {
  try {
    AffinePolicy p;
    p.mu = number(require(j, "mu"), "mu");
    p.steady = require(j, "steady").get<bool>();
    p.gains = unstack_matrices(require(j, "K"), "K");
    p.offsets_l = unstack_vectors(require(j, "l"), "l");
    p.offsets_h = unstack_vectors(require(j, "h"), "h");
    p.values_V = unstack_matrices(require(j, "V"), "V");
    p.values_S = unstack_matrices(require(j, "S"), "S");
    p.values_T = unstack_matrices(require(j, "T"), "T");
    const Json& c = require(j, "c");
    const auto cs = shape_of(c, 1, "c");
    p.constants_c = data_of(c, cs[0], "c");
    const auto N = p.gains.size();
    if (p.offsets_l.size() != N || p.offsets_h.size() != N ||
        p.values_V.size() != N + 1 || p.values_S.size() != N + 1 ||
        p.values_T.size() != N + 1 || p.constants_c.size() != N + 1)
      throw DimensionError("policy arrays disagree on the horizon");
    return p;
  } catch (const Json::exception& e) {
    throw InvalidInput(std::string("malformed policy: ") + e.what());
  }
}

Json to_json(const KktReport& k) {
  return {{"stationarity_gap", k.stationarity_gap},
          {"primal_feasibility", k.primal_feasibility},
          {"complementary_slackness", k.complementary_slackness},
          {"passed", k.passed}};
}

Json solution_to_json(const Solution& s) {
  Json trace = Json::array();
  for (const auto& [mu, jr] : s.trace) trace.push_back({mu, jr});
  Json j = {{"status", to_string(s.status)},
            {"mu_star", s.mu_star},
            {"J", s.j},
            {"J_R", s.jr},
            {"eps_bar", s.eps_bar},
            {"trace", std::move(trace)}};
  if (s.status == SolveStatus::infeasible)
    j["kkt"] = nullptr;
  else
    j["kkt"] = to_json(s.kkt);
  return j;
}

Json to_json(const EstimateReport& e) {
  return {{"J", {{"mean", e.j_hat.mean}, {"std_error", e.j_hat.std_error}}},
          {"JR_raw",
           {{"mean", e.jr_raw_hat.mean},
            {"std_error", e.jr_raw_hat.std_error}}},
          {"n_rollouts", e.n_rollouts},
          {"seed", e.seed}};
}

RunConfig config_from_json(const Json& j) {
  try {
    RunConfig cfg;
    cfg.model = model_from_json(require(j, "model"));
    if (j.contains("noise")) cfg.noise = noise_from_json(j.at("noise"));
    if (j.contains("cost")) {
      cfg.cost = cost_from_json(j.at("cost"));
      cfg.cost->check(cfg.model.states(), cfg.model.inputs());
    }
    if (j.contains("budget")) {
      const Json& b = j.at("budget");
      const int forms = static_cast<int>(b.contains("epsilon")) +
                        static_cast<int>(b.contains("epsilon_bar")) +
                        static_cast<int>(b.contains("mu"));
      if (forms != 1 || b.size() != 1)
        throw InvalidInput(
            "budget must have exactly one of epsilon, epsilon_bar, mu");
      if (b.contains("epsilon")) {
        const double e = number(b.at("epsilon"), "epsilon");
        if (e < 0.0) throw InvalidInput("epsilon must be >= 0");
        cfg.budget = EpsilonBudget{e};
      } else if (b.contains("epsilon_bar")) {
        cfg.budget = EpsilonBarBudget{number(b.at("epsilon_bar"), "epsilon_bar")};
      } else {
        const double mu = number(b.at("mu"), "mu");
        if (mu < 0.0) throw InvalidInput("mu must be >= 0");
        cfg.budget = MultiplierBudget{mu};
      }
    }
    if (j.contains("solver")) {
      const Json& s = j.at("solver");
      auto& b = cfg.solver.bisection;
      b.mu_max = s.value("mu_max", b.mu_max);
      b.tol_rel = s.value("tol_rel", b.tol_rel);
      b.max_doublings = s.value("max_doublings", b.max_doublings);
      b.monotonicity_tol = s.value("monotonicity_tol", b.monotonicity_tol);
      const double kkt = s.value("kkt_tol", b.kkt.stationarity);
      b.kkt = {kkt, kkt, kkt};
      cfg.solver.steady.tol = s.value("riccati_tol", cfg.solver.steady.tol);
      cfg.solver.steady.max_iter =
          s.value("max_iter", cfg.solver.steady.max_iter);
      cfg.solver.use_steady_state = s.value("steady_state", false);
    }
    if (j.contains("sim")) {
      const Json& s = j.at("sim");
      cfg.sim.seed = s.value("seed", cfg.sim.seed);
      cfg.sim.n_rollouts = s.value("n_rollouts", cfg.sim.n_rollouts);
      cfg.sim.cdf_rollouts = s.value("cdf_rollouts", cfg.sim.cdf_rollouts);
      const std::string mode = s.value("mode", std::string("summary"));
      if (mode != "summary" && mode != "trajectory")
        throw InvalidInput("sim.mode must be \"summary\" or \"trajectory\"");
      cfg.sim.trajectory_mode = mode == "trajectory";
    }
    if (j.contains("output")) cfg.output = j.at("output").get<std::string>();
    return cfg;
  } catch (const Json::exception& e) {
    throw InvalidInput(std::string("malformed config: ") + e.what());
  }
}

RunConfig load_config(const std::filesystem::path& path) {
  return config_from_json(read_json_file(path));
}

void CsvWriter::header(const std::vector<std::string>& names) {
  for (const auto& n : names) {
    sep();
    os_ << n;
  }
  end_row();
}

void CsvWriter::sep() {
  if (!first_) os_ << ',';
  first_ = false;
}

CsvWriter& CsvWriter::field(double v) {
  sep();
  os_ << format_number(v);
  return *this;
}

CsvWriter& CsvWriter::field(std::int64_t v) {
  sep();
  os_ << v;
  return *this;
}

CsvWriter& CsvWriter::empty_field() {
  sep();
  return *this;
}

void CsvWriter::end_row() {
  os_ << '\n';
  first_ = true;
}

}  // namespace risklqr::io
