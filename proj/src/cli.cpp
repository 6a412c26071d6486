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

#include "risklqr/cli.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "risklqr/errors.hpp"
#include "risklqr/io.hpp"
#include "risklqr/moments.hpp"
#include "risklqr/riccati.hpp"
#include "risklqr/risk_dual.hpp"
#include "risklqr/sim.hpp"

namespace risklqr::cli {

namespace {

namespace fs = std::filesystem;
using io::Json;

struct Options {
  std::string config;
  std::optional<std::string> output;
  std::optional<std::uint64_t> seed;
  std::string policy;
  std::optional<std::int64_t> rollouts;
  std::optional<std::string> mode;
  double mu_min = 1e-4;
  double mu_max = 1e2;
  int points = 20;
};

struct Context {
  io::RunConfig cfg;
  fs::path out_dir;
  std::ostream& out;
  std::ostream& err;
};

const NoiseSpec& need_noise(const io::RunConfig& cfg) {
  if (!cfg.noise) throw InvalidInput("config has no \"noise\" section");
  return *cfg.noise;
}

const CostSpec& need_cost(const io::RunConfig& cfg) {
  if (!cfg.cost) throw InvalidInput("config has no \"cost\" section");
  return *cfg.cost;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw InvalidInput("cannot open " + path.string() + " for writing");
  return os;
}

void warn_assumptions(const Context& ctx) {
  const ValidationReport rep = validate(ctx.cfg.model, need_cost(ctx.cfg));
  for (const auto& m : rep.messages) ctx.err << "warning: " << m << "\n";
}

struct Synthesis {
  AffinePolicy policy;
  Json summary;
  bool infeasible = false;
};

Synthesis synthesize_policy(const io::RunConfig& cfg, const io::Budget& budget,
                            const NoiseStats& stats) {
  const CostSpec& cost = need_cost(cfg);
  Synthesis s;
  if (const auto* m = std::get_if<io::MultiplierBudget>(&budget)) {
    const int N = cfg.model.require_horizon();
    s.policy = cfg.solver.use_steady_state
                   ? steady_state(cfg.model, cost, stats, m->value,
                                  cfg.solver.steady)
                         .expand(N)
                   : backward_pass(cfg.model, cost, stats, m->value);
    s.summary = {{"status", "fixed_multiplier"},
                 {"mu_star", m->value},
                 {"J", lqr_cost(s.policy, cfg.model, stats, cost)},
                 {"J_R", risk_value(s.policy, cfg.model, stats, cost.Qc).jr},
                 {"eps_bar", nullptr},
                 {"kkt", nullptr},
                 {"trace", Json::array()}};
    return s;
  }
  Solution sol;
  if (const auto* e = std::get_if<io::EpsilonBudget>(&budget)) {
    CostSpec c = cost;
    c.epsilon = e->value;
    sol = solve_risk_constrained(cfg.model, c, stats, cfg.solver.bisection);
  } else {
    const double eps_bar = std::get<io::EpsilonBarBudget>(budget).value;
    sol = solve_for_epsilon_bar(cfg.model, cost, stats, eps_bar,
                                cfg.solver.bisection);
  }
  s.infeasible = sol.status == SolveStatus::infeasible;
  s.summary = io::solution_to_json(sol);
  s.policy = std::move(sol.policy);
  return s;
}

std::optional<double> budget_eps_bar(const io::RunConfig& cfg,
                                     const NoiseStats& stats) {
  if (!cfg.budget) return std::nullopt;
  if (const auto* e = std::get_if<io::EpsilonBudget>(&*cfg.budget))
    return epsilon_bar(e->value, cfg.model.require_horizon(), stats,
                       need_cost(cfg).Qc);
  if (const auto* e = std::get_if<io::EpsilonBarBudget>(&*cfg.budget))
    return e->value;
  return std::nullopt;
}

int cmd_moments(Context& ctx) {
  const NoiseSpec& spec = need_noise(ctx.cfg);
  const Matrix Qc = ctx.cfg.cost ? ctx.cfg.cost->Qc
                                 : Matrix::Identity(spec.dimension(),
                                                    spec.dimension());
  io::write_json(ctx.out, io::to_json(noise_stats(spec, Qc)));
  return kOk;
}

int cmd_synthesize(Context& ctx) {
  if (!ctx.cfg.budget)
    throw InvalidInput("synthesize needs a \"budget\" section");
  const NoiseStats stats = noise_stats(need_noise(ctx.cfg), need_cost(ctx.cfg).Qc);
  warn_assumptions(ctx);
  const Synthesis s = synthesize_policy(ctx.cfg, *ctx.cfg.budget, stats);
  io::write_json_file(ctx.out_dir / "policy.json", io::policy_to_json(s.policy));
  io::write_json_file(ctx.out_dir / "solution.json", s.summary);
  io::write_json(ctx.out, s.summary);
  if (s.infeasible) {
    ctx.err << "error: risk budget is infeasible for mu <= "
            << io::format_number(ctx.cfg.solver.bisection.mu_max) << "\n";
    return kInfeasible;
  }
  return kOk;
}

int cmd_evaluate(Context& ctx, const Options& opt) {
  if (opt.policy.empty()) throw InvalidInput("evaluate needs --policy");
  const CostSpec& cost = need_cost(ctx.cfg);
  const NoiseStats stats = noise_stats(need_noise(ctx.cfg), cost.Qc);
  const AffinePolicy policy =
      io::policy_from_json(io::read_json_file(opt.policy));
  const SystemModel& model = ctx.cfg.model;
  const int N = policy.horizon();

  const double jr = risk_value(policy, model, stats, cost.Qc).jr;
  const Matrix WQ = stats.cov * cost.Qc;
  Json j = {{"mu", policy.mu},
            {"J", lqr_cost(policy, model, stats, cost)},
            {"J_R", jr},
            {"JR_raw_expected",
             jr + N * stats.m4 - 4.0 * N * (WQ * WQ).trace()}};
  if (const auto eps_bar = budget_eps_bar(ctx.cfg, stats)) {
    Solution sol;
    sol.mu_star = policy.mu;
    sol.policy = policy;
    sol.eps_bar = *eps_bar;
    j["eps_bar"] = *eps_bar;
    j["kkt"] = io::to_json(
        kkt_certificate(sol, model, cost, stats, ctx.cfg.solver.bisection.kkt));
  } else {
    j["eps_bar"] = nullptr;
    j["kkt"] = nullptr;
  }
  io::write_json_file(ctx.out_dir / "evaluation.json", j);
  io::write_json(ctx.out, j);
  return kOk;
}

AffinePolicy policy_for_simulation(Context& ctx, const Options& opt,
                                   const NoiseStats& stats) {
  if (!opt.policy.empty())
    return io::policy_from_json(io::read_json_file(opt.policy));
  const io::Budget budget =
      ctx.cfg.budget ? *ctx.cfg.budget : io::Budget{io::MultiplierBudget{0.0}};
  Synthesis s = synthesize_policy(ctx.cfg, budget, stats);
  if (s.infeasible)
    ctx.err << "warning: budget infeasible; simulating the mu_max policy\n";
  return std::move(s.policy);
}

int cmd_simulate(Context& ctx, const Options& opt) {
  const CostSpec& cost = need_cost(ctx.cfg);
  const NoiseSpec& spec = need_noise(ctx.cfg);
  const NoiseStats stats = noise_stats(spec, cost.Qc);
  const AffinePolicy policy = policy_for_simulation(ctx, opt, stats);
  const Simulator sim(policy, ctx.cfg.model, spec, cost);

  const io::SimConfig& sc = ctx.cfg.sim;
  if (sc.n_rollouts < 2) throw InvalidInput("sim.n_rollouts must be >= 2");
  const std::uint64_t seed = sc.seed;
  const std::int64_t n = sc.n_rollouts;
  const int states = ctx.cfg.model.states();
  const int inputs = ctx.cfg.model.inputs();

  std::vector<RolloutSummary> summaries;
  if (sc.trajectory_mode) {
    auto os = open_out(ctx.out_dir / "trajectory.csv");
    io::CsvWriter csv(os);
    std::vector<std::string> head{"rollout", "t"};
    for (int i = 1; i <= states; ++i) head.push_back("x_" + std::to_string(i));
    for (int i = 1; i <= inputs; ++i) head.push_back("u_" + std::to_string(i));
    head.insert(head.end(), {"stage_penalty", "delta"});
    csv.header(head);
    summaries.resize(static_cast<std::size_t>(n));
    for (std::int64_t r = 0; r < n; ++r) {
      RolloutSummary& acc = summaries[static_cast<std::size_t>(r)];
      sim.run(seed, static_cast<std::uint64_t>(r), [&](const StepRecord& s) {
        csv.field(r).field(static_cast<std::int64_t>(s.t));
        for (int i = 0; i < states; ++i) csv.field((*s.state)(i));
        for (int i = 0; i < inputs; ++i) {
          if (s.input)
            csv.field((*s.input)(i));
          else
            csv.empty_field();
        }
        csv.field(s.stage_penalty);
        if (s.delta)
          csv.field(*s.delta);
        else
          csv.empty_field();
        csv.end_row();
        acc.cost += s.stage_penalty;
        if (s.input) acc.cost += s.input->dot(cost.R * *s.input);
        if (s.delta) acc.risk_raw += *s.delta * *s.delta;
      });
    }
  } else {
    summaries = summarize_rollouts(sim, seed, n);
    auto os = open_out(ctx.out_dir / "simulation.csv");
    io::CsvWriter csv(os);
    csv.header({"rollout", "J", "JR_raw"});
    for (std::int64_t r = 0; r < n; ++r) {
      const auto& s = summaries[static_cast<std::size_t>(r)];
      csv.field(r).field(s.cost).field(s.risk_raw);
      csv.end_row();
    }
  }

  std::vector<double> penalties;
  const std::int64_t cdf_n = std::clamp<std::int64_t>(sc.cdf_rollouts, 1, n);
  for (std::int64_t r = 0; r < cdf_n; ++r)
    sim.run(seed, static_cast<std::uint64_t>(r), [&](const StepRecord& s) {
      penalties.push_back(s.stage_penalty);
    });
  {
    auto os = open_out(ctx.out_dir / "stage_penalty_cdf.csv");
    io::CsvWriter csv(os);
    csv.header({"value", "fraction"});
    for (const CdfPoint& p : empirical_cdf(penalties)) {
      csv.field(p.value).field(p.fraction);
      csv.end_row();
    }
  }

  const Json est = io::to_json(reduce_summaries(summaries, seed));
  io::write_json_file(ctx.out_dir / "estimate.json", est);
  io::write_json(ctx.out, est);
  return kOk;
}

int cmd_sweep(Context& ctx, const Options& opt) {
  if (!(opt.mu_min > 0.0) || !(opt.mu_max > opt.mu_min) || opt.points < 2)
    throw InvalidInput("sweep needs 0 < --mu-min < --mu-max and --points >= 2");
  const CostSpec& cost = need_cost(ctx.cfg);
  const NoiseStats stats = noise_stats(need_noise(ctx.cfg), cost.Qc);
  const SystemModel& model = ctx.cfg.model;
  model.require_horizon();
  warn_assumptions(ctx);

  const auto points = static_cast<std::size_t>(opt.points);
  const double a = std::log(opt.mu_min);
  const double step = (std::log(opt.mu_max) - a) / (opt.points - 1);
  struct Row {
    double mu, j, jr, rho;
  };
  std::vector<Row> rows(points);
  std::vector<std::exception_ptr> failures(points);
#pragma omp parallel for num_threads(default_threads()) schedule(dynamic)
  for (std::size_t i = 0; i < points; ++i) {
    try {
      const double mu = i + 1 == points ? opt.mu_max
                        : i == 0        ? opt.mu_min
                                        : std::exp(a + step * i);
      const AffinePolicy p = backward_pass(model, cost, stats, mu);
      const SteadyStatePolicy ss =
          steady_state(model, cost, stats, mu, ctx.cfg.solver.steady);
      rows[i] = {mu, lqr_cost(p, model, stats, cost),
                 risk_value(p, model, stats, cost.Qc).jr,
                 spectral_radius(model.A + model.B * ss.K)};
    } catch (...) {
      failures[i] = std::current_exception();
    }
  }
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);

  auto os = open_out(ctx.out_dir / "frontier.csv");
  io::CsvWriter csv(os);
  csv.header({"mu", "J", "J_R", "spectral_radius"});
  for (const Row& r : rows) {
    csv.field(r.mu).field(r.j).field(r.jr).field(r.rho);
    csv.end_row();
  }
  ctx.out << "wrote " << (ctx.out_dir / "frontier.csv").string() << "\n";
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Risk-constrained LQR synthesis and simulation", "risklqr"};
  app.require_subcommand(1, 1);
  Options opt;

  auto common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", opt.config, "JSON run configuration")
        ->required();
    sub->add_option("-o,--output", opt.output, "Output directory");
    sub->add_option("--seed", opt.seed, "Overrides sim.seed");
  };
  auto* moments = app.add_subcommand("moments", "Print noise statistics");
  common(moments);
  auto* synth = app.add_subcommand("synthesize", "Solve for a policy");
  common(synth);
  auto* eval = app.add_subcommand("evaluate", "Evaluate a policy file");
  common(eval);
  eval->add_option("-p,--policy", opt.policy, "Policy JSON")->required();
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo rollouts");
  common(simulate);
  simulate->add_option("-p,--policy", opt.policy,
                       "Policy JSON (default: synthesize from the config)");
  simulate->add_option("--rollouts", opt.rollouts, "Overrides sim.n_rollouts");
  simulate->add_option("--mode", opt.mode, "summary or trajectory")
      ->check(CLI::IsMember({"summary", "trajectory"}));
  auto* sweep = app.add_subcommand("sweep", "Multiplier trade-off frontier");
  common(sweep);
  sweep->add_option("--mu-min", opt.mu_min, "Smallest multiplier");
  sweep->add_option("--mu-max", opt.mu_max, "Largest multiplier");
  sweep->add_option("--points", opt.points, "Log-spaced grid size");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    Context ctx{io::load_config(opt.config), {}, out, err};
    if (opt.seed) ctx.cfg.sim.seed = *opt.seed;
    if (opt.rollouts) ctx.cfg.sim.n_rollouts = *opt.rollouts;
    if (opt.mode) ctx.cfg.sim.trajectory_mode = *opt.mode == "trajectory";
    ctx.out_dir = opt.output ? fs::path(*opt.output) : ctx.cfg.output;
    if (!moments->parsed()) fs::create_directories(ctx.out_dir);

    if (moments->parsed()) return cmd_moments(ctx);
    if (synth->parsed()) return cmd_synthesize(ctx);
    if (eval->parsed()) return cmd_evaluate(ctx, opt);
    if (simulate->parsed()) return cmd_simulate(ctx, opt);
    return cmd_sweep(ctx, opt);
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return kNumerical;
  } catch (const ConvergenceError& e) {
    err << "convergence error: " << e.what() << "\n";
    return kNumerical;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kNumerical;
  }
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace risklqr::cli
