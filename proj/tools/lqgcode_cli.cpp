// Copyright 2026 The lqgcode Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command line front end: synthesis, rate curves, closed-loop runs.

#include <lqgcode/lqgcode.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

enum Exit : int { kOk = 0, kBoundViolation = 2, kSynthesisFailure = 3, kIoFailure = 4 };

int exit_code(const lqgcode::Error& e) {
  using lqgcode::ErrorCode;
  switch (e.code()) {
    case ErrorCode::ParseError:
    case ErrorCode::IoError:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::ValueOutOfRange:
      return kIoFailure;
    default:
      return kSynthesisFailure;
  }
}

nlohmann::json matrix(const lqgcode::Matrix& m) { return lqgcode::detail::matrix_json(m); }

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> steps;
  std::string out;
  std::vector<std::uint64_t> checkpoints;
  std::vector<double> gammas;
};

lqgcode::ExperimentConfig load(const Common& c) {
  auto cfg = lqgcode::load_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  if (c.steps) {
    cfg.eval_steps = *c.steps;
    cfg.checkpoints.clear();
  }
  if (!c.checkpoints.empty()) cfg.checkpoints = c.checkpoints;
  lqgcode::finalize_config(cfg);
  return cfg;
}

void emit(const Common& c, const nlohmann::json& j, const char* name) {
  if (c.out.empty()) {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::filesystem::create_directories(c.out);
  const auto path = std::filesystem::path(c.out) / name;
  std::ofstream f(path);
  if (!f) throw lqgcode::Error(lqgcode::ErrorCode::IoError, "cannot write " + path.string());
  f << j.dump(2) << '\n';
}

int cmd_synth(const Common& c) {
  const auto cfg = load(c);
  const auto s = lqgcode::synthesize(cfg);
  const auto& g = s.system.gains;
  const auto& k = s.system.synthesis;
  emit(c,
       {{"S", matrix(g.S)}, {"K", matrix(g.K)}, {"Theta", matrix(g.Theta)},
        {"P", matrix(s.rdf.P)}, {"Pi", matrix(s.rdf.Pi)}, {"rate_bits", s.rdf.rate_bits},
        {"P_plus", matrix(k.P_plus)}, {"C", matrix(k.C)}, {"J", matrix(k.J)}, {"L", matrix(k.L)},
        {"spectral_radius_filter", lqgcode::spectral_radius(k.R_cl)}},
       "synth.json");
  return kOk;
}

int cmd_rdf(const Common& c) {
  const auto cfg = load(c);
  const auto gains = lqgcode::staged("dare", [&] { return lqgcode::solve_dare(cfg.plant); });
  const std::vector<double> gammas = c.gammas.empty() ? std::vector<double>{cfg.gamma} : c.gammas;
  const auto curve = lqgcode::staged("rdf", [&] { return lqgcode::rate_curve(cfg.plant, gains, gammas); });
  nlohmann::json rows = nlohmann::json::array();
  bool all_ok = true;
  for (const auto& p : curve) {
    if (p.solution) {
      rows.push_back({{"gamma", p.gamma}, {"rate_bits", p.solution->rate_bits}, {"dual_gap", p.solution->dual_gap}});
    } else {
      all_ok = false;
      rows.push_back({{"gamma", p.gamma}, {"error", p.error->what()}});
    }
  }
  emit(c, rows, "rdf.json");
  return all_ok ? kOk : kSynthesisFailure;
}

int cmd_simulate(const Common& c) {
  const auto cfg = load(c);
  const auto out = lqgcode::run_experiment(cfg);
  if (!c.out.empty()) lqgcode::write_artifacts(out, c.out);
  std::cout << lqgcode::report_json(out.report).dump(2) << '\n';
  return out.report.pass_flags.all() ? kOk : kBoundViolation;
}

int cmd_sweep(const Common& c) {
  const auto cfg = load(c);
  if (c.gammas.empty()) throw lqgcode::Error(lqgcode::ErrorCode::BadParameter, "sweep needs --gammas");
  const auto res = lqgcode::sweep(cfg, c.gammas);
  if (c.out.empty()) {
    lqgcode::write_sweep_csv(std::cout, res);
  } else {
    std::filesystem::create_directories(c.out);
    std::ofstream f(std::filesystem::path(c.out) / "sweep.csv");
    if (!f) throw lqgcode::Error(lqgcode::ErrorCode::IoError, "cannot write sweep.csv");
    lqgcode::write_sweep_csv(f, res);
  }
  bool ok = res.monotone;
  bool failed = false;
  for (const auto& row : res.rows) {
    if (row.error) {
      failed = true;
      std::cerr << "gamma " << row.gamma << ": " << row.error->what() << '\n';
    } else {
      ok = ok && row.report->pass_flags.all();
    }
  }
  if (failed) return kSynthesisFailure;
  return ok ? kOk : kBoundViolation;
}

int cmd_validate(const Common& c) {
  const auto cfg = load(c);
  const auto checks = lqgcode::invariant_suite(cfg);
  nlohmann::json rows = nlohmann::json::array();
  bool ok = true;
  for (const auto& ch : checks) {
    rows.push_back({{"check", ch.name}, {"pass", ch.pass}, {"value", ch.value}});
    ok = ok && ch.pass;
  }
  emit(c, rows, "validate.json");
  return ok ? kOk : kBoundViolation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entropy-coded LQG control over a rate-limited channel"};
  app.require_subcommand(1);
  Common c;
  std::uint64_t seed = 0, steps = 0;
  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", c.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "Override the config seed");
    sub->add_option("--steps", steps, "Override eval_steps");
    sub->add_option("--out", c.out, "Output directory");
    sub->add_option("--checkpoints", c.checkpoints, "Running-average checkpoints");
    sub->add_option("--gammas", c.gammas, "Control budgets, strictly increasing");
  };
  struct Sub {
    CLI::App* app;
    int (*run)(const Common&);
  };
  std::vector<Sub> subs = {
      {app.add_subcommand("synth", "Controller, rate-distortion and coder synthesis"), cmd_synth},
      {app.add_subcommand("rdf", "Rate lower bound at one or more budgets"), cmd_rdf},
      {app.add_subcommand("simulate", "Warm-up and evaluation run with report"), cmd_simulate},
      {app.add_subcommand("sweep", "Simulate over a list of budgets"), cmd_sweep},
      {app.add_subcommand("validate", "Parse and check a config"), cmd_validate},
  };
  for (auto& s : subs) add_common(s.app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kIoFailure;
  }
  for (auto& s : subs) {
    if (!s.app->parsed()) continue;
    if (s.app->count("--seed")) c.seed = seed;
    if (s.app->count("--steps")) c.steps = steps;
    try {
      return s.run(c);
    } catch (const lqgcode::Error& e) {
      std::cerr << "error: " << e.what() << '\n';
      return exit_code(e);
    } catch (const std::filesystem::filesystem_error& e) {
      std::cerr << "error: " << e.what() << '\n';
      return kIoFailure;
    }
  }
  return kIoFailure;
}
