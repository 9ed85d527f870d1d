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

#include "oracles/reference.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace lqgcode;

namespace {

const std::string kScalar = R"({
  "m": 1, "u": 1,
  "A": 2.0, "B": [1.0], "W": [[1.0]], "Q": 1, "Phi": 1, "X0": 1,
  "gamma": 6.354101966249685
})";

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::IoError;
}

std::string with(const std::string& base, const std::string& extra) {
  return base.substr(0, base.rfind('}')) + ", " + extra + "}";
}

ExperimentConfig quick(double gamma_scale = 1.5) {
  ExperimentConfig c = parse_config(kScalar);
  c.gamma = gamma_scale * (2.0 + std::sqrt(5.0));
  c.warmup_steps = 50000;
  c.eval_steps = 200000;
  c.kl_ensemble = 2000;
  c.kl_horizon = 16;
  c.checkpoints.clear();
  return c;
}

}  // namespace

TEST(LoadConfig, DefaultsFilled) {
  const ExperimentConfig c = parse_config(kScalar);
  EXPECT_EQ(c.delta, 1.0);
  EXPECT_EQ(c.seed, 0u);
  EXPECT_EQ(c.tail_epsilon, 1e-3);
  EXPECT_EQ(c.tail_decay, 0.5);
  EXPECT_EQ(c.warmup_steps, 100000u);
  EXPECT_EQ(c.eval_steps, 1000000u);
  EXPECT_EQ(c.checkpoints, (std::vector<std::uint64_t>{10, 100, 1000, 10000, 100000, 1000000}));
  EXPECT_EQ(c.plant.A(0, 0), 2.0);
}

TEST(LoadConfig, FlatAndNestedMatrices) {
  const std::string two = R"({"m": 2, "u": 1, "A": [1.1, 0.2, 0.0, 0.8], "B": [[1.0], [0.0]],
    "W": [[1, 0], [0, 1]], "Q": [1, 0, 0, 1], "Phi": 1, "X0": [[1, 0], [0, 1]], "gamma": 10})";
  const ExperimentConfig c = parse_config(two);
  EXPECT_EQ(c.plant.A(0, 1), 0.2);
  EXPECT_EQ(c.plant.A(1, 0), 0.0);
  EXPECT_EQ(c.plant.B.rows(), 2);
  EXPECT_EQ(c.plant.B.cols(), 1);
}

TEST(LoadConfig, ShapeMismatch) {
  const std::string bad = R"({"m": 2, "u": 2, "A": [[1, 0, 0], [0, 1, 0]], "B": [1, 0, 0, 1],
    "W": [1, 0, 0, 1], "Q": [1, 0, 0, 1], "Phi": [1, 0, 0, 1], "X0": [1, 0, 0, 1], "gamma": 10})";
  EXPECT_EQ(code_of([&] { parse_config(bad); }), ErrorCode::DimensionMismatch);
  const std::string wide = R"({"m": 1, "u": 1, "A": 2, "B": 1, "W": [[1, 0], [0, 1]], "Q": 1, "Phi": 1,
    "X0": 1, "gamma": 10})";
  EXPECT_EQ(code_of([&] { parse_config(wide); }), ErrorCode::DimensionMismatch);
}

TEST(LoadConfig, RangeChecks) {
  EXPECT_EQ(code_of([] { parse_config(with(kScalar, R"("tail_epsilon": 1.5)")); }), ErrorCode::ValueOutOfRange);
  EXPECT_EQ(code_of([] { parse_config(with(kScalar, R"("tail_decay": 0)")); }), ErrorCode::ValueOutOfRange);
  EXPECT_EQ(code_of([] { parse_config(with(kScalar, R"("delta": -1)")); }), ErrorCode::ValueOutOfRange);
  EXPECT_EQ(code_of([] { parse_config(with(kScalar, R"("eval_steps": 5, "checkpoints": [10])")); }),
            ErrorCode::ValueOutOfRange);
  EXPECT_EQ(code_of([] { parse_config(with(kScalar, R"("seed": -3)")); }), ErrorCode::ValueOutOfRange);
}

TEST(LoadConfig, StrictParsing) {
  EXPECT_EQ(code_of([] { parse_config(with(kScalar, R"("colour": 1)")); }), ErrorCode::ParseError);
  EXPECT_EQ(code_of([] { parse_config(R"({"m": 1, "u": 1})"); }), ErrorCode::ParseError);
  EXPECT_EQ(code_of([] { parse_config(with(kScalar, R"("seed": "seven")")); }), ErrorCode::ParseError);
  try {
    parse_config("{\n  \"m\": 1,\n  \"u\": ,\n}");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParseError);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
  try {
    parse_config(with(kScalar, R"("colour": 1)"));
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("colour"), std::string::npos);
  }
}

TEST(LoadConfig, MissingFile) {
  EXPECT_EQ(code_of([] { load_config("/nonexistent/config.json"); }), ErrorCode::IoError);
}

TEST(LoadConfig, ShippedConfigsParse) {
  const auto s = load_config(std::filesystem::path(LQGCODE_CONFIG_DIR) / "scalar_a2.json");
  EXPECT_EQ(s.plant.state_dim(), 1);
  const auto m = load_config(std::filesystem::path(LQGCODE_CONFIG_DIR) / "mimo_2d.json");
  EXPECT_EQ(m.plant.state_dim(), 2);
  const auto g = solve_dare(m.plant);
  EXPECT_NEAR(m.gamma, 1.5 * (m.plant.W * g.S).trace(), 1e-12);
  EXPECT_NEAR(s.gamma, 1.5 * solve_dare(s.plant).S(0, 0), 1e-12);
}

TEST(Eta, ClosedFormValue) {
  EXPECT_NEAR(eta_bits(), 1.2546, 1e-4);
  EXPECT_DOUBLE_EQ(eta_bits(), 1.0 + 0.5 * std::log2(2.0 * std::numbers::pi * std::numbers::e / 12.0));
}

TEST(Synthesize, StageAttribution) {
  ExperimentConfig c = quick();
  c.gamma = 1.0;
  try {
    synthesize(c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Infeasible);
    EXPECT_EQ(e.stage(), "rdf");
  }
  c = quick();
  c.plant.B = Matrix::Zero(1, 1);
  try {
    synthesize(c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotStabilizable);
    EXPECT_EQ(e.stage(), "dare");
  }
}

TEST(Warmup, ModeAtOriginAndDeterministic) {
  ExperimentConfig c = parse_config(kScalar);
  const Synthesis s = synthesize(c);
  const WarmupResult a = warmup_pmf(c, s.system);
  const auto& core = a.pmf.core();
  const auto mode = std::max_element(core.begin(), core.end(), [](const auto& x, const auto& y) { return x.count < y.count; });
  EXPECT_EQ(mode->point, (Coords{0}));
  EXPECT_EQ(a.samples, c.warmup_steps - a.burn_in);
  const WarmupResult b = warmup_pmf(c, s.system);
  std::ostringstream sa, sb;
  write_pmf(sa, a.pmf);
  write_pmf(sb, b.pmf);
  EXPECT_EQ(sa.str(), sb.str());
}

TEST(Warmup, TooShortIsRejected) {
  ExperimentConfig c = parse_config(kScalar);
  const Synthesis s = synthesize(c);
  c.warmup_steps = burn_in_steps(s.system.synthesis);
  EXPECT_EQ(code_of([&] { warmup_pmf(c, s.system); }), ErrorCode::InsufficientWarmup);
}

TEST(BurnIn, TenMixingTimes) {
  const Synthesis s = synthesize(parse_config(kScalar));
  const double rho = spectral_radius(s.system.synthesis.R_cl);
  EXPECT_EQ(burn_in_steps(s.system.synthesis), static_cast<std::uint64_t>(std::ceil(10.0 * std::log(100.0) / -std::log(rho))));
}

TEST(RunExperiment, ScalarSandwichAndBudget) {
  ExperimentConfig c = parse_config(kScalar);
  c.seed = 3;
  c.kl_ensemble = 4000;
  const ExperimentOutcome out = run_experiment(c);
  const Report& r = out.report;
  const auto ref = oracle::scalar_rdf(2.0, 1.0, 1.0, 1.0, 1.0, c.gamma);
  EXPECT_NEAR(r.rate_lower_bits, ref.rate_bits, 1e-4);
  EXPECT_DOUBLE_EQ(r.rate_ceiling_bits - r.rate_lower_bits, 2.0 + eta_bits());
  EXPECT_GE(r.measured_bitrate_bits, r.rate_lower_bits - 0.05);
  EXPECT_LE(r.measured_bitrate_bits, r.rate_ceiling_bits + 0.05);
  EXPECT_LE(r.measured_cost, 1.05 * c.gamma);
  EXPECT_LE(r.entropy_estimate_bits, r.rate_lower_bits + eta_bits() + 0.1);
  EXPECT_TRUE(r.pass_flags.all());
  EXPECT_EQ(r.checkpoints.size(), c.checkpoints.size());
  EXPECT_TRUE(r.running_average_converged);
}

TEST(RunExperiment, MimoCeilingIdentity) {
  ExperimentConfig c = load_config(std::filesystem::path(LQGCODE_CONFIG_DIR) / "mimo_2d.json");
  c.eval_steps = 100000;
  c.warmup_steps = 20000;
  c.kl_ensemble = 500;
  c.checkpoints.clear();
  const Report r = run_experiment(c).report;
  EXPECT_NEAR(r.rate_ceiling_bits - r.rate_lower_bits, 2.0 + 2.0 * eta_bits(), 1e-12);
  EXPECT_GE(r.measured_bitrate_bits, r.rate_lower_bits - 0.1);
  EXPECT_LE(r.measured_bitrate_bits, r.rate_ceiling_bits + 0.1);
}

TEST(RunExperiment, SameSeedSameReport) {
  const ExperimentConfig c = quick();
  const auto a = run_experiment(c), b = run_experiment(c);
  EXPECT_EQ(report_json(a.report).dump(), report_json(b.report).dump());
  std::ostringstream ta, tb;
  write_trace_csv(ta, a.trace);
  write_trace_csv(tb, b.trace);
  EXPECT_EQ(ta.str(), tb.str());
  ExperimentConfig other = c;
  other.seed = 1;
  EXPECT_NE(report_json(run_experiment(other).report).dump(), report_json(a.report).dump());
}

TEST(RunExperiment, InfeasibleBudgetIsAttributed) {
  ExperimentConfig c = quick();
  c.gamma = 2.0;
  try {
    run_experiment(c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Infeasible);
    EXPECT_EQ(e.stage(), "rdf");
    EXPECT_NE(std::string(e.what()).find("rdf"), std::string::npos);
  }
}

TEST(RunExperiment, ArtifactsWritten) {
  const auto out = run_experiment(quick());
  const auto dir = std::filesystem::temp_directory_path() / "lqgcode_artifacts_test";
  std::filesystem::remove_all(dir);
  write_artifacts(out, dir);
  for (const char* f : {"trace.csv", "report.json", "summary.json", "pmf.bin"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  }
  std::ifstream pmf(dir / "pmf.bin", std::ios::binary);
  EXPECT_TRUE(read_pmf(pmf) == *out.pmf);
  std::ifstream rep(dir / "report.json");
  const auto j = nlohmann::json::parse(rep);
  EXPECT_EQ(j.at("summary").at("T").get<std::uint64_t>(), 200000u);
  EXPECT_TRUE(j.at("pass_flags").contains("kl_monotone"));
  std::filesystem::remove_all(dir);
}

TEST(Sweep, FivePointsWithinBounds) {
  const ExperimentConfig c = quick();
  const double s = 2.0 + std::sqrt(5.0);
  const std::vector<double> gammas = {1.2 * s, 1.5 * s, 2.0 * s, 3.0 * s, 5.0 * s};
  const SweepResult res = sweep(c, gammas);
  ASSERT_EQ(res.rows.size(), 5u);
  for (const auto& row : res.rows) {
    ASSERT_TRUE(row.report.has_value());
    const Report& r = *row.report;
    EXPECT_NEAR(r.rate_lower_bits, oracle::scalar_rdf(2.0, 1.0, 1.0, 1.0, 1.0, row.gamma).rate_bits, 1e-4);
    EXPECT_GE(r.measured_bitrate_bits, r.rate_lower_bits - 0.05);
    EXPECT_LE(r.measured_bitrate_bits, r.rate_ceiling_bits + 0.05);
  }
  EXPECT_TRUE(res.monotone);
  std::ostringstream os;
  write_sweep_csv(os, res);
  const std::string csv = os.str();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "gamma,rate_lower,rate_ceiling,measured_bitrate,measured_cost,entropy_est,pass");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 6);
}

TEST(Sweep, SingletonEqualsRunExperiment) {
  const ExperimentConfig c = quick();
  const SweepResult res = sweep(c, {c.gamma});
  ASSERT_TRUE(res.rows[0].report.has_value());
  EXPECT_EQ(report_json(*res.rows[0].report).dump(), report_json(run_experiment(c).report).dump());
}

TEST(Sweep, InfeasiblePointIsolated) {
  const ExperimentConfig c = quick();
  const SweepResult res = sweep(c, {2.0, c.gamma});
  ASSERT_TRUE(res.rows[0].error.has_value());
  EXPECT_EQ(res.rows[0].error->code(), ErrorCode::Infeasible);
  EXPECT_TRUE(res.rows[1].report.has_value());
  EXPECT_THROW(sweep(c, {c.gamma, c.gamma}), Error);
}

TEST(KlMonotone, TwoStandardErrorSlack) {
  const auto pt = [](std::uint64_t t, double bits, double se) { return KlPoint{t, KlEstimate{bits, se, 100, 3}}; };
  EXPECT_TRUE(kl_nonincreasing({pt(0, 0.5, 0.01), pt(1, 0.2, 0.01), pt(2, 0.21, 0.01)}));
  EXPECT_FALSE(kl_nonincreasing({pt(0, 0.5, 0.01), pt(1, 0.2, 0.01), pt(2, 0.3, 0.01)}));
  EXPECT_TRUE(kl_nonincreasing({pt(0, 0.1, 0.01), pt(1, 0.5, 0.01), pt(2, 0.4, 0.01)}, 1));
}

TEST(RunningAverage, FlagsDriftOverLastDecade) {
  EXPECT_TRUE(running_average_converged({{1000, 3.0, 6.0}, {10000, 3.01, 6.02}}));
  EXPECT_FALSE(running_average_converged({{1000, 3.0, 6.0}, {10000, 3.2, 6.0}}));
  EXPECT_FALSE(running_average_converged({{100, 3.0, 6.0}, {1000, 3.0, 7.0}, {10000, 3.0, 6.0}}));
}

TEST(InvariantSuite, ShippedConfigsPass) {
  for (const char* name : {"scalar_a2.json", "mimo_2d.json"}) {
    for (const auto& chk : invariant_suite(load_config(std::filesystem::path(LQGCODE_CONFIG_DIR) / name))) {
      EXPECT_TRUE(chk.pass) << name << ": " << chk.name << " = " << chk.value;
    }
  }
}
