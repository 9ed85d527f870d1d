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

#pragma once

#include <lqgcode/closed_loop.hpp>
#include <lqgcode/control_synthesis.hpp>
#include <lqgcode/error.hpp>
#include <lqgcode/rdf_solver.hpp>
#include <lqgcode/sfe_codec.hpp>
#include <lqgcode/statistics.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace lqgcode {

// Per-dimension overhead of uniform dithered quantization over the Gaussian
// rate-distortion bound: 1 + (1/2) log2(2 pi e / 12).
inline double eta_bits() { return 1.0 + 0.5 * std::log2(2.0 * std::numbers::pi * std::numbers::e / 12.0); }

struct ExperimentConfig {
  PlantModel plant;
  double gamma = 0.0;
  double delta = 1.0;
  std::uint64_t seed = 0;
  std::uint64_t warmup_steps = 100000;
  std::uint64_t eval_steps = 1000000;
  double tail_epsilon = 1e-3;
  double tail_decay = 0.5;
  std::vector<std::uint64_t> checkpoints;  // empty: decades up to eval_steps
  std::uint64_t kl_ensemble = 20000;
  std::uint64_t kl_horizon = 64;
};

namespace detail {

inline std::pair<std::size_t, std::size_t> line_and_column(std::string_view text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

inline Matrix parse_matrix(const nlohmann::json& j, Eigen::Index rows, Eigen::Index cols, const std::string& field) {
  Matrix out(rows, cols);
  const auto number = [&](const nlohmann::json& v) {
    if (!v.is_number()) throw Error(ErrorCode::ParseError, "field '" + field + "': entries must be numbers");
    return v.get<double>();
  };
  if (j.is_number()) {
    if (rows != 1 || cols != 1) throw Error(ErrorCode::DimensionMismatch, "field '" + field + "' is a scalar but must be " + std::to_string(rows) + "x" + std::to_string(cols));
    out(0, 0) = number(j);
    return out;
  }
  if (!j.is_array()) throw Error(ErrorCode::ParseError, "field '" + field + "' must be a matrix");
  const bool nested = !j.empty() && j.front().is_array();
  if (nested) {
    if (static_cast<Eigen::Index>(j.size()) != rows) {
      throw Error(ErrorCode::DimensionMismatch, "field '" + field + "' has " + std::to_string(j.size()) + " rows, expected " + std::to_string(rows));
    }
    for (Eigen::Index r = 0; r < rows; ++r) {
      const auto& row = j[static_cast<std::size_t>(r)];
      if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
        throw Error(ErrorCode::DimensionMismatch, "field '" + field + "' row " + std::to_string(r) + " must have " + std::to_string(cols) + " entries");
      }
      for (Eigen::Index c = 0; c < cols; ++c) out(r, c) = number(row[static_cast<std::size_t>(c)]);
    }
  } else {
    if (static_cast<Eigen::Index>(j.size()) != rows * cols) {
      throw Error(ErrorCode::DimensionMismatch, "field '" + field + "' has " + std::to_string(j.size()) + " entries, expected " + std::to_string(rows * cols));
    }
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) out(r, c) = number(j[static_cast<std::size_t>(r * cols + c)]);
    }
  }
  return out;
}

inline nlohmann::json matrix_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace detail

// Fills default checkpoints and enforces value ranges.
inline void finalize_config(ExperimentConfig& cfg) {
  if (!(cfg.gamma > 0.0) || !std::isfinite(cfg.gamma)) throw Error(ErrorCode::ValueOutOfRange, "gamma must be positive");
  if (!(cfg.delta > 0.0) || !std::isfinite(cfg.delta)) throw Error(ErrorCode::ValueOutOfRange, "delta must be positive");
  if (!(cfg.tail_epsilon > 0.0 && cfg.tail_epsilon < 1.0)) throw Error(ErrorCode::ValueOutOfRange, "tail_epsilon must lie in (0, 1)");
  if (!(cfg.tail_decay > 0.0 && cfg.tail_decay < 1.0)) throw Error(ErrorCode::ValueOutOfRange, "tail_decay must lie in (0, 1)");
  if (cfg.warmup_steps < 1 || cfg.eval_steps < 1) throw Error(ErrorCode::ValueOutOfRange, "step counts must be positive");
  if (cfg.kl_ensemble < 2) throw Error(ErrorCode::ValueOutOfRange, "kl_ensemble must be at least 2");
  if (cfg.checkpoints.empty()) {
    for (std::uint64_t c = 10; c < cfg.eval_steps; c *= 10) cfg.checkpoints.push_back(c);
    cfg.checkpoints.push_back(cfg.eval_steps);
  }
  std::sort(cfg.checkpoints.begin(), cfg.checkpoints.end());
  cfg.checkpoints.erase(std::unique(cfg.checkpoints.begin(), cfg.checkpoints.end()), cfg.checkpoints.end());
  for (std::uint64_t c : cfg.checkpoints) {
    if (c < 1 || c > cfg.eval_steps) throw Error(ErrorCode::ValueOutOfRange, "checkpoint " + std::to_string(c) + " outside [1, eval_steps]");
  }
}

// Strict JSON: unknown fields are rejected, shapes are checked against m, u.
inline ExperimentConfig parse_config(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const auto [line, col] = detail::line_and_column(text, e.byte > 0 ? e.byte - 1 : 0);
    throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::ParseError, "config must be a JSON object");
  static const std::vector<std::string> known = {
      "m", "u", "A", "B", "W", "Q", "Phi", "X0", "gamma", "delta", "seed", "warmup_steps", "eval_steps",
      "tail_epsilon", "tail_decay", "checkpoints", "kl_ensemble", "kl_horizon"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) throw Error(ErrorCode::ParseError, "unknown field '" + key + "'");
  }
  for (const char* req : {"m", "u", "A", "B", "W", "Q", "Phi", "X0", "gamma"}) {
    if (!j.contains(req)) throw Error(ErrorCode::ParseError, std::string("missing field '") + req + "'");
  }
  const auto count = [&](const char* field) -> std::uint64_t {
    const auto& v = j.at(field);
    if (!v.is_number_integer()) throw Error(ErrorCode::ParseError, std::string("field '") + field + "' must be an integer");
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    const auto s = v.get<std::int64_t>();
    if (s < 0) throw Error(ErrorCode::ValueOutOfRange, std::string("field '") + field + "' must be nonnegative");
    return static_cast<std::uint64_t>(s);
  };
  const auto real = [&](const char* field) {
    const auto& v = j.at(field);
    if (!v.is_number()) throw Error(ErrorCode::ParseError, std::string("field '") + field + "' must be a number");
    return v.get<double>();
  };

  ExperimentConfig cfg;
  const auto m = count("m");
  const auto u = count("u");
  if (m < 1 || u < 1) throw Error(ErrorCode::ValueOutOfRange, "m and u must be positive");
  const auto mi = static_cast<Eigen::Index>(m), ui = static_cast<Eigen::Index>(u);
  cfg.plant.A = detail::parse_matrix(j.at("A"), mi, mi, "A");
  cfg.plant.B = detail::parse_matrix(j.at("B"), mi, ui, "B");
  cfg.plant.W = detail::parse_matrix(j.at("W"), mi, mi, "W");
  cfg.plant.Q = detail::parse_matrix(j.at("Q"), mi, mi, "Q");
  cfg.plant.Phi = detail::parse_matrix(j.at("Phi"), ui, ui, "Phi");
  cfg.plant.X0 = detail::parse_matrix(j.at("X0"), mi, mi, "X0");
  cfg.gamma = real("gamma");
  if (j.contains("delta")) cfg.delta = real("delta");
  if (j.contains("seed")) cfg.seed = count("seed");
  if (j.contains("warmup_steps")) cfg.warmup_steps = count("warmup_steps");
  if (j.contains("eval_steps")) cfg.eval_steps = count("eval_steps");
  if (j.contains("tail_epsilon")) cfg.tail_epsilon = real("tail_epsilon");
  if (j.contains("tail_decay")) cfg.tail_decay = real("tail_decay");
  if (j.contains("kl_ensemble")) cfg.kl_ensemble = count("kl_ensemble");
  if (j.contains("kl_horizon")) cfg.kl_horizon = count("kl_horizon");
  if (j.contains("checkpoints")) {
    const auto& cps = j.at("checkpoints");
    if (!cps.is_array()) throw Error(ErrorCode::ParseError, "field 'checkpoints' must be an array");
    for (const auto& c : cps) {
      if (!c.is_number_integer()) throw Error(ErrorCode::ParseError, "field 'checkpoints' must hold integers");
      if (c.is_number_integer() && !c.is_number_unsigned() && c.get<std::int64_t>() < 1) {
        throw Error(ErrorCode::ValueOutOfRange, "checkpoints must be positive");
      }
      cfg.checkpoints.push_back(c.get<std::uint64_t>());
    }
  }
  finalize_config(cfg);
  return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

inline nlohmann::json config_json(const ExperimentConfig& cfg) {
  return nlohmann::json{
      {"m", cfg.plant.state_dim()},   {"u", cfg.plant.input_dim()},
      {"A", detail::matrix_json(cfg.plant.A)}, {"B", detail::matrix_json(cfg.plant.B)},
      {"W", detail::matrix_json(cfg.plant.W)}, {"Q", detail::matrix_json(cfg.plant.Q)},
      {"Phi", detail::matrix_json(cfg.plant.Phi)}, {"X0", detail::matrix_json(cfg.plant.X0)},
      {"gamma", cfg.gamma},           {"delta", cfg.delta},
      {"seed", cfg.seed},             {"warmup_steps", cfg.warmup_steps},
      {"eval_steps", cfg.eval_steps}, {"tail_epsilon", cfg.tail_epsilon},
      {"tail_decay", cfg.tail_decay}, {"checkpoints", cfg.checkpoints},
      {"kl_ensemble", cfg.kl_ensemble}, {"kl_horizon", cfg.kl_horizon}};
}

// Runs `fn` and re-throws library errors tagged with the pipeline stage.
template <class Fn>
auto staged(const char* stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    if (!e.stage().empty()) throw;
    throw e.with_stage(stage);
  }
}

struct Synthesis {
  LoopSystem system;
  RdfSolution rdf;
};

inline Synthesis synthesize(const ExperimentConfig& cfg) {
  Synthesis s;
  s.system.plant = cfg.plant;
  s.system.gains = staged("dare", [&] { return solve_dare(cfg.plant); });
  s.rdf = staged("rdf", [&] { return solve_rdf(RdfProblem{cfg.plant, s.system.gains, cfg.gamma}); });
  s.system.synthesis = staged("coder", [&] {
    return synthesize_coder(cfg.plant, s.rdf.P, s.rdf.rate_bits, cfg.delta);
  });
  return s;
}

// ln(100) / (-ln rho(A - LC)): steps for the filter error memory to shrink
// a hundredfold.
inline double mixing_estimate(const CoderSynthesis& c) {
  const double rho = spectral_radius(c.R_cl);
  if (rho <= 1e-300) return 1.0;
  return std::log(100.0) / -std::log(rho);
}

inline std::uint64_t burn_in_steps(const CoderSynthesis& c) {
  return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(10.0 * mixing_estimate(c))));
}

// Broad prior used to carry q_t while its histogram is being collected.
inline LatticePmf bootstrap_pmf(std::size_t m, double delta) {
  return LatticePmf(m, delta, 0.5, 0.9, {{Coords(m, 0), 1}});
}

inline constexpr std::uint64_t kWarmupSeedTag = 1;
inline constexpr std::uint64_t kEnsembleSeedTag = 2;

struct WarmupResult {
  LatticePmf pmf;
  std::uint64_t burn_in = 0;
  std::uint64_t samples = 0;
};

inline WarmupResult warmup_pmf(const ExperimentConfig& cfg, const LoopSystem& sys) {
  const std::uint64_t burn = burn_in_steps(sys.synthesis);
  if (cfg.warmup_steps <= burn) {
    throw Error(ErrorCode::InsufficientWarmup, "warmup_steps " + std::to_string(cfg.warmup_steps) +
                                                   " does not exceed the burn-in of " + std::to_string(burn));
  }
  const LatticeCodec bootstrap(bootstrap_pmf(static_cast<std::size_t>(sys.plant.state_dim()), cfg.delta));
  const Trace tr = run_loop(sys, bootstrap, derive_seed(cfg.seed, kWarmupSeedTag), cfg.warmup_steps);
  const Histogram h = histogram_of(tr, burn);
  return WarmupResult{build_pmf(h, cfg.tail_epsilon, cfg.tail_decay, cfg.delta), burn, histogram_total(h)};
}

struct KlPoint {
  std::uint64_t t = 0;
  KlEstimate estimate;
};

inline std::vector<std::uint64_t> kl_checkpoints(std::uint64_t horizon) {
  std::vector<std::uint64_t> out{0};
  for (std::uint64_t t = 1; t <= horizon; t *= 2) out.push_back(t);
  return out;
}

// D(q_t || pmf) at logarithmic t, each from an ensemble of independent loops.
inline std::vector<KlPoint> kl_curve(const ExperimentConfig& cfg, const LoopSystem& sys, const LatticeCodec& codec) {
  const auto cps = kl_checkpoints(cfg.kl_horizon);
  std::vector<Histogram> hists(cps.size());
  const std::uint64_t base = derive_seed(cfg.seed, kEnsembleSeedTag);
  for (std::uint64_t i = 0; i < cfg.kl_ensemble; ++i) {
    const Trace tr = run_loop(sys, codec, derive_seed(base, i), cps.back() + 1);
    for (std::size_t c = 0; c < cps.size(); ++c) ++hists[c][tr.q_at(cps[c])];
  }
  std::vector<KlPoint> out;
  for (std::size_t c = 0; c < cps.size(); ++c) out.push_back({cps[c], kl_estimate(hists[c], codec.model())});
  return out;
}

// Nonincreasing within two standard errors between successive points with
// t >= from_t.
inline bool kl_nonincreasing(const std::vector<KlPoint>& curve, std::uint64_t from_t = 0) {
  const KlPoint* prev = nullptr;
  for (const auto& p : curve) {
    if (p.t < from_t) continue;
    if (prev) {
      const double se = std::hypot(prev->estimate.standard_error, p.estimate.standard_error);
      if (p.estimate.bits > prev->estimate.bits + 2.0 * se) return false;
    }
    prev = &p;
  }
  return true;
}

struct QuantizationStats {
  std::uint64_t samples = 0;
  std::vector<double> ks;              // per component
  double ks_critical = 0.0;
  double max_abs_corr_ve = 0.0;        // over all (i, j)
  double max_abs_autocorr = 0.0;       // lags 1..10, all (i, j)
  double corr_threshold = 0.0;         // 4 / sqrt(T)
  std::vector<double> second_moment_rel_error;  // diag of E[v v^T] vs Delta^2/12
  bool pass = false;
};

inline QuantizationStats quantization_stats(const Trace& tr, std::uint64_t first = 0) {
  QuantizationStats s;
  const double half = tr.delta / 2.0;
  std::vector<std::vector<double>> v(tr.m), e(tr.m);
  for (std::size_t i = 0; i < tr.m; ++i) {
    v[i] = column(tr.v, tr.m, i, first);
    e[i] = column(tr.e, tr.m, i, first);
  }
  s.samples = v.empty() ? 0 : v[0].size();
  s.ks_critical = ks_critical_001(static_cast<std::size_t>(s.samples));
  s.corr_threshold = 4.0 / std::sqrt(static_cast<double>(s.samples));
  bool ok = true;
  const Matrix vv = second_moment(tr.v, tr.m, first);
  const double target = tr.delta * tr.delta / 12.0;
  for (std::size_t i = 0; i < tr.m; ++i) {
    s.ks.push_back(ks_uniform(v[i], -half, half));
    ok = ok && s.ks.back() < s.ks_critical;
    s.second_moment_rel_error.push_back(std::abs(vv(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) - target) / target);
    for (std::size_t j = 0; j < tr.m; ++j) {
      s.max_abs_corr_ve = std::max(s.max_abs_corr_ve, std::abs(correlation(v[i], e[j])));
      for (std::size_t lag = 1; lag <= 10; ++lag) {
        s.max_abs_autocorr = std::max(s.max_abs_autocorr, std::abs(correlation(v[i], v[j], lag)));
      }
    }
  }
  s.pass = ok && s.max_abs_corr_ve < s.corr_threshold && s.max_abs_autocorr < s.corr_threshold;
  return s;
}

struct PassFlags {
  bool bitrate_sandwich = false;
  bool control_budget = false;
  bool entropy_bound = false;
  bool kl_monotone = false;
  bool filter_consistency = false;
  bool quantization_law = false;

  bool all() const {
    return bitrate_sandwich && control_budget && entropy_bound && kl_monotone && filter_consistency && quantization_law;
  }
};

// Sandwich slack per state dimension, and the other fixed thresholds.
inline constexpr double kBitrateSlackPerDim = 0.05;
inline constexpr double kCostSlack = 1.05;
inline constexpr double kEntropySlack = 0.1;
inline constexpr double kCovarianceTolerance = 0.05;

struct Report {
  double gamma = 0.0;
  std::size_t m = 0;
  double eta = 0.0;
  double rate_lower_bits = 0.0;
  double rate_ceiling_bits = 0.0;
  double measured_bitrate_bits = 0.0;
  double bitrate_standard_error = 0.0;
  double measured_cost = 0.0;
  double cost_standard_error = 0.0;
  double entropy_estimate_bits = 0.0;
  double innovation_cov_rel_error = 0.0;
  double spectral_radius_filter = 0.0;
  double max_recursion_residual = 0.0;
  std::uint64_t burn_in = 0;
  std::uint64_t warmup_samples = 0;
  std::size_t pmf_support = 0;
  std::uint64_t steps = 0;
  std::uint64_t seed = 0;
  std::vector<KlPoint> kl_curve;
  std::vector<Checkpoint> checkpoints;
  bool running_average_converged = true;
  QuantizationStats quantization;
  PassFlags pass_flags;
};

inline nlohmann::json report_json(const Report& r) {
  nlohmann::json kl = nlohmann::json::array();
  for (const auto& p : r.kl_curve) {
    kl.push_back({{"t", p.t}, {"kl_bits", p.estimate.bits}, {"standard_error", p.estimate.standard_error},
                  {"samples", p.estimate.samples}, {"support", p.estimate.support}});
  }
  nlohmann::json cps = nlohmann::json::array();
  for (const auto& c : r.checkpoints) {
    cps.push_back({{"steps", c.steps}, {"mean_bitrate_bits", c.mean_bitrate}, {"mean_cost", c.mean_cost}});
  }
  const auto& q = r.quantization;
  return nlohmann::json{
      {"gamma", r.gamma},
      {"m", r.m},
      {"eta", r.eta},
      {"rate_lower_bits", r.rate_lower_bits},
      {"rate_ceiling_bits", r.rate_ceiling_bits},
      {"measured_bitrate_bits", r.measured_bitrate_bits},
      {"bitrate_standard_error", r.bitrate_standard_error},
      {"measured_cost", r.measured_cost},
      {"cost_standard_error", r.cost_standard_error},
      {"entropy_estimate_bits", r.entropy_estimate_bits},
      {"innovation_cov_rel_error", r.innovation_cov_rel_error},
      {"spectral_radius_filter", r.spectral_radius_filter},
      {"max_recursion_residual", r.max_recursion_residual},
      {"burn_in_steps", r.burn_in},
      {"warmup_samples", r.warmup_samples},
      {"pmf_support", r.pmf_support},
      {"kl_curve", kl},
      {"checkpoints", cps},
      {"running_average_converged", r.running_average_converged},
      {"quantization",
       {{"samples", q.samples}, {"ks", q.ks}, {"ks_critical", q.ks_critical},
        {"max_abs_corr_ve", q.max_abs_corr_ve}, {"max_abs_autocorr", q.max_abs_autocorr},
        {"corr_threshold", q.corr_threshold}, {"second_moment_rel_error", q.second_moment_rel_error}}},
      {"summary", {{"mean_bitrate_bits", r.measured_bitrate_bits}, {"mean_cost", r.measured_cost}, {"T", r.steps}, {"seed", r.seed}}},
      {"pass_flags",
       {{"bitrate_sandwich", r.pass_flags.bitrate_sandwich},
        {"control_budget", r.pass_flags.control_budget},
        {"entropy_bound", r.pass_flags.entropy_bound},
        {"kl_monotone", r.pass_flags.kl_monotone},
        {"filter_consistency", r.pass_flags.filter_consistency},
        {"quantization_law", r.pass_flags.quantization_law}}},
      {"pass", r.pass_flags.all()},
  };
}

struct ExperimentOutcome {
  ExperimentConfig config;
  Synthesis synthesis;
  std::optional<LatticePmf> pmf;
  Trace trace;
  Report report;
};

// Flags non-convergence when the last checkpoint and the one a decade
// earlier differ by more than 1% in either running average.
inline bool running_average_converged(const std::vector<Checkpoint>& cps) {
  if (cps.size() < 2) return true;
  const Checkpoint& last = cps.back();
  const Checkpoint* earlier = nullptr;
  for (const auto& c : cps) {
    if (c.steps * 10 <= last.steps) earlier = &c;
  }
  if (!earlier) earlier = &cps[cps.size() - 2];
  const auto rel = [](double a, double b) { return std::abs(a - b) / std::max(std::abs(a), 1e-12); };
  return rel(last.mean_bitrate, earlier->mean_bitrate) <= 0.01 && rel(last.mean_cost, earlier->mean_cost) <= 0.01;
}

inline ExperimentOutcome run_experiment(const ExperimentConfig& input) {
  ExperimentOutcome out;
  out.config = input;
  finalize_config(out.config);
  const ExperimentConfig& cfg = out.config;
  out.synthesis = synthesize(cfg);
  const LoopSystem& sys = out.synthesis.system;

  const WarmupResult warm = staged("warmup", [&] { return warmup_pmf(cfg, sys); });
  out.pmf = warm.pmf;
  const LatticeCodec codec(warm.pmf);
  LoopOptions opt;
  opt.checkpoints = cfg.checkpoints;
  out.trace = staged("eval", [&] { return run_loop(sys, codec, cfg.seed, cfg.eval_steps, opt); });
  const Trace& tr = out.trace;

  Report& r = out.report;
  r.gamma = cfg.gamma;
  r.m = static_cast<std::size_t>(cfg.plant.state_dim());
  r.eta = eta_bits();
  r.rate_lower_bits = out.synthesis.rdf.rate_bits;
  r.rate_ceiling_bits = r.rate_lower_bits + 2.0 + static_cast<double>(r.m) * r.eta;
  r.measured_bitrate_bits = tr.mean_bitrate;
  r.measured_cost = tr.mean_cost;
  {
    std::vector<double> lens(tr.length_bits.begin(), tr.length_bits.end());
    r.bitrate_standard_error = batch_mean_standard_error(lens);
    r.cost_standard_error = batch_mean_standard_error(tr.stage_cost);
  }
  r.burn_in = warm.burn_in;
  r.warmup_samples = warm.samples;
  r.pmf_support = warm.pmf.core().size();
  r.steps = tr.steps;
  r.seed = tr.seed;
  r.spectral_radius_filter = spectral_radius(sys.synthesis.R_cl);
  r.max_recursion_residual = tr.max_recursion_residual;
  r.checkpoints = tr.checkpoints;
  r.running_average_converged = running_average_converged(tr.checkpoints);

  const std::uint64_t first = std::min<std::uint64_t>(warm.burn_in, tr.steps - 1);
  r.entropy_estimate_bits = plugin_entropy(histogram_of(tr, first));
  const Matrix cov = second_moment(tr.e, tr.m, first);
  r.innovation_cov_rel_error = (cov - sys.synthesis.P_plus).norm() / sys.synthesis.P_plus.norm();
  r.quantization = quantization_stats(tr);
  r.kl_curve = staged("kl", [&] { return kl_curve(cfg, sys, codec); });

  const double slack = kBitrateSlackPerDim * static_cast<double>(r.m);
  r.pass_flags.bitrate_sandwich = r.measured_bitrate_bits >= r.rate_lower_bits - slack &&
                                  r.measured_bitrate_bits <= r.rate_ceiling_bits + slack;
  r.pass_flags.control_budget = r.measured_cost <= kCostSlack * r.gamma;
  r.pass_flags.entropy_bound = r.entropy_estimate_bits <= r.rate_lower_bits + static_cast<double>(r.m) * r.eta + kEntropySlack;
  r.pass_flags.kl_monotone = kl_nonincreasing(r.kl_curve);
  r.pass_flags.filter_consistency = r.innovation_cov_rel_error <= kCovarianceTolerance;
  r.pass_flags.quantization_law = r.quantization.pass;
  return out;
}

// Writes trace.csv, report.json, summary.json and pmf.bin into `dir`.
inline void write_artifacts(const ExperimentOutcome& out, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string());
  const auto open = [&](const char* name) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw Error(ErrorCode::IoError, "cannot write " + (dir / name).string());
    return f;
  };
  {
    auto f = open("trace.csv");
    write_trace_csv(f, out.trace);
  }
  {
    auto f = open("report.json");
    f << report_json(out.report).dump(2) << '\n';
  }
  {
    auto f = open("summary.json");
    f << trace_summary_json(out.trace).dump(2) << '\n';
  }
  if (out.pmf) {
    auto f = open("pmf.bin");
    write_pmf(f, *out.pmf);
  }
}

struct InvariantCheck {
  std::string name;
  bool pass = false;
  double value = 0.0;
};

// Synthesis-side invariants of a config, without running the simulator.
inline std::vector<InvariantCheck> invariant_suite(const ExperimentConfig& cfg) {
  std::vector<InvariantCheck> out;
  const auto add = [&](std::string name, bool pass, double value) { out.push_back({std::move(name), pass, value}); };
  validate_plant(cfg.plant);
  const Synthesis s = synthesize(cfg);
  const auto& g = s.system.gains;
  const auto& c = s.system.synthesis;
  const PlantModel& p = cfg.plant;

  const double res = detail::dare_residual(p, g.S);
  add("dare_residual", res < kDareResidualTol * (1.0 + g.S.norm()), res);
  const double rho_ctrl = spectral_radius(p.A + p.B * g.K);
  add("closed_loop_stable", rho_ctrl < 1.0 - kStabilityMargin, rho_ctrl);

  const SolutionCheck chk = check_solution(RdfProblem{p, g, cfg.gamma}, s.rdf);
  add("rdf_residuals", chk.max_violation() <= 1e-8, chk.max_violation());
  add("rdf_duality_gap", s.rdf.dual_gap <= 1e-6, s.rdf.dual_gap);

  const double order = min_sym_eigenvalue(c.P_plus - c.P_hat);
  add("covariance_ordering", order >= -1e-10 * (1.0 + c.P_plus.norm()), order);
  const double rho_f = spectral_radius(c.R_cl);
  add("filter_stable", rho_f < 1.0 - kStabilityMargin, rho_f);
  const auto gelfand = gelfand_sequence(c.R_cl, 50, 60);
  add("gelfand_bound", gelfand.back() < 1.0, gelfand.back());

  const std::size_t m = static_cast<std::size_t>(p.state_dim());
  const double gap = (s.rdf.rate_bits + 2.0 + static_cast<double>(m) * eta_bits()) - s.rdf.rate_bits;
  add("ceiling_gap", std::abs(gap - (2.0 + static_cast<double>(m) * eta_bits())) <= 1e-12, gap);

  // Bootstrap code: prefix-freeness and round trip over its first symbols.
  const LatticeCodec codec(bootstrap_pmf(m, cfg.delta));
  std::vector<Codeword> words;
  std::string stream;
  for (std::uint64_t i = 0; i < 200; ++i) {
    words.push_back(codec.encode(enumerate_point(i, m)));
    stream += words.back().bits;
  }
  bool prefix_free = true;
  for (std::size_t a = 0; a < words.size() && prefix_free; ++a) {
    for (std::size_t b = 0; b < words.size(); ++b) {
      if (a != b && words[b].bits.starts_with(words[a].bits)) {
        prefix_free = false;
        break;
      }
    }
  }
  add("codec_prefix_free", prefix_free, static_cast<double>(words.size()));
  bool round_trip = true;
  std::size_t pos = 0;
  for (std::uint64_t i = 0; i < 200 && round_trip; ++i) {
    const Decoded d = codec.decode(stream, pos);
    round_trip = d.symbol == enumerate_point(i, m);
    pos += d.consumed;
  }
  add("codec_round_trip", round_trip && pos == stream.size(), static_cast<double>(pos));
  return out;
}

struct SweepRow {
  double gamma = 0.0;
  std::optional<Report> report;
  std::optional<Error> error;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  bool monotone = true;  // measured bitrate nonincreasing within 2 SE
};

// One experiment per gamma; failures are confined to their row. Points run
// on up to hardware_concurrency threads.
inline SweepResult sweep(const ExperimentConfig& cfg, const std::vector<double>& gammas) {
  for (std::size_t i = 1; i < gammas.size(); ++i) {
    if (!(gammas[i] > gammas[i - 1])) throw Error(ErrorCode::BadParameter, "gammas must be strictly increasing");
  }
  SweepResult res;
  res.rows.resize(gammas.size());
  const auto run_one = [&](std::size_t i) {
    SweepRow& row = res.rows[i];
    row.gamma = gammas[i];
    ExperimentConfig c = cfg;
    c.gamma = gammas[i];
    try {
      row.report = run_experiment(c).report;
    } catch (const Error& e) {
      row.error = e;
    }
  };
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(std::thread::hardware_concurrency(), gammas.size()));
  if (workers == 1) {
    for (std::size_t i = 0; i < gammas.size(); ++i) run_one(i);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < gammas.size(); i += workers) run_one(i);
      });
    }
    for (auto& th : pool) th.join();
  }
  const Report* prev = nullptr;
  for (const auto& row : res.rows) {
    if (!row.report) continue;
    if (prev) {
      const double se = std::hypot(prev->bitrate_standard_error, row.report->bitrate_standard_error);
      if (row.report->measured_bitrate_bits > prev->measured_bitrate_bits + 2.0 * se) res.monotone = false;
    }
    prev = &*row.report;
  }
  return res;
}

inline void write_sweep_csv(std::ostream& os, const SweepResult& res) {
  os << "gamma,rate_lower,rate_ceiling,measured_bitrate,measured_cost,entropy_est,pass\n";
  for (const auto& row : res.rows) {
    std::string line;
    detail::append_number(line, row.gamma);
    if (row.report) {
      const Report& r = *row.report;
      for (double v : {r.rate_lower_bits, r.rate_ceiling_bits, r.measured_bitrate_bits, r.measured_cost, r.entropy_estimate_bits}) {
        line += ',';
        detail::append_number(line, v);
      }
      line += r.pass_flags.all() ? ",1" : ",0";
    } else {
      line += ",,,,,,0";
    }
    os << line << '\n';
  }
}

}  // namespace lqgcode
