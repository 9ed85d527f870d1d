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

#include <lqgcode/control_synthesis.hpp>
#include <lqgcode/counter_rng.hpp>
#include <lqgcode/dithered_quantizer.hpp>
#include <lqgcode/error.hpp>
#include <lqgcode/linalg.hpp>
#include <lqgcode/sfe_codec.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace lqgcode {

// Everything both loop ends agree on before the first step.
struct LoopSystem {
  PlantModel plant;
  ControllerGains gains;
  CoderSynthesis synthesis;
};

// One end's copy of the time-invariant Kalman filter.
struct LoopEndState {
  Vector x_pred;  // estimate of x_t given measurements before t
  Vector x_post;  // estimate of x_t after the measurement at t
  std::uint64_t t = 0;

  static LoopEndState initial(Eigen::Index m) {
    // The filter starts from a zero prediction.
    return LoopEndState{Vector::Zero(m), Vector::Zero(m), 0};
  }

  friend bool operator==(const LoopEndState& a, const LoopEndState& b) {
    return a.t == b.t && a.x_pred.size() == b.x_pred.size() && a.x_post.size() == b.x_post.size() &&
           std::equal(a.x_pred.data(), a.x_pred.data() + a.x_pred.size(), b.x_pred.data()) &&
           std::equal(a.x_post.data(), a.x_post.data() + a.x_post.size(), b.x_post.data());
  }
};

namespace detail {

// Measurement update from the received quantization, certainty-equivalent
// input, and prediction for t + 1. Shared by both ends so their arithmetic is
// identical.
inline Vector filter_update(LoopEndState& s, const LatticePoint& q, const Vector& d, const LoopSystem& sys) {
  const CoderSynthesis& c = sys.synthesis;
  const Vector reconstruction = q.value() - d;
  const Vector predicted_meas = c.C * s.x_pred;
  const Vector y = reconstruction + predicted_meas;
  s.x_post = s.x_pred + c.J * (y - predicted_meas);
  Vector u = sys.gains.K * s.x_post;
  s.x_pred = sys.plant.A * s.x_post + sys.plant.B * u;
  ++s.t;
  return u;
}

}  // namespace detail

struct EncoderStep {
  Codeword codeword;
  LatticePoint q;
  Vector e;  // x_t - prediction
  Vector u;  // input the decoder will apply
};

template <ProbabilityModel Model>
EncoderStep encoder_step(LoopEndState& state, const Vector& x, const Vector& d, const LoopSystem& sys,
                         const SfeCodec<Model>& codec) {
  EncoderStep out;
  out.e = x - state.x_pred;
  out.q = quantize(sys.synthesis.C * out.e + d, sys.synthesis.Delta);
  out.codeword = codec.encode(out.q);
  out.u = detail::filter_update(state, out.q, d, sys);
  return out;
}

struct DecoderStep {
  LatticePoint q;
  Vector u;
};

template <ProbabilityModel Model>
DecoderStep decoder_step(LoopEndState& state, std::string_view codeword, const Vector& d, const LoopSystem& sys,
                         const SfeCodec<Model>& codec) {
  const Decoded dec = codec.decode(codeword);
  if (dec.consumed != codeword.size()) throw Error(ErrorCode::MalformedCodeword, "trailing bits after codeword");
  DecoderStep out;
  out.q = LatticePoint{dec.symbol, sys.synthesis.Delta};
  out.u = detail::filter_update(state, out.q, d, sys);
  return out;
}

struct Checkpoint {
  std::uint64_t steps = 0;
  double mean_bitrate = 0.0;
  double mean_cost = 0.0;
};

struct LoopOptions {
  bool lockstep_audit = true;
  bool zero_initial_state = false;
  bool record_codewords = false;
  std::vector<std::uint64_t> checkpoints;
};

// Per-step series stored row-major (step-major). `e`, `d`, `q`, `v` have m
// columns; `x` is x_t; `u` has the input dimension.
struct Trace {
  std::size_t m = 0;
  std::size_t n_inputs = 0;
  std::uint64_t seed = 0;
  std::uint64_t steps = 0;
  double delta = 1.0;
  std::vector<double> x, u, e, d, v, stage_cost;
  std::vector<std::int64_t> q;
  std::vector<std::uint32_t> length_bits;
  std::vector<std::string> codewords;
  std::vector<Checkpoint> checkpoints;
  double mean_bitrate = 0.0;
  double mean_cost = 0.0;
  double max_recursion_residual = 0.0;
  double max_abs_v = 0.0;

  double at(const std::vector<double>& series, std::uint64_t t, std::size_t i, std::size_t width) const {
    return series[static_cast<std::size_t>(t) * width + i];
  }
  double e_at(std::uint64_t t, std::size_t i) const { return at(e, t, i, m); }
  double v_at(std::uint64_t t, std::size_t i) const { return at(v, t, i, m); }
  Coords q_at(std::uint64_t t) const {
    const auto* p = q.data() + static_cast<std::size_t>(t) * m;
    return Coords(p, p + m);
  }
};

// Simulates the plant with encoder and decoder in lockstep. Process noise,
// dither and the initial state come from independent counter-based
// substreams of `seed`.
template <ProbabilityModel Model>
Trace run_loop(const LoopSystem& sys, const SfeCodec<Model>& codec, std::uint64_t seed, std::uint64_t horizon,
               const LoopOptions& opt = {}) {
  if (horizon < 1) throw Error(ErrorCode::BadParameter, "horizon must be at least one step");
  const PlantModel& plant = sys.plant;
  const Eigen::Index m = plant.state_dim();
  const Eigen::Index nu = plant.input_dim();
  const auto mz = static_cast<std::size_t>(m);
  const auto nuz = static_cast<std::size_t>(nu);
  const DitherStream dither(seed, sys.synthesis.Delta, mz);
  const Matrix w_root = psd_sqrt(plant.W);
  const Matrix x0_root = psd_sqrt(plant.X0);
  const auto gaussian = [&](Stream stream, std::uint64_t t) {
    Vector z(m);
    for (Eigen::Index i = 0; i < m; ++i) z(i) = standard_normal(counter_bits(seed, stream, t, static_cast<std::uint64_t>(i)));
    return z;
  };

  Trace tr;
  tr.m = mz;
  tr.n_inputs = nuz;
  tr.seed = seed;
  tr.steps = horizon;
  tr.delta = sys.synthesis.Delta;
  const auto T = static_cast<std::size_t>(horizon);
  tr.x.resize(T * mz);
  tr.u.resize(T * nuz);
  tr.e.resize(T * mz);
  tr.d.resize(T * mz);
  tr.v.resize(T * mz);
  tr.q.resize(T * mz);
  tr.stage_cost.resize(T);
  tr.length_bits.resize(T);
  if (opt.record_codewords) tr.codewords.resize(T);

  std::vector<std::uint64_t> checkpoints = opt.checkpoints;
  std::sort(checkpoints.begin(), checkpoints.end());
  std::size_t next_cp = 0;

  LoopEndState enc = LoopEndState::initial(m);
  LoopEndState dec = LoopEndState::initial(m);
  Vector x = opt.zero_initial_state ? Vector::Zero(m) : Vector(x0_root * gaussian(Stream::InitialState, 0));
  Vector expected_e;  // R e_t - L v_t + w_t from the previous step
  double bits_sum = 0.0, cost_sum = 0.0;

  for (std::uint64_t t = 0; t < horizon; ++t) {
    const Vector d = dither.at(t);
    const EncoderStep es = encoder_step(enc, x, d, sys, codec);
    const DecoderStep ds = decoder_step(dec, es.codeword.bits, d, sys, codec);
    if (opt.lockstep_audit && (!(enc == dec) || ds.q.coords != es.q.coords)) {
      throw Error(ErrorCode::DesyncDetected, "encoder and decoder diverged at step " + std::to_string(t));
    }
    if (t > 0) {
      const double scale = 1.0 + es.e.lpNorm<Eigen::Infinity>();
      tr.max_recursion_residual = std::max(tr.max_recursion_residual, (es.e - expected_e).lpNorm<Eigen::Infinity>() / scale);
    }
    const Vector w = w_root * gaussian(Stream::ProcessNoise, t);
    const Vector x_next = plant.A * x + plant.B * ds.u + w;
    const Vector v = es.q.value() - d - sys.synthesis.C * es.e;
    expected_e = sys.synthesis.R_cl * es.e - sys.synthesis.L * v + w;

    const auto ts = static_cast<std::size_t>(t);
    for (std::size_t i = 0; i < mz; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      tr.x[ts * mz + i] = x(ii);
      tr.e[ts * mz + i] = es.e(ii);
      tr.d[ts * mz + i] = d(ii);
      tr.v[ts * mz + i] = v(ii);
      tr.q[ts * mz + i] = es.q.coords[i];
      tr.max_abs_v = std::max(tr.max_abs_v, std::abs(v(ii)));
    }
    for (std::size_t i = 0; i < nuz; ++i) tr.u[ts * nuz + i] = ds.u(static_cast<Eigen::Index>(i));
    const double stage = x_next.dot(plant.Q * x_next) + ds.u.dot(plant.Phi * ds.u);
    tr.stage_cost[ts] = stage;
    tr.length_bits[ts] = static_cast<std::uint32_t>(es.codeword.length());
    if (opt.record_codewords) tr.codewords[ts] = es.codeword.bits;
    bits_sum += static_cast<double>(es.codeword.length());
    cost_sum += stage;
    while (next_cp < checkpoints.size() && checkpoints[next_cp] <= t + 1) {
      if (checkpoints[next_cp] == t + 1) {
        const auto n = static_cast<double>(t + 1);
        tr.checkpoints.push_back({t + 1, bits_sum / n, cost_sum / n});
      }
      ++next_cp;
    }
    x = x_next;
  }
  tr.mean_bitrate = bits_sum / static_cast<double>(horizon);
  tr.mean_cost = cost_sum / static_cast<double>(horizon);
  return tr;
}

namespace detail {

inline void append_number(std::string& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

inline void append_number(std::string& out, std::int64_t v) {
  char buf[24];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

}  // namespace detail

inline std::string trace_csv_header(const Trace& tr) {
  std::string h = "t";
  const auto cols = [&h](const char* name, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) h += "," + std::string(name) + "_" + std::to_string(i);
  };
  cols("x", tr.m);
  cols("u", tr.n_inputs);
  cols("e", tr.m);
  cols("q", tr.m);
  h += ",len_bits,stage_cost";
  return h;
}

// Shortest round-trip formatting, so equal traces give equal bytes.
inline void write_trace_csv(std::ostream& os, const Trace& tr) {
  os << trace_csv_header(tr) << '\n';
  std::string line;
  for (std::uint64_t t = 0; t < tr.steps; ++t) {
    const auto ts = static_cast<std::size_t>(t);
    line.clear();
    detail::append_number(line, static_cast<std::int64_t>(t));
    for (std::size_t i = 0; i < tr.m; ++i) { line += ','; detail::append_number(line, tr.x[ts * tr.m + i]); }
    for (std::size_t i = 0; i < tr.n_inputs; ++i) { line += ','; detail::append_number(line, tr.u[ts * tr.n_inputs + i]); }
    for (std::size_t i = 0; i < tr.m; ++i) { line += ','; detail::append_number(line, tr.e[ts * tr.m + i]); }
    for (std::size_t i = 0; i < tr.m; ++i) { line += ','; detail::append_number(line, tr.q[ts * tr.m + i]); }
    line += ',';
    detail::append_number(line, static_cast<std::int64_t>(tr.length_bits[ts]));
    line += ',';
    detail::append_number(line, tr.stage_cost[ts]);
    line += '\n';
    os << line;
  }
  if (!os) throw Error(ErrorCode::IoError, "failed to write trace");
}

inline nlohmann::json trace_summary_json(const Trace& tr) {
  return nlohmann::json{{"mean_bitrate_bits", tr.mean_bitrate},
                        {"mean_cost", tr.mean_cost},
                        {"T", tr.steps},
                        {"seed", tr.seed}};
}

}  // namespace lqgcode
