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
#include <lqgcode/linalg.hpp>
#include <lqgcode/rational.hpp>
#include <lqgcode/sfe_codec.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace lqgcode {

// Column i of a step-major series of the given width, from step `first`.
inline std::vector<double> column(const std::vector<double>& series, std::size_t width, std::size_t i,
                                  std::uint64_t first = 0) {
  std::vector<double> out;
  const std::size_t rows = series.size() / width;
  out.reserve(rows - std::min<std::size_t>(rows, first));
  for (std::size_t t = static_cast<std::size_t>(first); t < rows; ++t) out.push_back(series[t * width + i]);
  return out;
}

// Kolmogorov-Smirnov distance to Uniform[lo, hi).
inline double ks_uniform(std::vector<double> values, double lo, double hi) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  double d = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double f = std::clamp((values[i] - lo) / (hi - lo), 0.0, 1.0);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

// Asymptotic KS critical value at level 0.01.
inline double ks_critical_001(std::size_t n) { return 1.63 / std::sqrt(static_cast<double>(n)); }

inline double mean(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s += v;
  return a.empty() ? 0.0 : s / static_cast<double>(a.size());
}

// Pearson correlation of a[k..] against b[..n-k] (a leads by `lag`).
inline double correlation(std::span<const double> a, std::span<const double> b, std::size_t lag = 0) {
  const std::size_t n = std::min(a.size(), b.size());
  if (n <= lag + 1) return 0.0;
  const std::size_t len = n - lag;
  const auto as = a.subspan(lag, len);
  const auto bs = b.subspan(0, len);
  const double ma = mean(as), mb = mean(bs);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    const double da = as[i] - ma, db = bs[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa <= 0.0 || sbb <= 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

// E[z z^T] of a step-major series from step `first` (no centering).
inline Matrix second_moment(const std::vector<double>& series, std::size_t width, std::uint64_t first = 0) {
  Matrix acc = Matrix::Zero(static_cast<Eigen::Index>(width), static_cast<Eigen::Index>(width));
  const std::size_t rows = series.size() / width;
  std::size_t n = 0;
  for (std::size_t t = static_cast<std::size_t>(first); t < rows; ++t, ++n) {
    Eigen::Map<const Vector> z(series.data() + t * width, static_cast<Eigen::Index>(width));
    acc.noalias() += z * z.transpose();
  }
  return n ? Matrix(acc / static_cast<double>(n)) : acc;
}

// Standard error of a time average by non-overlapping batch means.
inline double batch_mean_standard_error(std::span<const double> series, std::size_t batches = 100) {
  if (series.size() < 2 * batches) return std::numeric_limits<double>::quiet_NaN();
  const std::size_t len = series.size() / batches;
  std::vector<double> means(batches);
  for (std::size_t b = 0; b < batches; ++b) means[b] = mean(series.subspan(b * len, len));
  const double mu = mean(means);
  double ss = 0.0;
  for (double v : means) ss += (v - mu) * (v - mu);
  return std::sqrt(ss / static_cast<double>(batches - 1) / static_cast<double>(batches));
}

inline Histogram histogram_of(const Trace& tr, std::uint64_t first = 0) {
  Histogram h;
  for (std::uint64_t t = first; t < tr.steps; ++t) ++h[tr.q_at(t)];
  return h;
}

inline std::uint64_t histogram_total(const Histogram& h) {
  std::uint64_t n = 0;
  for (const auto& kv : h) n += kv.second;
  return n;
}

// Plug-in entropy of the empirical law, in bits.
inline double plugin_entropy(const Histogram& h) {
  const double n = static_cast<double>(histogram_total(h));
  double acc = 0.0;
  for (const auto& kv : h) {
    const double f = static_cast<double>(kv.second) / n;
    acc -= f * std::log2(f);
  }
  return acc;
}

struct KlEstimate {
  double bits = 0.0;
  double standard_error = 0.0;
  std::uint64_t samples = 0;
  std::size_t support = 0;
};

// Plug-in D(f_hat || p) in bits over the observed support. The standard
// error combines the delta-method term with the chi-square spread
// sqrt(2 (K - 1)) / (2 N ln 2) that dominates when the laws coincide.
template <ProbabilityModel Model>
KlEstimate kl_estimate(const Histogram& h, const Model& model) {
  KlEstimate out;
  if (h.empty()) throw Error(ErrorCode::EmptyHistogram, "histogram is empty");
  out.samples = histogram_total(h);
  out.support = h.size();
  const double n = static_cast<double>(out.samples);
  double m1 = 0.0, m2 = 0.0;
  for (const auto& [k, c] : h) {
    const double f = static_cast<double>(c) / n;
    const Rational p = model.mass(k);
    if (p <= 0) throw Error(ErrorCode::ZeroMass, "observed symbol has zero model mass");
    const double ratio = std::log2(f) - log2_rational(p);
    m1 += f * ratio;
    m2 += f * ratio * ratio;
  }
  out.bits = m1;
  const double delta_var = std::max(0.0, m2 - m1 * m1) / n;
  const double chi = std::sqrt(2.0 * static_cast<double>(out.support > 0 ? out.support - 1 : 0)) /
                     (2.0 * n * std::log(2.0));
  out.standard_error = std::sqrt(delta_var + chi * chi);
  return out;
}

}  // namespace lqgcode
