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

#include "support.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace lqgcode;

namespace {

LatticePmf reference_pmf() {
  return build_pmf({{{0}, 600}, {{1}, 180}, {{-1}, 150}, {{2}, 40}, {{-2}, 30}}, 1e-3, 0.5);
}

}  // namespace

TEST(KlEstimate, PointMassOnHalf) {
  const FinitePmf pmf(1, {{{0}, Rational(1, 2)}, {{1}, Rational(1, 2)}});
  const auto kl = kl_estimate({{{0}, 37}}, pmf);
  EXPECT_DOUBLE_EQ(kl.bits, 1.0);
  EXPECT_EQ(kl.samples, 37u);
  EXPECT_EQ(kl.support, 1u);
}

TEST(KlEstimate, ProportionalCountsGiveNearZero) {
  const LatticePmf pmf = reference_pmf();
  std::vector<std::pair<double, Coords>> ranked;
  for (std::uint64_t i = 0; i < 4001; ++i) {
    Coords k = enumerate_point(i, 1);
    ranked.emplace_back(pmf.mass_double(k), k);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  Histogram h;
  for (std::size_t i = 0; i < 1000; ++i) {
    const auto c = static_cast<std::uint64_t>(std::llround(ranked[i].first * 1e12));
    if (c > 0) h[ranked[i].second] = c;
  }
  EXPECT_LE(std::abs(kl_estimate(h, pmf).bits), 1e-3);
}

TEST(KlEstimate, SamplesFromModelHaveSmallDivergence) {
  const LatticePmf pmf = reference_pmf();
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Histogram h;
  for (int i = 0; i < 1000000; ++i) ++h[pmf.locate(exact_rational(u(rng)))];
  const auto kl = kl_estimate(h, pmf);
  EXPECT_LE(kl.bits, 0.02);
  EXPECT_GT(kl.standard_error, 0.0);
}

TEST(KlEstimate, EmptyHistogramIsRejected) {
  EXPECT_THROW(kl_estimate({}, reference_pmf()), Error);
}

TEST(PluginEntropy, UniformAndPointMass) {
  EXPECT_DOUBLE_EQ(plugin_entropy({{{0}, 5}, {{1}, 5}, {{2}, 5}, {{3}, 5}}), 2.0);
  EXPECT_DOUBLE_EQ(plugin_entropy({{{0, 0}, 9}}), 0.0);
}

TEST(KsUniform, KnownStatistic) {
  EXPECT_DOUBLE_EQ(ks_uniform({0.5}, 0.0, 1.0), 0.5);
  EXPECT_NEAR(ks_uniform({0.125, 0.375, 0.625, 0.875}, 0.0, 1.0), 0.125, 1e-15);
  EXPECT_NEAR(ks_uniform({-1.0, 1.0}, -1.0, 1.0), 0.5, 1e-15);
}

TEST(Correlation, LaggedSeries) {
  std::vector<double> a(1000);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> z;
  for (auto& v : a) v = z(rng);
  std::vector<double> b(a.begin() + 3, a.end());
  EXPECT_NEAR(correlation(a, a), 1.0, 1e-12);
  // b[t] == a[t + 3], so pairing a[t + 3] with b[t] is exact.
  EXPECT_NEAR(correlation(a, b, 3), 1.0, 1e-12);
  EXPECT_NEAR(correlation(a, b, 0), 0.0, 0.15);
  EXPECT_NEAR(correlation(a, a, 1), 0.0, 0.15);
}

TEST(BatchMeans, IidSeriesMatchesClassicalError) {
  std::vector<double> s(200000);
  std::mt19937_64 rng(6);
  std::normal_distribution<double> z(0.0, 2.0);
  for (auto& v : s) v = z(rng);
  const double se = batch_mean_standard_error(s);
  EXPECT_NEAR(se / (2.0 / std::sqrt(200000.0)), 1.0, 0.3);
  EXPECT_TRUE(std::isnan(batch_mean_standard_error(std::vector<double>(10, 1.0))));
}

TEST(SecondMoment, ColumnsAndBurnIn) {
  const std::vector<double> s = {100.0, 0.0, 1.0, 2.0, -1.0, 2.0};
  const Matrix m = second_moment(s, 2, 1);
  EXPECT_DOUBLE_EQ(m(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(m(1, 1), 4.0);
  EXPECT_DOUBLE_EQ(m(0, 1), 0.0);
  EXPECT_EQ(column(s, 2, 1, 1), (std::vector<double>{2.0, 2.0}));
}
