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

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

}  // namespace

// Published Random123 known-answer vectors for Philox4x32-10.
TEST(Philox, KnownAnswers) {
  using C = Philox4x32::Counter;
  EXPECT_EQ(Philox4x32::generate({0, 0, 0, 0}, {0, 0}), (C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
  EXPECT_EQ(Philox4x32::generate({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}),
            (C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
  EXPECT_EQ(Philox4x32::generate({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}),
            (C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(CounterRng, StreamsAndComponentsDiffer) {
  EXPECT_NE(counter_bits(7, Stream::Dither, 3, 0), counter_bits(7, Stream::ProcessNoise, 3, 0));
  EXPECT_NE(counter_bits(7, Stream::Dither, 3, 0), counter_bits(7, Stream::Dither, 3, 1));
  EXPECT_NE(counter_bits(7, Stream::Dither, 3, 1), counter_bits(7, Stream::Dither, 3, 2));
  EXPECT_NE(derive_seed(7, 1), derive_seed(7, 2));
  EXPECT_EQ(derive_seed(7, 1), derive_seed(7, 1));
}

TEST(CounterRng, UniformRanges) {
  EXPECT_EQ(uniform_half_open(0), 0.0);
  EXPECT_LT(uniform_half_open(~std::uint64_t{0}), 1.0);
  EXPECT_GT(uniform_open(0), 0.0);
  EXPECT_LT(uniform_open(~std::uint64_t{0}), 1.0);
  EXPECT_TRUE(std::isfinite(standard_normal(0)));
  EXPECT_TRUE(std::isfinite(standard_normal(~std::uint64_t{0})));
}

TEST(CounterRng, GaussianMoments) {
  const int n = 200000;
  double s1 = 0.0, s2 = 0.0;
  for (int t = 0; t < n; ++t) {
    const double z = standard_normal(counter_bits(99, Stream::ProcessNoise, static_cast<std::uint64_t>(t), 0));
    s1 += z;
    s2 += z * z;
  }
  EXPECT_NEAR(s1 / n, 0.0, 4.0 / std::sqrt(n));
  EXPECT_NEAR(s2 / n, 1.0, 4.0 * std::sqrt(2.0 / n));
}

TEST(Quantize, HalfOpenCells) {
  EXPECT_EQ(quantize(vec({0.49}), 1.0).coords, (Coords{0}));
  EXPECT_EQ(quantize(vec({0.5}), 1.0).coords, (Coords{1}));
  EXPECT_EQ(quantize(vec({-0.5, 1.5}), 1.0).coords, (Coords{0, 2}));
  EXPECT_EQ(quantize(vec({-0.5000001}), 1.0).coords, (Coords{-1}));
  EXPECT_EQ(quantize(vec({0.25}), 0.5).coords, (Coords{1}));
}

TEST(Quantize, Errors) {
  EXPECT_THROW(quantize(vec({std::nan("")}), 1.0), Error);
  EXPECT_THROW(quantize(vec({std::numeric_limits<double>::infinity()}), 1.0), Error);
  EXPECT_THROW(quantize(vec({1.0}), 0.0), Error);
  try {
    quantize(vec({std::nan("")}), 1.0);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonFinite);
  }
}

TEST(Quantize, IdempotentOnLattice) {
  for (double delta : {1.0, 0.1, 0.37, 3.0}) {
    for (std::int64_t k = -1000; k <= 1000; k += 7) {
      EXPECT_EQ(quantize(vec({static_cast<double>(k) * delta}), delta).coords, (Coords{k})) << delta;
    }
  }
}

TEST(Quantize, CellGeometryProperty) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> x(-1e4, 1e4), dl(0.01, 10.0);
  for (int i = 0; i < 100000; ++i) {
    const double delta = dl(rng), xi = x(rng);
    const auto k = quantize(vec({xi}), delta).coords[0];
    const double c = static_cast<double>(k) * delta;
    EXPECT_LE(std::abs(xi - c), delta / 2.0 * (1.0 + 1e-12));
  }
}

TEST(Reconstruct, Examples) {
  EXPECT_EQ(reconstruct(LatticePoint{{0, 0}, 1.0}, Vector::Zero(2)), Vector::Zero(2));
  EXPECT_DOUBLE_EQ(reconstruct(LatticePoint{{1}, 1.0}, vec({0.25}))(0), 0.75);
  EXPECT_THROW(reconstruct(LatticePoint{{1}, 1.0}, Vector::Zero(2)), Error);
}

TEST(Reconstruct, ErrorBoundedByHalfCell) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> z(0.0, 5.0);
  const Matrix C = testing_support::mat({{0.7, -0.2}, {0.1, 1.3}});
  for (double delta : {1.0, 0.25}) {
    const DitherStream ds(4, delta, 2);
    for (std::uint64_t t = 0; t < 20000; ++t) {
      const Vector e = vec({z(rng), z(rng)});
      const Vector d = ds.at(t);
      const Vector v = reconstruct(quantize(C * e + d, delta), d) - C * e;
      EXPECT_LE(v.lpNorm<Eigen::Infinity>(), delta / 2.0 * (1.0 + 1e-9));
    }
  }
}

TEST(Dither, DeterministicAndSeedSensitive) {
  const DitherStream a(1, 1.0, 3), b(2, 1.0, 3);
  for (std::uint64_t t = 0; t < 100; ++t) {
    EXPECT_EQ(dither_at(a, t), dither_at(a, t));
    EXPECT_NE(dither_at(a, t), dither_at(b, t));
  }
  // Order of queries does not matter.
  const Vector late = a.at(1000);
  (void)a.at(3);
  EXPECT_EQ(a.at(1000), late);
}

TEST(Dither, UniformLaw) {
  const double delta = 2.0;
  const DitherStream ds(12345, delta, 1);
  const std::size_t n = 1000000;
  std::vector<double> v(n);
  for (std::size_t t = 0; t < n; ++t) {
    v[t] = ds.component(t, 0);
    ASSERT_GE(v[t], -delta / 2.0);
    ASSERT_LT(v[t], delta / 2.0);
  }
  EXPECT_LT(std::abs(mean(v)), 3.0 * delta / std::sqrt(12.0 * static_cast<double>(n)));
  EXPECT_LT(ks_uniform(v, -delta / 2.0, delta / 2.0), ks_critical_001(n));
}
