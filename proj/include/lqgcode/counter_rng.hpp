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

#include <boost/math/special_functions/erf.hpp>

#include <array>
#include <cmath>
#include <cstdint>

namespace lqgcode {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11). Output is a
// pure function of (key, counter), so any party holding the key can
// regenerate any draw without replaying the stream.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr Counter generate(Counter ctr, Key key) noexcept {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      ctr = Counter{hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
};

// Independent substreams keyed off one master seed.
enum class Stream : std::uint32_t {
  Dither = 1,
  ProcessNoise = 2,
  InitialState = 3,
};

// 64 random bits for (seed, stream, step, component).
inline std::uint64_t counter_bits(std::uint64_t seed, Stream stream, std::uint64_t step,
                                  std::uint64_t component) noexcept {
  const Philox4x32::Key key{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  const Philox4x32::Counter ctr{static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(step >> 32),
                                static_cast<std::uint32_t>(component >> 1),
                                static_cast<std::uint32_t>(stream)};
  const auto out = Philox4x32::generate(ctr, key);
  const std::size_t half = static_cast<std::size_t>(component & 1u) * 2;
  return (std::uint64_t{out[half]} << 32) | out[half + 1];
}

// Child seed for independent replications (warm-up run, ensemble members).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) noexcept {
  const Philox4x32::Key key{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  const auto out = Philox4x32::generate(
      {static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(tag >> 32), 0x5EEDu, 0xFFFFFFFFu}, key);
  return (std::uint64_t{out[0]} << 32) | out[1];
}

// Uniform on [0, 1) with 53 bits of resolution.
inline double uniform_half_open(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// Uniform on the open interval (0, 1); never 0 or 1. 52 bits, so the
// half-offset midpoint stays exactly representable.
inline double uniform_open(std::uint64_t bits) noexcept {
  return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
}

// Standard normal by inverse CDF.
inline double standard_normal(std::uint64_t bits) {
  const double u = uniform_open(bits);
  return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * u);
}

}  // namespace lqgcode
