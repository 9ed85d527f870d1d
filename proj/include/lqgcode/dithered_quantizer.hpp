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

#include <lqgcode/counter_rng.hpp>
#include <lqgcode/error.hpp>
#include <lqgcode/linalg.hpp>

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

namespace lqgcode {

using Coords = std::vector<std::int64_t>;

struct CoordsHash {
  std::size_t operator()(const Coords& c) const noexcept {
    std::uint64_t h = 0x9E3779B97F4A7C15ull ^ c.size();
    for (std::int64_t v : c) {
      h ^= static_cast<std::uint64_t>(v) + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
    }
    return static_cast<std::size_t>(h);
  }
};

// Point k of the lattice Delta Z^m; its value is k * Delta.
struct LatticePoint {
  Coords coords;
  double delta = 1.0;

  std::size_t dim() const { return coords.size(); }

  Vector value() const {
    Vector v(static_cast<Eigen::Index>(coords.size()));
    for (std::size_t i = 0; i < coords.size(); ++i) v(static_cast<Eigen::Index>(i)) = static_cast<double>(coords[i]) * delta;
    return v;
  }

  friend bool operator==(const LatticePoint&, const LatticePoint&) = default;
};

// Elementwise rounding to the nearest multiple of Delta with cells
// [k Delta - Delta/2, k Delta + Delta/2).
inline LatticePoint quantize(const Vector& x, double delta) {
  if (!(delta > 0.0) || !std::isfinite(delta)) throw Error(ErrorCode::BadParameter, "Delta must be positive");
  LatticePoint q;
  q.delta = delta;
  q.coords.resize(static_cast<std::size_t>(x.size()));
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double xi = x(i);
    if (!std::isfinite(xi)) throw Error(ErrorCode::NonFinite, "quantizer input is not finite");
    double k = std::floor(xi / delta + 0.5);
    // Guard the division against landing one cell off near a boundary.
    if (xi < k * delta - 0.5 * delta) k -= 1.0;
    else if (xi >= k * delta + 0.5 * delta) k += 1.0;
    q.coords[static_cast<std::size_t>(i)] = static_cast<std::int64_t>(k);
  }
  return q;
}

// Shared dither: component i at step t is a pure function of (seed, t, i),
// uniform on [-Delta/2, Delta/2).
class DitherStream {
 public:
  DitherStream(std::uint64_t seed, double delta, std::size_t dim)
      : seed_(seed), delta_(delta), dim_(dim) {
    if (!(delta > 0.0)) throw Error(ErrorCode::BadParameter, "Delta must be positive");
  }

  std::uint64_t seed() const { return seed_; }
  double delta() const { return delta_; }
  std::size_t dim() const { return dim_; }

  double component(std::uint64_t t, std::size_t i) const {
    const double u = uniform_half_open(counter_bits(seed_, Stream::Dither, t, i));
    return (u - 0.5) * delta_;
  }

  Vector at(std::uint64_t t) const {
    Vector d(static_cast<Eigen::Index>(dim_));
    for (std::size_t i = 0; i < dim_; ++i) d(static_cast<Eigen::Index>(i)) = component(t, i);
    return d;
  }

 private:
  std::uint64_t seed_;
  double delta_;
  std::size_t dim_;
};

inline Vector dither_at(const DitherStream& stream, std::uint64_t t) { return stream.at(t); }

// q Delta - d.
inline Vector reconstruct(const LatticePoint& q, const Vector& d) {
  if (static_cast<Eigen::Index>(q.coords.size()) != d.size()) {
    throw Error(ErrorCode::DimensionMismatch, "lattice point and dither differ in dimension");
  }
  return q.value() - d;
}

}  // namespace lqgcode
