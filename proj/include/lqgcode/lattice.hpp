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

#include <lqgcode/dithered_quantizer.hpp>
#include <lqgcode/error.hpp>

#include <algorithm>
#include <compare>
#include <cstdint>
#include <cstdlib>
#include <vector>

namespace lqgcode {

// Total order on Z^m used by the prefix code: L-infinity shells by radius,
// lexicographic (ascending coordinates) inside a shell.
inline std::int64_t shell_radius(const Coords& k) {
  std::int64_t r = 0;
  for (std::int64_t v : k) r = std::max<std::int64_t>(r, v < 0 ? -v : v);
  return r;
}

inline std::strong_ordering enumeration_compare(const Coords& a, const Coords& b) {
  const std::int64_t ra = shell_radius(a), rb = shell_radius(b);
  if (ra != rb) return ra <=> rb;
  return std::lexicographical_compare_three_way(a.begin(), a.end(), b.begin(), b.end());
}

struct EnumerationLess {
  bool operator()(const Coords& a, const Coords& b) const { return enumeration_compare(a, b) < 0; }
};

// Measure of the points of shell r that precede q lexicographically, for a
// product measure described by `w`:
//   w.value(v)      weight of a single coordinate value
//   w.range(a, b)   sum of value(v) for v in [a, b] (zero when a > b)
//   w.ball(r, n)    measure of [-r, r]^n; ball(r, 0) = 1, ball(-1, n>0) = 0
// Requires shell_radius(q) == r.
template <class T, class Weights>
T shell_prefix_measure(const Coords& q, std::int64_t r, const Weights& w) {
  T total = T(0);
  T prefix = T(1);
  bool prefix_hits = false;
  const std::size_t m = q.size();
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t rest = m - 1 - i;
    const std::int64_t qi = q[i];
    const T full = w.ball(r, rest);
    if (prefix_hits) {
      total += prefix * w.range(-r, qi - 1) * full;
    } else {
      const T shell = full - w.ball(r - 1, rest);
      T part = w.range(-r + 1, qi - 1) * shell;
      if (qi > -r) part += w.value(-r) * full;
      total += prefix * part;
    }
    prefix *= w.value(qi);
    if (qi == r || qi == -r) prefix_hits = true;
  }
  return total;
}

namespace detail {

inline std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
  std::uint64_t out;
  if (__builtin_mul_overflow(a, b, &out)) throw Error(ErrorCode::BadParameter, "enumeration index overflows 64 bits");
  return out;
}

inline std::uint64_t checked_add(std::uint64_t a, std::uint64_t b) {
  std::uint64_t out;
  if (__builtin_add_overflow(a, b, &out)) throw Error(ErrorCode::BadParameter, "enumeration index overflows 64 bits");
  return out;
}

struct CountWeights {
  std::uint64_t value(std::int64_t) const { return 1; }
  std::uint64_t range(std::int64_t a, std::int64_t b) const {
    return a > b ? 0 : static_cast<std::uint64_t>(b - a + 1);
  }
  std::uint64_t ball(std::int64_t r, std::size_t n) const {
    if (n == 0) return 1;
    if (r < 0) return 0;
    std::uint64_t out = 1;
    for (std::size_t i = 0; i < n; ++i) out = checked_mul(out, static_cast<std::uint64_t>(2 * r + 1));
    return out;
  }
};

// uint64 wrapper whose arithmetic traps on overflow.
struct Checked {
  std::uint64_t v = 0;
  Checked(std::uint64_t x = 0) : v(x) {}  // NOLINT(google-explicit-constructor)
  friend Checked operator*(Checked a, Checked b) { return checked_mul(a.v, b.v); }
  friend Checked operator+(Checked a, Checked b) { return checked_add(a.v, b.v); }
  friend Checked operator-(Checked a, Checked b) { return a.v - b.v; }
  Checked& operator+=(Checked o) { return *this = *this + o; }
  Checked& operator*=(Checked o) { return *this = *this * o; }
};

struct CheckedCountWeights {
  CountWeights base;
  Checked value(std::int64_t v) const { return base.value(v); }
  Checked range(std::int64_t a, std::int64_t b) const { return base.range(a, b); }
  Checked ball(std::int64_t r, std::size_t n) const { return base.ball(r, n); }
};

}  // namespace detail

inline std::uint64_t enumerate_index(const Coords& k) {
  const std::int64_t r = shell_radius(k);
  const detail::CheckedCountWeights w;
  const detail::Checked before = w.ball(r - 1, k.size());
  return (before + shell_prefix_measure<detail::Checked>(k, r, w)).v;
}

inline std::uint64_t enumerate_index(const LatticePoint& p) { return enumerate_index(p.coords); }

inline Coords enumerate_point(std::uint64_t index, std::size_t m) {
  if (m == 0) throw Error(ErrorCode::BadParameter, "dimension must be positive");
  const detail::CountWeights w;
  std::int64_t r = 0;
  while (w.ball(r, m) <= index) ++r;
  std::uint64_t rank = index - w.ball(r - 1, m);
  Coords out(m);
  bool prefix_hits = false;
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t rest = m - 1 - i;
    const std::uint64_t full = w.ball(r, rest);
    const std::uint64_t shell = full - w.ball(r - 1, rest);
    for (std::int64_t v = -r; v <= r; ++v) {
      const bool hits = prefix_hits || v == r || v == -r;
      const std::uint64_t count = hits ? full : shell;
      if (rank < count) {
        out[i] = v;
        prefix_hits = hits;
        break;
      }
      rank -= count;
    }
  }
  return out;
}

}  // namespace lqgcode
