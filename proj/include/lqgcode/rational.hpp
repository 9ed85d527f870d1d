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

#include <gmpxx.h>

#include <cmath>
#include <cstddef>
#include <string>

namespace lqgcode {

using Rational = mpq_class;

// Exact conversion; every finite double is a dyadic rational.
inline Rational exact_rational(double x) {
  Rational q(x);
  q.canonicalize();
  return q;
}

// Smallest n >= 0 with 2^-n <= p, i.e. ceil(-log2 p), for 0 < p <= 1.
inline std::size_t ceil_neg_log2(const Rational& p) {
  const mpz_class& num = p.get_num();
  const mpz_class& den = p.get_den();
  const long nb = static_cast<long>(mpz_sizeinbase(num.get_mpz_t(), 2));
  const long db = static_cast<long>(mpz_sizeinbase(den.get_mpz_t(), 2));
  long n = std::max(0L, db - nb - 1);
  mpz_class shifted;
  // Walk to the exact answer from the bit-length estimate (off by <= 2).
  for (;;) {
    mpz_mul_2exp(shifted.get_mpz_t(), num.get_mpz_t(), static_cast<mp_bitcnt_t>(n));
    if (shifted >= den) break;
    ++n;
  }
  while (n > 0) {
    mpz_mul_2exp(shifted.get_mpz_t(), num.get_mpz_t(), static_cast<mp_bitcnt_t>(n - 1));
    if (shifted < den) break;
    --n;
  }
  return static_cast<std::size_t>(n);
}

// log2 of a positive rational without underflow.
inline double log2_rational(const Rational& p) {
  long en = 0, ed = 0;
  const double fn = mpz_get_d_2exp(&en, p.get_num_mpz_t());
  const double fd = mpz_get_d_2exp(&ed, p.get_den_mpz_t());
  return std::log2(fn) - std::log2(fd) + static_cast<double>(en - ed);
}

// First `bits` binary digits of x in [0, 1), as '0'/'1' characters.
inline std::string binary_expansion(const Rational& x, std::size_t bits) {
  mpz_class scaled;
  mpz_mul_2exp(scaled.get_mpz_t(), x.get_num_mpz_t(), static_cast<mp_bitcnt_t>(bits));
  mpz_fdiv_q(scaled.get_mpz_t(), scaled.get_mpz_t(), x.get_den_mpz_t());
  std::string out(bits, '0');
  for (std::size_t i = 0; i < bits; ++i) {
    if (mpz_tstbit(scaled.get_mpz_t(), static_cast<mp_bitcnt_t>(bits - 1 - i))) out[i] = '1';
  }
  return out;
}

// Dyadic value of a '0'/'1' string: sum bit_i 2^-(i+1).
inline Rational dyadic_value(const std::string& bits, std::size_t begin, std::size_t count) {
  mpz_class num = 0;
  for (std::size_t i = 0; i < count; ++i) {
    num <<= 1;
    if (bits[begin + i] == '1') num += 1;
  }
  mpz_class den = 1;
  mpz_mul_2exp(den.get_mpz_t(), den.get_mpz_t(), static_cast<mp_bitcnt_t>(count));
  Rational out(num, den);
  out.canonicalize();
  return out;
}

}  // namespace lqgcode
