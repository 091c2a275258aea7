// Copyright 2026 The byzagg authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <string>

#include "byzagg/errors.hpp"
#include "byzagg/rng.hpp"

namespace byzagg {

// Field elements are canonical residues in [0, q).  All arithmetic is exact;
// products are reduced through unsigned 128-bit intermediates, which is why
// the modulus is capped at 2^62 (sums of two residues then still fit 64 bits
// with headroom).
using fe = std::uint64_t;

namespace detail {

inline std::uint64_t mulmod_u64(std::uint64_t a, std::uint64_t b, std::uint64_t m) {
  return static_cast<std::uint64_t>(static_cast<unsigned __int128>(a) * b % m);
}

inline std::uint64_t powmod_u64(std::uint64_t base, std::uint64_t exp, std::uint64_t m) {
  std::uint64_t result = 1 % m;
  base %= m;
  while (exp != 0) {
    if (exp & 1) result = mulmod_u64(result, base, m);
    base = mulmod_u64(base, base, m);
    exp >>= 1;
  }
  return result;
}

}  // namespace detail

// Deterministic Miller-Rabin: the listed witnesses decide primality for every
// 64-bit integer (Sorenson & Webster).
inline bool is_prime_u64(std::uint64_t n) {
  if (n < 2) return false;
  for (std::uint64_t p : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL, 23ULL, 29ULL,
                          31ULL, 37ULL}) {
    if (n % p == 0) return n == p;
  }
  std::uint64_t d = n - 1;
  int r = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++r;
  }
  for (std::uint64_t a : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL, 23ULL, 29ULL,
                          31ULL, 37ULL}) {
    std::uint64_t x = detail::powmod_u64(a, d, n);
    if (x == 1 || x == n - 1) continue;
    bool composite = true;
    for (int i = 1; i < r; ++i) {
      x = detail::mulmod_u64(x, x, n);
      if (x == n - 1) {
        composite = false;
        break;
      }
    }
    if (composite) return false;
  }
  return true;
}

inline std::uint64_t next_prime_at_least(std::uint64_t n) {
  if (n <= 2) return 2;
  if ((n & 1) == 0) ++n;
  while (!is_prime_u64(n)) n += 2;
  return n;
}

class Field {
 public:
  static constexpr fe kMaxModulus = (1ULL << 62);

  Field() = default;

  explicit Field(fe q) : q_(q) {
    if (q < 2 || q > kMaxModulus) {
      throw ConfigInvalid("field modulus out of range: " + std::to_string(q));
    }
    if (!is_prime_u64(q)) {
      throw ConfigInvalid("field modulus is not prime: " + std::to_string(q));
    }
    bits_ = 0;
    for (fe v = q - 1; v != 0; v >>= 1) ++bits_;
  }

  // 2^61 - 1, the default modulus.  Large enough for every experiment in this
  // repository and cheap to reduce by.
  static Field mersenne61() { return Field((1ULL << 61) - 1); }

  fe q() const { return q_; }
  int bit_width() const { return bits_; }
  int element_bytes() const { return (bits_ + 7) / 8; }

  bool operator==(const Field& other) const { return q_ == other.q_; }

  fe reduce(std::uint64_t v) const { return v % q_; }

  fe add(fe a, fe b) const {
    fe s = a + b;
    if (s >= q_) s -= q_;
    return s;
  }

  fe sub(fe a, fe b) const { return a >= b ? a - b : a + (q_ - b); }

  fe neg(fe a) const { return a == 0 ? 0 : q_ - a; }

  fe mul(fe a, fe b) const { return detail::mulmod_u64(a, b, q_); }

  fe pow(fe base, std::uint64_t exp) const { return detail::powmod_u64(base, exp, q_); }

  // Multiplicative inverse via extended Euclid; throws DivisionByZero on 0.
  fe inv(fe a) const {
    if (a == 0) throw DivisionByZero();
    std::int64_t t = 0, new_t = 1;
    std::int64_t r = static_cast<std::int64_t>(q_), new_r = static_cast<std::int64_t>(a);
    while (new_r != 0) {
      const std::int64_t quotient = r / new_r;
      std::int64_t tmp = t - quotient * new_t;
      t = new_t;
      new_t = tmp;
      tmp = r - quotient * new_r;
      r = new_r;
      new_r = tmp;
    }
    if (t < 0) t += static_cast<std::int64_t>(q_);
    return static_cast<fe>(t);
  }

  fe div(fe a, fe b) const { return mul(a, inv(b)); }

  // Signed integers map to residues: x >= 0 to x, x < 0 to q + x.  Magnitudes
  // must stay below q/2 so the mapping is invertible.
  fe embed(std::int64_t x) const {
    const std::uint64_t magnitude =
        x >= 0 ? static_cast<std::uint64_t>(x) : static_cast<std::uint64_t>(-(x + 1)) + 1;
    if (magnitude >= (q_ + 1) / 2) {
      throw EmbeddingOverflow("integer " + std::to_string(x) +
                              " exceeds embedding range of field " + std::to_string(q_));
    }
    return x >= 0 ? static_cast<fe>(x) : q_ - magnitude;
  }

  std::int64_t unembed(fe e) const {
    if (e < (q_ + 1) / 2) return static_cast<std::int64_t>(e);
    return -static_cast<std::int64_t>(q_ - e);
  }

  fe uniform(Rng& rng) const { return rng.below(q_); }

 private:
  fe q_ = 0;
  int bits_ = 0;
};

// Smallest admissible modulus for aggregating n-client gradients of dimension
// d quantized to mu levels while tolerating b corruptions: distances between
// sums of n-b quantized vectors must not wrap, which needs q >= 2*d*(n-b)^2*mu^2.
inline std::uint64_t min_field_size(int d, int n, int b, std::uint64_t mu) {
  if (d < 1 || n < 1 || b < 0 || b >= n || mu < 2) {
    throw ConfigInvalid("min_field_size: invalid arguments");
  }
  const unsigned __int128 bound = static_cast<unsigned __int128>(2) * d * (n - b) * (n - b) *
                                  (static_cast<unsigned __int128>(mu) * mu);
  if (bound > Field::kMaxModulus) {
    throw ConfigInvalid("required field size exceeds supported modulus range");
  }
  return static_cast<std::uint64_t>(bound);
}

// Default field selection: the Mersenne prime 2^61-1 when it is large enough,
// otherwise the next prime past the bound.
inline Field choose_field(int d, int n, int b, std::uint64_t mu) {
  const std::uint64_t required = min_field_size(d, n, b, mu);
  const fe mersenne = (1ULL << 61) - 1;
  if (required <= mersenne) return Field(mersenne);
  return Field(next_prime_at_least(required));
}

}  // namespace byzagg
