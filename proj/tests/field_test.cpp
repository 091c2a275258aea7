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

#include "byzagg/field.hpp"

#include <gtest/gtest.h>

#include <cstdint>

#include "byzagg/errors.hpp"
#include "byzagg/rng.hpp"

namespace byzagg {
namespace {

TEST(Field, ArithmeticMod7) {
  Field F(7);
  EXPECT_EQ(F.add(3, 5), 1u);
  EXPECT_EQ(F.sub(2, 5), 4u);
  EXPECT_EQ(F.mul(4, 5), 6u);
  EXPECT_EQ(F.inv(3), 5u);
  EXPECT_EQ(F.neg(0), 0u);
  EXPECT_EQ(F.neg(2), 5u);
}

TEST(Field, ArithmeticMod13) {
  Field F(13);
  EXPECT_EQ(F.mul(6, 6), 10u);
  EXPECT_EQ(F.pow(2, 12), 1u);  // Fermat
  for (fe a = 1; a < 13; ++a) {
    EXPECT_EQ(F.mul(a, F.inv(a)), 1u);
  }
}

TEST(Field, DivisionByZeroThrows) {
  Field F(13);
  EXPECT_THROW(F.inv(0), DivisionByZero);
  EXPECT_THROW(F.div(5, 0), DivisionByZero);
}

TEST(Field, RejectsBadModulus) {
  EXPECT_THROW(Field(1), ConfigInvalid);
  EXPECT_THROW(Field(12), ConfigInvalid);
  EXPECT_THROW(Field((1ULL << 62) + 2), ConfigInvalid);
}

TEST(Field, EmbedUnembedMod13) {
  Field F(13);
  EXPECT_EQ(F.embed(-3), 10u);
  EXPECT_EQ(F.unembed(10), -3);
  EXPECT_EQ(F.embed(6), 6u);
  EXPECT_EQ(F.embed(-6), 7u);
  // Magnitudes past (q-1)/2 are not representable.
  EXPECT_THROW(F.embed(7), EmbeddingOverflow);
  EXPECT_THROW(F.embed(-7), EmbeddingOverflow);
}

TEST(Field, EmbedRoundTripRandom) {
  Field F = Field::mersenne61();
  Rng rng(7);
  const std::int64_t half = static_cast<std::int64_t>((F.q() - 1) / 2);
  for (int trial = 0; trial < 1000; ++trial) {
    std::int64_t x = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(half))) -
                     half / 2;
    EXPECT_EQ(F.unembed(F.embed(x)), x);
  }
  EXPECT_EQ(F.unembed(F.embed(half)), half);
  EXPECT_EQ(F.unembed(F.embed(-half)), -half);
}

TEST(Field, AlgebraicPropertiesRandom) {
  Field F = Field::mersenne61();
  Rng rng(11);
  for (int trial = 0; trial < 2000; ++trial) {
    const fe a = F.uniform(rng), b = F.uniform(rng), c = F.uniform(rng);
    EXPECT_EQ(F.add(a, b), F.add(b, a));
    EXPECT_EQ(F.mul(a, b), F.mul(b, a));
    EXPECT_EQ(F.mul(a, F.add(b, c)), F.add(F.mul(a, b), F.mul(a, c)));
    EXPECT_EQ(F.sub(F.add(a, b), b), a);
    EXPECT_EQ(F.add(a, F.neg(a)), 0u);
    if (a != 0) {
      EXPECT_EQ(F.mul(a, F.inv(a)), 1u);
      EXPECT_EQ(F.inv(F.inv(a)), a);
    }
  }
}

TEST(Field, PowMatchesRepeatedMultiplication) {
  Field F(1000003);
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const fe base = F.uniform(rng);
    const std::uint64_t exp = rng.below(30);
    fe expected = 1;
    for (std::uint64_t i = 0; i < exp; ++i) expected = F.mul(expected, base);
    EXPECT_EQ(F.pow(base, exp), expected);
  }
}

// Oracle: trial division, checked against the Miller-Rabin implementation.
bool is_prime_trial_division(std::uint64_t n) {
  if (n < 2) return false;
  for (std::uint64_t p = 2; p * p <= n; ++p) {
    if (n % p == 0) return false;
  }
  return true;
}

TEST(Primality, MatchesTrialDivisionBelow20000) {
  for (std::uint64_t n = 0; n < 20000; ++n) {
    EXPECT_EQ(is_prime_u64(n), is_prime_trial_division(n)) << "n=" << n;
  }
}

TEST(Primality, KnownLargePrimes) {
  EXPECT_TRUE(is_prime_u64((1ULL << 61) - 1));  // Mersenne
  EXPECT_FALSE(is_prime_u64((1ULL << 61) + 1));
  EXPECT_TRUE(is_prime_u64(2305843009213693951ULL));
  // Strong pseudoprime to several small bases, composite: 3215031751 = 151*751*28351.
  EXPECT_FALSE(is_prime_u64(3215031751ULL));
  EXPECT_EQ(next_prime_at_least(90), 97u);
  EXPECT_EQ(next_prime_at_least(97), 97u);
}

TEST(FieldSize, MinimumBound) {
  // 2 * d * (n-b)^2 * mu^2
  EXPECT_EQ(min_field_size(1, 3, 1, 2), 32u);
  EXPECT_EQ(min_field_size(10, 15, 3, 1024),
            2ULL * 10 * 12 * 12 * 1024 * 1024);
  EXPECT_THROW(min_field_size(0, 3, 1, 2), ConfigInvalid);
  EXPECT_THROW(min_field_size(1, 3, 3, 2), ConfigInvalid);
}

TEST(FieldSize, ChooseFieldPrefersMersenne) {
  Field F = choose_field(210, 15, 3, 1024);
  EXPECT_EQ(F.q(), (1ULL << 61) - 1);
}

TEST(FieldSize, ChooseFieldFallsBackToLargerPrime) {
  // Bound of ~3.1e18 exceeds 2^61-1 but still fits under the 2^62 cap.
  Field F = choose_field(1500000, 1030, 30, 1024);
  EXPECT_GT(F.q(), (1ULL << 61) - 1);
  EXPECT_GE(F.q(), min_field_size(1500000, 1030, 30, 1024));
  EXPECT_TRUE(is_prime_u64(F.q()));
  // And a bound past 2^62 is rejected outright.
  EXPECT_THROW(choose_field(3000000, 1030, 30, 1024), ConfigInvalid);
}

TEST(Field, UniformStaysInRangeAndCoversSmallField) {
  Field F(31);
  Rng rng(5);
  bool seen[31] = {};
  for (int i = 0; i < 2000; ++i) {
    const fe v = F.uniform(rng);
    ASSERT_LT(v, 31u);
    seen[v] = true;
  }
  for (bool s : seen) EXPECT_TRUE(s);
}

TEST(Rng, DeterministicStreams) {
  Rng a(123), b(123), c(124);
  bool differs = false;
  for (int i = 0; i < 64; ++i) {
    const std::uint64_t va = a.next();
    EXPECT_EQ(va, b.next());
    if (va != c.next()) differs = true;
  }
  EXPECT_TRUE(differs);
}

TEST(Rng, NormalMomentsSane) {
  Rng rng(99);
  double sum = 0, sumsq = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    sumsq += x * x;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  EXPECT_NEAR(mean, 0.0, 0.02);
  EXPECT_NEAR(var, 1.0, 0.03);
}

TEST(SharedRandomness, StreamsIndependentByPurposeRoundIndex) {
  SharedRandomness sr(42);
  Rng a = sr.stream(SharedStream::Pad, 1, 2);
  Rng b = sr.stream(SharedStream::Pad, 1, 2);
  Rng c = sr.stream(SharedStream::Pad, 1, 3);
  Rng d = sr.stream(SharedStream::Pad, 2, 2);
  Rng e = sr.stream(SharedStream::ResponseMask, 1, 2);
  const std::uint64_t va = a.next();
  EXPECT_EQ(va, b.next());
  EXPECT_NE(va, c.next());
  EXPECT_NE(va, d.next());
  EXPECT_NE(va, e.next());
}

}  // namespace
}  // namespace byzagg
