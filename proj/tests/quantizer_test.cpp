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

#include "byzagg/quantizer.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "byzagg/errors.hpp"
#include "byzagg/field.hpp"
#include "byzagg/rng.hpp"

namespace byzagg {
namespace {

QuantConfig odd_cfg() {
  QuantConfig cfg;
  cfg.levels = 9;  // step 0.25, binary-exact grid including zero
  cfg.clip = 1.0;
  cfg.field = Field(1000003);
  return cfg;
}

TEST(Quantizer, GridPointsAreFixedPointsOddLevels) {
  const QuantConfig cfg = odd_cfg();
  Rng rng(1);
  for (int k = 0; k < 9; ++k) {
    const double grid_value = -1.0 + 0.25 * k;
    for (int rep = 0; rep < 200; ++rep) {
      std::vector<double> g = {grid_value};
      const QuantizedGradient q = quantize(g, cfg, rng);
      const std::vector<double> back = dequantize(q, cfg);
      EXPECT_EQ(back[0], grid_value) << "k=" << k;
    }
  }
}

TEST(Quantizer, ClipsToRange) {
  const QuantConfig cfg = odd_cfg();
  Rng rng(2);
  std::vector<double> g = {5.0, -123.0};
  const QuantizedGradient q = quantize(g, cfg, rng);
  const std::vector<double> back = dequantize(q, cfg);
  EXPECT_EQ(back[0], 1.0);
  EXPECT_EQ(back[1], -1.0);
}

TEST(Quantizer, StochasticRoundingIsUnbiased) {
  // x = 0.3 sits between grid points 0.25 and 0.5; closed form: rounds up
  // with probability 0.2, so the mean is exactly 0.3 and the per-sample
  // variance is 0.2*0.8*0.25^2 = 0.01.
  const QuantConfig cfg = odd_cfg();
  Rng rng(3);
  const int trials = 100000;
  double sum = 0;
  int ups = 0;
  for (int i = 0; i < trials; ++i) {
    std::vector<double> g = {0.3};
    const double v = dequantize(quantize(g, cfg, rng), cfg)[0];
    EXPECT_TRUE(v == 0.25 || v == 0.5);
    sum += v;
    if (v == 0.5) ++ups;
  }
  EXPECT_NEAR(sum / trials, 0.3, 0.002);           // ~6 sigma
  EXPECT_NEAR(ups / static_cast<double>(trials), 0.2, 0.006);
}

TEST(Quantizer, UnbiasedOnClippedValueToo) {
  const QuantConfig cfg = odd_cfg();
  Rng rng(4);
  const int trials = 20000;
  double sum = 0;
  for (int i = 0; i < trials; ++i) {
    std::vector<double> g = {3.7};  // clipped to 1.0, a grid point
    sum += dequantize(quantize(g, cfg, rng), cfg)[0];
  }
  EXPECT_EQ(sum / trials, 1.0);
}

TEST(Quantizer, EvenLevelGridHasNoZeroAndIsSymmetric) {
  QuantConfig cfg;
  cfg.levels = 2;  // grid {-c, +c}, step 2c, offset c
  cfg.clip = 1.0;
  cfg.field = Field(1000003);
  Rng rng(5);
  EXPECT_TRUE(cfg.offset_grid());
  int plus = 0, minus = 0;
  const int trials = 10000;
  for (int i = 0; i < trials; ++i) {
    std::vector<double> g = {0.0};
    const double v = dequantize(quantize(g, cfg, rng), cfg)[0];
    ASSERT_TRUE(v == 1.0 || v == -1.0);  // never zero
    (v > 0 ? plus : minus) += 1;
  }
  EXPECT_NEAR(plus / static_cast<double>(trials), 0.5, 0.02);
  EXPECT_EQ(plus + minus, trials);
}

TEST(Quantizer, ProductionLevelCountRoundsZeroToHalfStep) {
  QuantConfig cfg;
  cfg.levels = 1024;
  cfg.clip = 1.0;
  cfg.field = Field::mersenne61();
  Rng rng(6);
  const double half_step = cfg.step() / 2.0;
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> g = {0.0};
    const double v = dequantize(quantize(g, cfg, rng), cfg)[0];
    EXPECT_TRUE(v == half_step || v == -half_step);
    EXPECT_NE(v, 0.0);
  }
}

TEST(Quantizer, UnbiasedAcrossRandomInputs) {
  QuantConfig cfg;
  cfg.levels = 1024;
  cfg.clip = 1.0;
  cfg.field = Field::mersenne61();
  Rng rng(7);
  Rng input_rng(8);
  // Average quantization error over many independent (input, draw) pairs is
  // zero; per-sample error is bounded by one step.
  double err_sum = 0;
  const int trials = 50000;
  for (int i = 0; i < trials; ++i) {
    const double x = 2.0 * input_rng.real() - 1.0;
    std::vector<double> g = {x};
    const double v = dequantize(quantize(g, cfg, rng), cfg)[0];
    EXPECT_LE(std::abs(v - x), cfg.step());
    err_sum += v - x;
  }
  EXPECT_NEAR(err_sum / trials, 0.0, 4.0 * cfg.step() / std::sqrt(trials));
}

TEST(Quantizer, AggregateDequantizationCorrectsOffset) {
  QuantConfig cfg;
  cfg.levels = 4;  // even: grid -1, -1/3, 1/3, 1
  cfg.clip = 1.0;
  cfg.field = Field(1000003);
  Rng rng(9);
  const Field& F = cfg.field;
  // Quantize three grid-valued gradients and sum them in the field.
  const std::vector<double> inputs = {-1.0, 1.0, 1.0};
  fe acc = 0;
  for (double x : inputs) {
    std::vector<double> g = {x};
    acc = F.add(acc, quantize(g, cfg, rng).values[0]);
  }
  const std::vector<fe> agg = {acc};
  const std::vector<double> out = dequantize(agg, cfg, 3);
  EXPECT_NEAR(out[0], 1.0, 1e-12);  // -1 + 1 + 1
}

TEST(Quantizer, SumOfIndependentQuantizationsIsUnbiased) {
  QuantConfig cfg;
  cfg.levels = 16;
  cfg.clip = 1.0;
  cfg.field = Field(1000003);
  Rng rng(10);
  const Field& F = cfg.field;
  const std::vector<double> inputs = {0.123, -0.777, 0.5, 0.02};
  double expected = 0;
  for (double x : inputs) expected += x;
  double sum = 0;
  const int trials = 20000;
  for (int t = 0; t < trials; ++t) {
    fe acc = 0;
    for (double x : inputs) {
      std::vector<double> g = {x};
      acc = F.add(acc, quantize(g, cfg, rng).values[0]);
    }
    const std::vector<fe> agg = {acc};
    sum += dequantize(agg, cfg, inputs.size())[0];
  }
  EXPECT_NEAR(sum / trials, expected, 0.01);
}

TEST(Quantizer, RejectsNonFiniteEntries) {
  const QuantConfig cfg = odd_cfg();
  Rng rng(11);
  std::vector<double> g1 = {std::numeric_limits<double>::quiet_NaN()};
  std::vector<double> g2 = {std::numeric_limits<double>::infinity()};
  std::vector<double> g3 = {-std::numeric_limits<double>::infinity()};
  EXPECT_THROW(quantize(g1, cfg, rng), InvalidGradient);
  EXPECT_THROW(quantize(g2, cfg, rng), InvalidGradient);
  EXPECT_THROW(quantize(g3, cfg, rng), InvalidGradient);
}

TEST(Quantizer, FieldSizeValidation) {
  QuantConfig cfg;
  cfg.levels = 1024;
  cfg.clip = 1.0;
  cfg.field = Field(1000003);
  // 2*d*(n-b)^2*mu^2 = 2*10*(12)^2*1024^2 >> 1000003
  EXPECT_THROW(validate_field_size(cfg, 10, 15, 3), FieldTooSmall);
  cfg.field = Field::mersenne61();
  EXPECT_NO_THROW(validate_field_size(cfg, 210, 15, 3));
  try {
    cfg.field = Field(1000003);
    validate_field_size(cfg, 10, 15, 3);
    FAIL() << "expected FieldTooSmall";
  } catch (const FieldTooSmall& e) {
    EXPECT_EQ(e.minimal_q, min_field_size(10, 15, 3, 1024));
  }
}

TEST(Quantizer, OverflowSuspectedOnOutOfRangeAggregate) {
  QuantConfig cfg;
  cfg.levels = 9;  // max index 4
  cfg.clip = 1.0;
  cfg.field = Field(1000003);
  const Field& F = cfg.field;
  // A single gradient can carry index at most 4; 5 is suspicious.
  const std::vector<fe> bad = {F.embed(5)};
  EXPECT_THROW(dequantize(bad, cfg, 1), OverflowSuspected);
  const std::vector<fe> bad_neg = {F.embed(-5)};
  EXPECT_THROW(dequantize(bad_neg, cfg, 1), OverflowSuspected);
  // With three summands the bound loosens to 12.
  const std::vector<fe> ok = {F.embed(12)};
  EXPECT_NO_THROW(dequantize(ok, cfg, 3));
  const std::vector<fe> still_bad = {F.embed(13)};
  EXPECT_THROW(dequantize(still_bad, cfg, 3), OverflowSuspected);
}

TEST(Quantizer, ConfigValidation) {
  QuantConfig cfg;
  cfg.levels = 1;
  EXPECT_THROW(cfg.validate(), ConfigInvalid);
  cfg.levels = 4;
  cfg.clip = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigInvalid);
  cfg.clip = std::numeric_limits<double>::infinity();
  EXPECT_THROW(cfg.validate(), ConfigInvalid);
}

}  // namespace
}  // namespace byzagg
