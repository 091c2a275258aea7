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

#include "byzagg/attacks.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "byzagg/stats.hpp"

namespace byzagg {
namespace {

std::vector<std::vector<double>> random_gradients(int count, int d, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<double>> out(static_cast<std::size_t>(count));
  for (auto& g : out) {
    g.resize(static_cast<std::size_t>(d));
    for (auto& x : g) x = rng.normal();
  }
  return out;
}

// Straight-line re-evaluation of the damage objective used by the grid search.
double oracle_damage(const std::vector<std::vector<double>>& honest, int b,
                     const std::vector<double>& candidate, const RuleSpec& rule) {
  std::vector<std::vector<double>> attacked = honest;
  for (int i = 0; i < b; ++i) attacked.push_back(candidate);
  const auto with = aggregate_plaintext(attacked, b, rule);
  const auto base = aggregate_plaintext(honest, b, rule);
  double norm2 = 0.0;
  for (std::size_t u = 0; u < with.size(); ++u) {
    const double diff = with[u] - base[u];
    norm2 += diff * diff;
  }
  return std::sqrt(norm2);
}

std::vector<double> column_means(const std::vector<std::vector<double>>& rows) {
  std::vector<double> mu(rows[0].size(), 0.0);
  for (const auto& r : rows) {
    for (std::size_t u = 0; u < mu.size(); ++u) mu[u] += r[u];
  }
  for (auto& m : mu) m /= static_cast<double>(rows.size());
  return mu;
}

TEST(Alie, PicksGridArgmaxAgainstExhaustiveOracle) {
  const auto honest = random_gradients(8, 5, 101);
  const int b = 2;
  const RuleSpec rule{AggRule::Krum, true};
  const auto grid = default_attack_grid();
  const auto chosen = alie(honest, b, grid, rule);

  // Independent exhaustive scan over the same grid.
  const auto mu = column_means(honest);
  std::vector<double> sigma(mu.size());
  for (std::size_t u = 0; u < mu.size(); ++u) {
    std::vector<double> col;
    col.reserve(honest.size());
    for (const auto& g : honest) col.push_back(g[u]);
    sigma[u] = sample_stddev(col);
  }
  double best_damage = -1.0;
  std::vector<double> best;
  for (double tau : grid) {
    std::vector<double> cand(mu.size());
    for (std::size_t u = 0; u < mu.size(); ++u) cand[u] = mu[u] - tau * sigma[u];
    const double dmg = oracle_damage(honest, b, cand, rule);
    if (dmg > best_damage) {
      best_damage = dmg;
      best = cand;
    }
  }
  ASSERT_EQ(chosen.size(), best.size());
  for (std::size_t u = 0; u < best.size(); ++u) {
    EXPECT_DOUBLE_EQ(chosen[u], best[u]) << "coordinate " << u;
  }
}

TEST(Alie, ZeroSpreadOrZeroGridReturnsTheMean) {
  // All honest gradients identical: sigma = 0, so every tau yields the mean.
  std::vector<std::vector<double>> honest(6, std::vector<double>{1.5, -2.0, 0.25});
  const RuleSpec rule{AggRule::Krum, false};
  const auto out = alie(honest, 2, default_attack_grid(), rule);
  EXPECT_EQ(out, (std::vector<double>{1.5, -2.0, 0.25}));

  // A grid containing only tau = 0 also degenerates to the mean.
  const auto varied = random_gradients(6, 3, 55);
  const auto mu = column_means(varied);
  const auto out0 = alie(varied, 2, std::vector<double>{0.0}, rule);
  ASSERT_EQ(out0.size(), mu.size());
  for (std::size_t u = 0; u < mu.size(); ++u) EXPECT_DOUBLE_EQ(out0[u], mu[u]);
}

TEST(Alie, FirstGridPointWinsTies) {
  // With sigma = 0 every grid point produces the same candidate and damage;
  // determinism demands the first point's candidate (still the mean).
  std::vector<std::vector<double>> honest(5, std::vector<double>{3.0, 3.0});
  const auto a = alie(honest, 1, std::vector<double>{2.0, 4.0, 8.0}, RuleSpec{AggRule::Krum, true});
  const auto b = alie(honest, 1, std::vector<double>{2.0}, RuleSpec{AggRule::Krum, true});
  EXPECT_EQ(a, b);
}

TEST(Foe, MatchesExhaustiveOracleAndScalesTheMean) {
  const auto honest = random_gradients(8, 4, 202);
  const int b = 2;
  const RuleSpec rule{AggRule::MultiKrum, true};
  const auto grid = default_attack_grid();
  const auto chosen = foe(honest, b, grid, rule);

  const auto mu = column_means(honest);
  double best_damage = -1.0;
  std::vector<double> best;
  for (double eps : grid) {
    std::vector<double> cand(mu.size());
    for (std::size_t u = 0; u < mu.size(); ++u) cand[u] = -eps * mu[u];
    const double dmg = oracle_damage(honest, b, cand, rule);
    if (dmg > best_damage) {
      best_damage = dmg;
      best = cand;
    }
  }
  ASSERT_EQ(chosen.size(), best.size());
  for (std::size_t u = 0; u < best.size(); ++u) {
    EXPECT_DOUBLE_EQ(chosen[u], best[u]) << "coordinate " << u;
  }

  // Singleton grids pin the scale exactly.
  const auto zero = foe(honest, b, std::vector<double>{0.0}, rule);
  for (double x : zero) EXPECT_DOUBLE_EQ(x, 0.0);
  const auto flipped = foe(honest, b, std::vector<double>{1.0}, rule);
  for (std::size_t u = 0; u < mu.size(); ++u) EXPECT_DOUBLE_EQ(flipped[u], -mu[u]);
}

TEST(Attacks, GridSearchDoesNotMutateHonestInputs) {
  const auto honest = random_gradients(7, 3, 303);
  const auto copy = honest;
  (void)alie(honest, 2, default_attack_grid(), RuleSpec{AggRule::Krum, true});
  (void)foe(honest, 2, default_attack_grid(), RuleSpec{AggRule::Krum, true});
  EXPECT_EQ(honest, copy);
}

TEST(Attacks, DefaultGridShape) {
  const auto grid = default_attack_grid();
  ASSERT_EQ(grid.size(), 20u);
  EXPECT_DOUBLE_EQ(grid.front(), 0.5);
  EXPECT_DOUBLE_EQ(grid.back(), 10.0);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    EXPECT_DOUBLE_EQ(grid[i] - grid[i - 1], 0.5);
  }
}

TEST(SignFlip, NegatesAndIsAnInvolution) {
  const std::vector<double> g = {1.0, -2.5, 0.0, 7.0};
  const auto flipped = sf(g);
  ASSERT_EQ(flipped.size(), g.size());
  for (std::size_t u = 0; u < g.size(); ++u) {
    EXPECT_DOUBLE_EQ(flipped[u] + g[u], 0.0);
  }
  EXPECT_EQ(sf(flipped), g);
}

Dataset tiny_dataset(int classes) {
  Dataset ds;
  ds.classes = classes;
  for (int i = 0; i < classes; ++i) {
    ds.features.push_back({static_cast<double>(i)});
    ds.labels.push_back(i);
  }
  return ds;
}

TEST(LabelFlip, MirrorsLabelsAndIsAnInvolution) {
  const Dataset two = tiny_dataset(2);
  const Dataset flipped2 = lf(two);
  EXPECT_EQ(flipped2.labels, (std::vector<int>{1, 0}));
  EXPECT_EQ(flipped2.features, two.features);
  EXPECT_EQ(lf(flipped2).labels, two.labels);

  Dataset ten = tiny_dataset(10);
  ten.labels = {3, 0, 9, 4};
  ten.features.resize(4, {0.0});
  const Dataset flipped10 = lf(ten);
  EXPECT_EQ(flipped10.labels, (std::vector<int>{6, 9, 0, 5}));
  EXPECT_EQ(lf(flipped10).labels, ten.labels);
}

TEST(LabelFlip, RejectsDegenerateLabelSpaces) {
  EXPECT_THROW(lf(tiny_dataset(1)), InvalidAttackTarget);
}

TEST(RandomNoise, ScaleAndDeterminism) {
  Rng a(42), b(42);
  const auto x = random_noise(6, 10.0, a);
  const auto y = random_noise(6, 10.0, b);
  EXPECT_EQ(x, y);
  ASSERT_EQ(x.size(), 6u);
  Rng c(43);
  const auto zeros = random_noise(6, 0.0, c);
  for (double v : zeros) EXPECT_DOUBLE_EQ(v, 0.0);
  // Scale multiplies the draw linearly for a shared generator state.
  Rng d1(44), d2(44);
  const auto s1 = random_noise(4, 1.0, d1);
  const auto s5 = random_noise(4, 5.0, d2);
  for (std::size_t u = 0; u < 4; ++u) EXPECT_DOUBLE_EQ(s5[u], 5.0 * s1[u]);
}

}  // namespace
}  // namespace byzagg
