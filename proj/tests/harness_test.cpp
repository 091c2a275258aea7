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

#include "byzagg/harness.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <sstream>
#include <string>
#include <vector>

namespace byzagg {
namespace {

ExperimentConfig tiny_cfg() {
  ExperimentConfig cfg;
  cfg.protocol.n = 7;
  cfg.protocol.b = 2;
  cfg.protocol.z = 1;
  cfg.protocol.rule = RuleSpec{AggRule::Krum, true};
  cfg.protocol.quant.levels = 64;
  cfg.protocol.quant.clip = 2.0;
  cfg.classes = 3;
  cfg.features = 4;
  cfg.train_samples = 210;
  cfg.test_samples = 90;
  cfg.separation = 5.0;
  cfg.eta = 0.5;
  cfg.epochs = 6;
  cfg.beta = 0.5;
  cfg.seeds = {3};
  return cfg;
}

std::vector<double> trajectory(const ExperimentResult& r) {
  std::vector<double> out;
  for (const auto& row : r.rows) {
    out.push_back(row.test_acc);
    out.push_back(row.train_loss);
  }
  return out;
}

TEST(Harness, ProtocolAndPlaintextTrajectoriesMatchBitExactly) {
  for (AttackKind kind :
       {AttackKind::None, AttackKind::SignFlip, AttackKind::Alie, AttackKind::LabelFlip,
        AttackKind::ShareCorruption, AttackKind::ResponseCorruption}) {
    ExperimentConfig cfg = tiny_cfg();
    cfg.attack.kind = kind;
    cfg.attack.target = cfg.protocol.rule;
    cfg.use_protocol = true;
    const auto with_protocol = run_experiment(cfg, /*deterministic_timing=*/true);
    cfg.use_protocol = false;
    const auto plaintext = run_experiment(cfg, /*deterministic_timing=*/true);

    ASSERT_EQ(with_protocol.rows.size(), plaintext.rows.size()) << attack_name(kind);
    EXPECT_EQ(trajectory(with_protocol), trajectory(plaintext)) << attack_name(kind);
    for (const auto& row : with_protocol.rows) {
      EXPECT_GT(row.bytes_user, 0u);
      EXPECT_GT(row.bytes_fed, 0u);
    }
    for (const auto& row : plaintext.rows) {
      EXPECT_EQ(row.bytes_user, 0u);
      EXPECT_EQ(row.bytes_fed, 0u);
    }
  }
}

TEST(Harness, ProtocolMatchesPlaintextUnderZeroOrderOptimizer) {
  ExperimentConfig cfg = tiny_cfg();
  cfg.optimizer = Optimizer::Zo;
  cfg.zo.R = 16;
  cfg.zo.average_perturbations = true;
  cfg.epochs = 4;
  cfg.use_protocol = true;
  const auto with_protocol = run_experiment(cfg, true);
  cfg.use_protocol = false;
  const auto plaintext = run_experiment(cfg, true);
  EXPECT_EQ(trajectory(with_protocol), trajectory(plaintext));
}

TEST(Harness, AveragingRuleReproducesFedSgdBaseline) {
  // b = 0 with the averaging rule: the protocol curve must equal the
  // plaintext curve bit-for-bit, and epoch one must match an independently
  // recomputed quantized FedSGD step.
  ExperimentConfig cfg = tiny_cfg();
  cfg.protocol.b = 0;
  cfg.protocol.rule = RuleSpec{AggRule::Average, true};
  cfg.epochs = 3;
  cfg.use_protocol = true;
  const auto with_protocol = run_experiment(cfg, true);
  cfg.use_protocol = false;
  const auto plaintext = run_experiment(cfg, true);
  EXPECT_EQ(trajectory(with_protocol), trajectory(plaintext));

  // Manual FedSGD epoch: mean of the clients' quantized full-batch gradients.
  const std::uint64_t seed = cfg.seeds[0];
  const auto data = detail::load_experiment_data(cfg, seed);
  const int n = cfg.protocol.n;
  const int d = logreg_dimension(data.train.classes, data.train.feature_dim());
  Rng part_rng(mix_seed(seed, 0xD112));
  const auto parts = dirichlet_partition(data.train.labels, n, cfg.beta, part_rng);
  const Field& F = cfg.protocol.field();
  std::vector<double> w(static_cast<std::size_t>(d), 0.0);
  std::vector<std::int64_t> sum(static_cast<std::size_t>(d), 0);
  for (int id = 1; id <= n; ++id) {
    const Dataset local = subset(data.train, parts[static_cast<std::size_t>(id - 1)]);
    const auto g = logreg_gradient(w, local);
    Rng qrng(mix_seed(seed, 0x9A37u ^ (static_cast<std::uint64_t>(id) << 8), 1));
    const auto q = quantize(g, cfg.protocol.quant, qrng);
    for (int u = 0; u < d; ++u) {
      sum[static_cast<std::size_t>(u)] += F.unembed(q.values[static_cast<std::size_t>(u)]);
    }
  }
  std::vector<fe> sum_field(static_cast<std::size_t>(d));
  for (int u = 0; u < d; ++u) {
    sum_field[static_cast<std::size_t>(u)] = F.embed(sum[static_cast<std::size_t>(u)]);
  }
  const auto total = dequantize(sum_field, cfg.protocol.quant,
                                static_cast<std::uint64_t>(n));
  for (int u = 0; u < d; ++u) {
    w[static_cast<std::size_t>(u)] -=
        cfg.eta * total[static_cast<std::size_t>(u)] / static_cast<double>(n);
  }
  const double manual_acc = logreg_accuracy(w, data.test);
  const double manual_loss = logreg_loss(w, data.train);
  ASSERT_FALSE(plaintext.rows.empty());
  EXPECT_NEAR(plaintext.rows[0].test_acc, manual_acc, 1e-12);
  EXPECT_NEAR(plaintext.rows[0].train_loss, manual_loss, 1e-9);
}

TEST(Harness, CsvIsBitwiseReproducible) {
  ExperimentConfig cfg = tiny_cfg();
  cfg.seeds = {1, 2};
  cfg.use_protocol = true;
  const auto a = run_experiment(cfg, true);
  const auto b = run_experiment(cfg, true);
  const std::string csv_a = metrics_to_csv(a.rows);
  const std::string csv_b = metrics_to_csv(b.rows);
  EXPECT_EQ(csv_a, csv_b);
  EXPECT_EQ(csv_a.rfind(std::string(kCsvHeader) + "\n", 0), 0u);
  for (const auto& row : a.rows) EXPECT_EQ(row.wall_ms, 0.0);

  // Timed runs fill wall_ms but leave everything else untouched.
  const auto timed = run_experiment(cfg, false);
  EXPECT_EQ(trajectory(a), trajectory(timed));
}

TEST(Harness, SeedParallelismDoesNotChangeOutput) {
  ExperimentConfig cfg = tiny_cfg();
  cfg.seeds = {1, 2, 3};
  cfg.use_protocol = false;
  ASSERT_EQ(setenv("BYZAGG_THREADS", "3", 1), 0);
  const auto parallel = run_experiment(cfg, true);
  ASSERT_EQ(setenv("BYZAGG_THREADS", "1", 1), 0);
  const auto serial = run_experiment(cfg, true);
  unsetenv("BYZAGG_THREADS");
  EXPECT_EQ(metrics_to_csv(parallel.rows), metrics_to_csv(serial.rows));
}

TEST(Harness, SeedEnvironmentOverrideWins) {
  ExperimentConfig cfg = tiny_cfg();
  cfg.seeds = {1, 2, 3};
  cfg.use_protocol = false;
  ASSERT_EQ(setenv("BYZAGG_SEED", "42", 1), 0);
  const auto result = run_experiment(cfg, true);
  unsetenv("BYZAGG_SEED");
  ASSERT_EQ(result.outcomes.size(), 1u);
  EXPECT_EQ(result.outcomes[0].seed, 42u);
  for (const auto& row : result.rows) EXPECT_EQ(row.seed, 42u);
}

TEST(Harness, UndersizedFieldIsRejectedUpFront) {
  ExperimentConfig cfg = tiny_cfg();
  cfg.protocol.quant.field = Field(127);
  EXPECT_THROW(run_experiment(cfg, true), FieldTooSmall);
}

TEST(Harness, MiniBatchKnobIsDeterministicAndDistinct) {
  ExperimentConfig cfg = tiny_cfg();
  cfg.use_protocol = false;
  cfg.batch = 8;
  const auto a = run_experiment(cfg, true);
  const auto b = run_experiment(cfg, true);
  EXPECT_EQ(trajectory(a), trajectory(b));
  cfg.batch = 0;
  const auto full = run_experiment(cfg, true);
  EXPECT_NE(trajectory(a), trajectory(full));
}

TEST(Harness, NoAttackRunLearnsTheTask) {
  ExperimentConfig cfg = tiny_cfg();
  cfg.use_protocol = false;
  cfg.separation = 6.0;
  cfg.epochs = 40;
  const auto result = run_experiment(cfg, true);
  ASSERT_EQ(result.outcomes.size(), 1u);
  EXPECT_FALSE(result.outcomes[0].failed);
  EXPECT_GT(result.outcomes[0].max_acc, 0.9);
  EXPECT_GT(result.mean_max_acc, 0.9);
}

TEST(Harness, SummaryStatisticsAggregateAcrossSeeds) {
  ExperimentConfig cfg = tiny_cfg();
  cfg.use_protocol = false;
  cfg.seeds = {1, 2, 3};
  cfg.epochs = 10;
  const auto result = run_experiment(cfg, true);
  ASSERT_EQ(result.outcomes.size(), 3u);
  std::vector<double> maxima;
  for (const auto& o : result.outcomes) {
    EXPECT_FALSE(o.failed);
    maxima.push_back(o.max_acc);
  }
  EXPECT_DOUBLE_EQ(result.mean_max_acc, mean(maxima));
  EXPECT_DOUBLE_EQ(result.std_max_acc, sample_stddev(maxima));
  EXPECT_EQ(result.rows.size(), 30u);
}

TEST(Config, ParserRoundTripsAndValidates) {
  std::istringstream in(
      "# experiment\n"
      "n = 10\n"
      "b = 2\n"
      "z = 1\n"
      "rule = multikrum   # trailing comment\n"
      "nnm = true\n"
      "attack = foe\n"
      "optimizer = zo\n"
      "zo_r = 32\n"
      "eta = 0.25\n"
      "epochs = 12\n"
      "beta = 0.3\n"
      "levels = 128\n"
      "clip = 1.5\n"
      "seeds = 4, 5, 6\n"
      "output = out.csv\n");
  const ExperimentConfig cfg = parse_config(in);
  EXPECT_EQ(cfg.protocol.n, 10);
  EXPECT_EQ(cfg.protocol.b, 2);
  EXPECT_EQ(cfg.protocol.rule.rule, AggRule::MultiKrum);
  EXPECT_TRUE(cfg.protocol.rule.nnm);
  EXPECT_EQ(cfg.attack.kind, AttackKind::Foe);
  EXPECT_EQ(cfg.optimizer, Optimizer::Zo);
  EXPECT_EQ(cfg.zo.R, 32);
  EXPECT_DOUBLE_EQ(cfg.eta, 0.25);
  EXPECT_EQ(cfg.epochs, 12);
  EXPECT_DOUBLE_EQ(cfg.beta, 0.3);
  EXPECT_EQ(cfg.protocol.quant.levels, 128u);
  EXPECT_DOUBLE_EQ(cfg.protocol.quant.clip, 1.5);
  EXPECT_EQ(cfg.seeds, (std::vector<std::uint64_t>{4, 5, 6}));
  EXPECT_EQ(cfg.output, "out.csv");
  cfg.validate();
}

TEST(Config, ParserRejectsMalformedInput) {
  {
    std::istringstream in("nonsense_key = 1\n");
    EXPECT_THROW(parse_config(in), ParseError);
  }
  {
    std::istringstream in("n 9\n");
    EXPECT_THROW(parse_config(in), ParseError);
  }
  {
    std::istringstream in("epochs = soon\n");
    EXPECT_THROW(parse_config(in), ParseError);
  }
  {
    std::istringstream in("rule = median\n");
    EXPECT_THROW(parse_config(in), ParseError);
  }
  {
    std::istringstream in("nnm = maybe\n");
    EXPECT_THROW(parse_config(in), ParseError);
  }
}

TEST(Config, ValidationCatchesBadCombinations) {
  ExperimentConfig cfg = tiny_cfg();
  cfg.eta = -1.0;
  EXPECT_THROW(cfg.validate(), ConfigInvalid);
  cfg = tiny_cfg();
  cfg.protocol.n = 6;  // violates n > 3b for b = 2
  EXPECT_THROW(cfg.validate(), ConfigInvalid);
  cfg = tiny_cfg();
  cfg.seeds.clear();
  EXPECT_THROW(cfg.validate(), ConfigInvalid);
  cfg = tiny_cfg();
  cfg.dataset = DatasetKind::Idx;
  EXPECT_THROW(cfg.validate(), ConfigInvalid);
  cfg = tiny_cfg();
  cfg.optimizer = Optimizer::Zo;
  cfg.zo.R = 0;
  EXPECT_THROW(cfg.validate(), ConfigInvalid);
  // Adaptive attacks run the rule on the n-b honest gradients alone, so
  // Multi-Krum at n=9, b=2 (7 honest < 2b+4) must be rejected up front.
  cfg = tiny_cfg();
  cfg.protocol.n = 9;
  cfg.protocol.rule = RuleSpec{AggRule::MultiKrum, true};
  cfg.attack.kind = AttackKind::Foe;
  EXPECT_THROW(cfg.validate(), ConfigInvalid);
  cfg.protocol.n = 10;  // 8 honest meets the floor
  EXPECT_NO_THROW(cfg.validate());
}

}  // namespace
}  // namespace byzagg
