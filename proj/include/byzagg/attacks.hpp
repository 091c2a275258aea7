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

#include <cmath>
#include <span>
#include <vector>

#include "byzagg/data.hpp"
#include "byzagg/errors.hpp"
#include "byzagg/robust_agg.hpp"
#include "byzagg/rng.hpp"
#include "byzagg/stats.hpp"

namespace byzagg {

// Byzantine strategies.  The first four corrupt the *input* gradients (or the
// training data); the last three corrupt protocol messages or send noise and
// are realized by the simulator's corruption switches.
enum class AttackKind {
  None,
  Alie,                // mean minus tau * std, tau optimized per round
  Foe,                 // -epsilon * mean, epsilon optimized per round
  SignFlip,            // negated own gradient
  LabelFlip,           // training labels y -> L-1-y
  RandomNoise,         // isotropic Gaussian junk gradient
  ShareCorruption,     // garbage secret shares (distance/aggregate steps)
  ResponseCorruption,  // garbage sum-retrieval responses
};

inline std::vector<double> default_attack_grid() {
  std::vector<double> grid;
  for (int i = 1; i <= 20; ++i) grid.push_back(0.5 * i);
  return grid;
}

struct AttackSpec {
  AttackKind kind = AttackKind::None;
  std::vector<double> grid = default_attack_grid();  // tau / epsilon candidates
  RuleSpec target;                                   // rule the attack optimizes against
  double noise_scale = 10.0;                         // RandomNoise magnitude
};

namespace detail {

// Damage of a candidate Byzantine vector: Euclidean distance between the
// rule's output when b attackers submit the candidate and its output on the
// honest gradients alone.
inline double attack_damage(const std::vector<std::vector<double>>& honest, int b,
                            std::span<const double> candidate, RuleSpec rule) {
  std::vector<std::vector<double>> attacked = honest;
  attacked.insert(attacked.end(), static_cast<std::size_t>(b),
                  std::vector<double>(candidate.begin(), candidate.end()));
  const std::vector<double> with_attack = aggregate_plaintext(attacked, b, rule);
  const std::vector<double> without = aggregate_plaintext(honest, b, rule);
  double norm2 = 0.0;
  for (std::size_t u = 0; u < without.size(); ++u) {
    const double diff = with_attack[u] - without[u];
    norm2 += diff * diff;
  }
  return std::sqrt(norm2);
}

inline std::vector<double> column_mean(const std::vector<std::vector<double>>& vectors) {
  if (vectors.empty()) throw ConfigInvalid("attack: need at least one honest gradient");
  std::vector<double> mu(vectors[0].size(), 0.0);
  for (const auto& v : vectors) {
    for (std::size_t u = 0; u < mu.size(); ++u) mu[u] += v[u];
  }
  for (auto& x : mu) x /= static_cast<double>(vectors.size());
  return mu;
}

}  // namespace detail

// "A little is enough": all b attackers submit mu_H - tau * sigma_H with the
// per-coordinate honest mean and standard deviation, tau chosen from the grid
// to maximize the damage metric (first grid point wins ties).
inline std::vector<double> alie(const std::vector<std::vector<double>>& honest, int b,
                                std::span<const double> grid, RuleSpec rule) {
  const std::vector<double> mu = detail::column_mean(honest);
  std::vector<double> sigma(mu.size(), 0.0);
  std::vector<double> column(honest.size());
  for (std::size_t u = 0; u < mu.size(); ++u) {
    for (std::size_t i = 0; i < honest.size(); ++i) column[i] = honest[i][u];
    sigma[u] = sample_stddev(column);
  }
  std::vector<double> best = mu;
  double best_damage = -1.0;
  std::vector<double> candidate(mu.size());
  for (double tau : grid) {
    for (std::size_t u = 0; u < mu.size(); ++u) candidate[u] = mu[u] - tau * sigma[u];
    const double damage = detail::attack_damage(honest, b, candidate, rule);
    if (damage > best_damage) {
      best_damage = damage;
      best = candidate;
    }
  }
  return best;
}

// "Fall of empires": all b attackers submit -epsilon * mu_H, epsilon chosen
// from the grid by the same damage metric.
inline std::vector<double> foe(const std::vector<std::vector<double>>& honest, int b,
                               std::span<const double> grid, RuleSpec rule) {
  const std::vector<double> mu = detail::column_mean(honest);
  std::vector<double> best(mu.size(), 0.0);
  double best_damage = -1.0;
  std::vector<double> candidate(mu.size());
  for (double eps : grid) {
    for (std::size_t u = 0; u < mu.size(); ++u) candidate[u] = -eps * mu[u];
    const double damage = detail::attack_damage(honest, b, candidate, rule);
    if (damage > best_damage) {
      best_damage = damage;
      best = candidate;
    }
  }
  return best;
}

// Sign flipping: the attacker computes its honest gradient and negates it.
inline std::vector<double> sf(std::span<const double> own_gradient) {
  std::vector<double> out(own_gradient.begin(), own_gradient.end());
  for (auto& x : out) x = -x;
  return out;
}

// Label flipping: y -> L-1-y on the attacker's local data before training.
inline Dataset lf(const Dataset& ds) {
  if (ds.classes < 2) throw InvalidAttackTarget("label flipping needs a classification dataset");
  ds.validate();
  Dataset out = ds;
  for (auto& y : out.labels) y = ds.classes - 1 - y;
  return out;
}

inline std::vector<double> random_noise(std::size_t d, double scale, Rng& rng) {
  std::vector<double> out(d);
  for (auto& x : out) x = scale * rng.normal();
  return out;
}

}  // namespace byzagg
