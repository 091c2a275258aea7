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

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

#include "byzagg/errors.hpp"

namespace byzagg {

// Distance-based selection works on 0-based positions; the protocol layer
// maps positions to client ids.  Tie-breaks are always by ascending position,
// which coincides with ascending client id.

template <typename T>
struct DistanceMatrix {
  int n = 0;
  std::vector<T> cells;

  DistanceMatrix() = default;
  explicit DistanceMatrix(int size)
      : n(size), cells(static_cast<std::size_t>(size) * static_cast<std::size_t>(size), T{}) {}

  T& at(int j, int l) { return cells[static_cast<std::size_t>(j) * n + l]; }
  const T& at(int j, int l) const { return cells[static_cast<std::size_t>(j) * n + l]; }
};

namespace detail {

// Exact accumulator for selection decisions: 128-bit for integer distances
// (sums of field-bounded squares can exceed 64 bits), double for reals.
template <typename T>
struct WideSum {
  using type = T;
};
template <>
struct WideSum<std::int64_t> {
  using type = __int128;
};
template <>
struct WideSum<std::uint64_t> {
  using type = unsigned __int128;
};

}  // namespace detail

// Exact squared Euclidean distances.  Integer inputs must be small enough
// that each squared distance fits the element type (guaranteed for quantized
// gradients by the field-size bound).
template <typename T>
DistanceMatrix<T> pairwise_distances(const std::vector<std::vector<T>>& vectors) {
  const int n = static_cast<int>(vectors.size());
  DistanceMatrix<T> dist(n);
  for (int j = 0; j < n; ++j) {
    if (vectors[static_cast<std::size_t>(j)].size() != vectors[0].size()) {
      throw ConfigInvalid("pairwise_distances: dimension mismatch");
    }
    for (int l = j + 1; l < n; ++l) {
      T acc{};
      const auto& a = vectors[static_cast<std::size_t>(j)];
      const auto& b = vectors[static_cast<std::size_t>(l)];
      for (std::size_t u = 0; u < a.size(); ++u) {
        const T diff = a[u] - b[u];
        acc += diff * diff;
      }
      dist.at(j, l) = acc;
      dist.at(l, j) = acc;
    }
  }
  return dist;
}

// Per client j, the positions of the n-b nearest vectors (self included: the
// zero self-distance sorts first), nearest first, ties by ascending position.
template <typename T>
std::vector<std::vector<int>> neighbor_sets(const DistanceMatrix<T>& dist, int b) {
  const int n = dist.n;
  if (b < 0 || n <= b) throw ConfigInvalid("neighbor_sets: need n > b >= 0");
  const int keep = n - b;
  std::vector<std::vector<int>> sets(static_cast<std::size_t>(n));
  std::vector<std::pair<T, int>> row(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    for (int l = 0; l < n; ++l) {
      row[static_cast<std::size_t>(l)] = {dist.at(j, l), l};
    }
    std::sort(row.begin(), row.end(), [j](const auto& a, const auto& b2) {
      if (a.first != b2.first) return a.first < b2.first;
      const int ra = a.second == j ? -1 : a.second;
      const int rb = b2.second == j ? -1 : b2.second;
      return ra < rb;
    });
    auto& set = sets[static_cast<std::size_t>(j)];
    set.reserve(static_cast<std::size_t>(keep));
    for (int k = 0; k < keep; ++k) set.push_back(row[static_cast<std::size_t>(k)].second);
  }
  return sets;
}

// Nearest-neighbor mixing: replaces each vector by the (unnormalized) sum of
// its n-b nearest, itself included.
template <typename V>
std::vector<std::vector<V>> nnm_mix(const std::vector<std::vector<V>>& vectors, int b) {
  const auto sets = neighbor_sets(pairwise_distances(vectors), b);
  std::vector<std::vector<V>> mixed(vectors.size(),
                                    std::vector<V>(vectors.empty() ? 0 : vectors[0].size(), V{}));
  for (std::size_t j = 0; j < vectors.size(); ++j) {
    for (int l : sets[j]) {
      const auto& src = vectors[static_cast<std::size_t>(l)];
      for (std::size_t u = 0; u < src.size(); ++u) mixed[j][u] += src[u];
    }
  }
  return mixed;
}

struct SelectionResult {
  std::vector<int> selected;   // positions, in selection order
  std::vector<double> scores;  // first-round score per position (for inspection)
};

namespace detail {

// Krum score of row j over candidate pool: sum of the `count` smallest
// distances from j to other pool members.  Exact arithmetic.
template <typename T>
typename WideSum<T>::type krum_score(const DistanceMatrix<T>& dist, int j,
                                     const std::vector<int>& pool, int count,
                                     std::vector<T>& scratch) {
  scratch.clear();
  for (int l : pool) {
    if (l != j) scratch.push_back(dist.at(j, l));
  }
  std::sort(scratch.begin(), scratch.end());
  typename WideSum<T>::type acc{};
  for (int k = 0; k < count; ++k) acc += scratch[static_cast<std::size_t>(k)];
  return acc;
}

}  // namespace detail

// Krum: select the single position whose summed distance to its n-b-2
// closest peers is minimal.
template <typename T>
SelectionResult krum_select(const DistanceMatrix<T>& dist, int b) {
  const int n = dist.n;
  if (b < 0 || n < b + 3) throw ConfigInvalid("krum_select: need n >= b + 3");
  const int count = n - b - 2;
  std::vector<int> pool(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i;
  SelectionResult result;
  result.scores.resize(static_cast<std::size_t>(n));
  std::vector<T> scratch;
  using W = typename detail::WideSum<T>::type;
  W best{};
  int best_j = -1;
  for (int j = 0; j < n; ++j) {
    const W score = detail::krum_score(dist, j, pool, count, scratch);
    result.scores[static_cast<std::size_t>(j)] = static_cast<double>(score);
    if (best_j < 0 || score < best) {
      best = score;
      best_j = j;
    }
  }
  result.selected = {best_j};
  return result;
}

// Multi-Krum: iteratively pick the n-2b-3 lowest-scoring positions; after
// each pick both the candidate set and every score's neighbor pool shrink to
// exclude the already-selected, with per-row pools of the n-b-|C*|-2 closest
// remaining candidates.
template <typename T>
SelectionResult multikrum_select(const DistanceMatrix<T>& dist, int b) {
  const int n = dist.n;
  if (b < 0 || n < 2 * b + 4) throw ConfigInvalid("multikrum_select: need n >= 2b + 4");
  const int target = n - 2 * b - 3;
  SelectionResult result;
  result.scores.assign(static_cast<std::size_t>(n), 0.0);
  std::vector<bool> taken(static_cast<std::size_t>(n), false);
  std::vector<T> scratch;
  using W = typename detail::WideSum<T>::type;
  for (int round = 0; round < target; ++round) {
    std::vector<int> pool;
    for (int i = 0; i < n; ++i) {
      if (!taken[static_cast<std::size_t>(i)]) pool.push_back(i);
    }
    const int count = n - b - round - 2;
    W best{};
    int best_j = -1;
    for (int j : pool) {
      const W score = detail::krum_score(dist, j, pool, count, scratch);
      if (round == 0) result.scores[static_cast<std::size_t>(j)] = static_cast<double>(score);
      if (best_j < 0 || score < best) {
        best = score;
        best_j = j;
      }
    }
    taken[static_cast<std::size_t>(best_j)] = true;
    result.selected.push_back(best_j);
  }
  return result;
}

// Coordinate-wise trimmed mean: drop the b smallest and b largest values per
// coordinate, average the rest.
inline std::vector<double> trimmed_mean(const std::vector<std::vector<double>>& vectors, int b) {
  const int n = static_cast<int>(vectors.size());
  if (b < 0 || n <= 2 * b) throw ConfigInvalid("trimmed_mean: need n > 2b");
  const std::size_t d = vectors.empty() ? 0 : vectors[0].size();
  std::vector<double> out(d, 0.0);
  std::vector<double> column(static_cast<std::size_t>(n));
  for (std::size_t u = 0; u < d; ++u) {
    for (int i = 0; i < n; ++i) {
      if (vectors[static_cast<std::size_t>(i)].size() != d) {
        throw ConfigInvalid("trimmed_mean: dimension mismatch");
      }
      column[static_cast<std::size_t>(i)] = vectors[static_cast<std::size_t>(i)][u];
    }
    std::sort(column.begin(), column.end());
    double acc = 0.0;
    for (int i = b; i < n - b; ++i) acc += column[static_cast<std::size_t>(i)];
    out[u] = acc / static_cast<double>(n - 2 * b);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Rule composition
// ---------------------------------------------------------------------------

enum class AggRule {
  Krum,
  MultiKrum,
  Average,  // unweighted baseline: selects everyone
};

struct RuleSpec {
  AggRule rule = AggRule::Krum;
  bool nnm = true;
};

namespace detail {

template <typename T>
std::vector<int> select_positions(const DistanceMatrix<T>& dist, int b, AggRule rule) {
  switch (rule) {
    case AggRule::Krum:
      return krum_select(dist, b).selected;
    case AggRule::MultiKrum:
      return multikrum_select(dist, b).selected;
    case AggRule::Average: {
      std::vector<int> all(static_cast<std::size_t>(dist.n));
      for (int i = 0; i < dist.n; ++i) all[static_cast<std::size_t>(i)] = i;
      return all;
    }
  }
  throw ConfigInvalid("unknown aggregation rule");
}

}  // namespace detail

// Reference pipeline on quantized (integer) gradients; this is the oracle the
// private protocol must match value-for-value.
struct QuantizedAggregate {
  std::vector<int> selected;                    // positions, selection order
  std::vector<std::vector<int>> neighbors;      // per position (empty if nnm off)
  DistanceMatrix<std::int64_t> input_distances;
  DistanceMatrix<std::int64_t> mixture_distances;
  std::vector<std::int64_t> sum;                // sum over selected mixtures/inputs
  std::uint64_t summands = 1;                   // quantized gradients per output entry
};

inline QuantizedAggregate aggregate_quantized(const std::vector<std::vector<std::int64_t>>& inputs,
                                              int b, RuleSpec spec) {
  const int n = static_cast<int>(inputs.size());
  if (n < 1) throw ConfigInvalid("aggregate_quantized: no inputs");
  QuantizedAggregate out;
  out.input_distances = pairwise_distances(inputs);
  const std::vector<std::vector<std::int64_t>>* basis = &inputs;
  std::vector<std::vector<std::int64_t>> mixed;
  if (spec.nnm) {
    out.neighbors = neighbor_sets(out.input_distances, b);
    mixed.assign(inputs.size(), std::vector<std::int64_t>(inputs[0].size(), 0));
    for (std::size_t j = 0; j < inputs.size(); ++j) {
      for (int l : out.neighbors[j]) {
        for (std::size_t u = 0; u < inputs[0].size(); ++u) {
          mixed[j][u] += inputs[static_cast<std::size_t>(l)][u];
        }
      }
    }
    basis = &mixed;
    out.mixture_distances = pairwise_distances(mixed);
  } else {
    out.mixture_distances = out.input_distances;
  }
  out.selected = detail::select_positions(out.mixture_distances, b, spec.rule);
  out.sum.assign(inputs[0].size(), 0);
  for (int j : out.selected) {
    for (std::size_t u = 0; u < inputs[0].size(); ++u) {
      out.sum[u] += (*basis)[static_cast<std::size_t>(j)][u];
    }
  }
  out.summands = static_cast<std::uint64_t>(out.selected.size()) *
                 (spec.nnm ? static_cast<std::uint64_t>(n - b) : 1u);
  return out;
}

// Real-domain pipeline with the matching normalization: the mean of the
// selected (mixed) vectors, where mixtures are divided by their n-b summands.
inline std::vector<double> aggregate_plaintext(const std::vector<std::vector<double>>& inputs,
                                               int b, RuleSpec spec) {
  const int n = static_cast<int>(inputs.size());
  if (n < 1) throw ConfigInvalid("aggregate_plaintext: no inputs");
  const std::vector<std::vector<double>>* basis = &inputs;
  std::vector<std::vector<double>> mixed;
  if (spec.nnm) {
    mixed = nnm_mix(inputs, b);
    basis = &mixed;
  }
  std::vector<int> selected;
  if (spec.rule == AggRule::Average) {
    selected.resize(inputs.size());
    for (int i = 0; i < n; ++i) selected[static_cast<std::size_t>(i)] = i;
  } else {
    selected = detail::select_positions(pairwise_distances(*basis), b, spec.rule);
  }
  std::vector<double> out(inputs[0].size(), 0.0);
  for (int j : selected) {
    for (std::size_t u = 0; u < out.size(); ++u) out[u] += (*basis)[static_cast<std::size_t>(j)][u];
  }
  const double denom = static_cast<double>(selected.size()) *
                       (spec.nnm ? static_cast<double>(n - b) : 1.0);
  for (auto& v : out) v /= denom;
  return out;
}

// Robustness constant of the NNM-composed rule given the inner rule's kappa:
// kappa' = (8b / (n-b)) * (kappa + 1).
inline double composed_kappa(int n, int b, double inner_kappa) {
  if (n <= b) throw ConfigInvalid("composed_kappa: need n > b");
  return (8.0 * static_cast<double>(b) / static_cast<double>(n - b)) * (inner_kappa + 1.0);
}

// Evaluates the robustness inequality
//   || R(g_1..g_n) - mean_H ||^2 <= (kappa / |H|) * sum_{i in H} ||g_i - mean_H||^2
// for the composed rule on the given instance.
inline bool robustness_check(RuleSpec spec, const std::vector<std::vector<double>>& vectors,
                             std::span<const int> honest, int b, double kappa) {
  const int n = static_cast<int>(vectors.size());
  if (static_cast<int>(honest.size()) != n - b) {
    throw ConfigInvalid("robustness_check: honest set must have n - b members");
  }
  const std::vector<double> output = aggregate_plaintext(vectors, b, spec);
  const std::size_t d = output.size();
  std::vector<double> mean_h(d, 0.0);
  for (int i : honest) {
    for (std::size_t u = 0; u < d; ++u) mean_h[u] += vectors[static_cast<std::size_t>(i)][u];
  }
  for (auto& v : mean_h) v /= static_cast<double>(honest.size());
  double lhs = 0.0;
  for (std::size_t u = 0; u < d; ++u) {
    const double diff = output[u] - mean_h[u];
    lhs += diff * diff;
  }
  double spread = 0.0;
  for (int i : honest) {
    for (std::size_t u = 0; u < d; ++u) {
      const double diff = vectors[static_cast<std::size_t>(i)][u] - mean_h[u];
      spread += diff * diff;
    }
  }
  const double rhs = kappa / static_cast<double>(honest.size()) * spread;
  return lhs <= rhs;
}

}  // namespace byzagg
