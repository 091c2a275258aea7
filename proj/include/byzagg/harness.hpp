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
//
// Federated training harness: drives full-batch logistic-regression rounds
// through either the secure protocol or the plaintext oracle aggregation
// path, applies the configured attack, and records per-epoch metrics.

#ifndef BYZAGG_HARNESS_HPP_
#define BYZAGG_HARNESS_HPP_

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "byzagg/attacks.hpp"
#include "byzagg/config.hpp"
#include "byzagg/data.hpp"
#include "byzagg/logreg.hpp"
#include "byzagg/protocol.hpp"
#include "byzagg/stats.hpp"
#include "byzagg/zo.hpp"

namespace byzagg {

struct MetricsRow {
  std::uint64_t seed = 0;
  int epoch = 0;  // 1-based
  double test_acc = 0.0;
  double train_loss = 0.0;
  std::uint64_t bytes_user = 0;  // bytes sent by one honest client this epoch
  std::uint64_t bytes_fed = 0;   // bytes sent by the federator this epoch
  double wall_ms = 0.0;
};

inline constexpr const char* kCsvHeader =
    "seed,epoch,test_acc,train_loss,bytes_user,bytes_fed,wall_ms";

struct SeedOutcome {
  std::uint64_t seed = 0;
  bool failed = false;        // protocol aborted or aggregate undecodable
  std::string fail_reason;
  double max_acc = 0.0;       // best test accuracy seen before any failure
};

struct ExperimentResult {
  std::vector<MetricsRow> rows;       // seed-major, epochs in order
  std::vector<SeedOutcome> outcomes;  // one per configured seed
  double mean_max_acc = 0.0;          // over non-failed seeds
  double std_max_acc = 0.0;
};

namespace detail {

// Shortest round-trip decimal form: deterministic across runs and platforms
// with the same floating-point behavior, and stable under re-parsing.
inline std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

}  // namespace detail

inline void write_csv(std::ostream& out, const std::vector<MetricsRow>& rows) {
  out << kCsvHeader << '\n';
  for (const auto& r : rows) {
    out << r.seed << ',' << r.epoch << ',' << detail::format_double(r.test_acc) << ','
        << detail::format_double(r.train_loss) << ',' << r.bytes_user << ',' << r.bytes_fed << ','
        << detail::format_double(r.wall_ms) << '\n';
  }
}

inline std::string metrics_to_csv(const std::vector<MetricsRow>& rows) {
  std::ostringstream ss;
  write_csv(ss, rows);
  return ss.str();
}

namespace detail {

struct LoadedData {
  Dataset train;
  Dataset test;
};

inline LoadedData load_experiment_data(const ExperimentConfig& cfg, std::uint64_t seed) {
  LoadedData data;
  if (cfg.dataset == DatasetKind::Synthetic) {
    // One draw shares the class centers between the splits; the tail becomes
    // the held-out test set and never takes part in partitioning.
    Rng rng(mix_seed(seed, 0xDA7A));
    const Dataset pool = make_blobs(cfg.classes, cfg.features,
                                    cfg.train_samples + cfg.test_samples, cfg.separation, rng);
    std::vector<std::size_t> train_idx(static_cast<std::size_t>(cfg.train_samples));
    std::iota(train_idx.begin(), train_idx.end(), 0u);
    std::vector<std::size_t> test_idx(static_cast<std::size_t>(cfg.test_samples));
    std::iota(test_idx.begin(), test_idx.end(), static_cast<std::size_t>(cfg.train_samples));
    data.train = subset(pool, train_idx);
    data.test = subset(pool, test_idx);
  } else if (cfg.dataset == DatasetKind::Idx) {
    data.train = load_idx(cfg.idx_train_images, cfg.idx_train_labels);
    data.test = load_idx(cfg.idx_test_images, cfg.idx_test_labels);
  } else {
    data.train = load_csv(cfg.csv_train);
    data.test = load_csv(cfg.csv_test);
  }
  const int classes = std::max(data.train.classes, data.test.classes);
  data.train.classes = classes;
  data.test.classes = classes;
  if (data.train.feature_dim() != data.test.feature_dim()) {
    throw ConfigInvalid("train and test sets disagree on feature dimension");
  }
  return data;
}

inline ByzantineSpec byzantine_spec(const ExperimentConfig& cfg) {
  ByzantineSpec spec;
  if (cfg.attack.kind == AttackKind::None) return spec;
  for (int id = cfg.protocol.n - cfg.protocol.b + 1; id <= cfg.protocol.n; ++id) {
    spec.members.push_back(id);
  }
  if (cfg.attack.kind == AttackKind::ShareCorruption) spec.corrupt_distance_shares = true;
  if (cfg.attack.kind == AttackKind::ResponseCorruption) spec.corrupt_pir_responses = true;
  return spec;
}

// Local gradient by the honest procedure on the client's own (possibly
// label-flipped) data: analytic for SGD, two-point sphere estimate for ZO.
inline std::vector<double> local_gradient(const ExperimentConfig& cfg, const Dataset& data,
                                          const std::vector<double>& w,
                                          const SharedRandomness& shared, std::uint64_t seed,
                                          int id, int epoch) {
  const Dataset* view = &data;
  Dataset batch_view;
  if (cfg.batch > 0 && static_cast<std::size_t>(cfg.batch) < data.size()) {
    Rng brng(mix_seed(seed, 0xBA7Cu ^ (static_cast<std::uint64_t>(id) << 8),
                      static_cast<std::uint64_t>(epoch)));
    std::vector<std::size_t> idx(data.size());
    std::iota(idx.begin(), idx.end(), 0u);
    for (int k = 0; k < cfg.batch; ++k) {
      const std::size_t j =
          static_cast<std::size_t>(k) +
          static_cast<std::size_t>(brng.below(static_cast<std::uint64_t>(idx.size() - k)));
      std::swap(idx[static_cast<std::size_t>(k)], idx[j]);
    }
    idx.resize(static_cast<std::size_t>(cfg.batch));
    batch_view = subset(data, idx);
    view = &batch_view;
  }
  if (cfg.optimizer == Optimizer::Sgd) {
    return logreg_gradient(w, *view);
  }
  auto loss = [view](std::span<const double> wv) { return logreg_loss(wv, *view); };
  return zo_estimate(loss, w, cfg.zo, shared, static_cast<std::uint64_t>(epoch));
}

struct SeedRun {
  SeedOutcome outcome;
  std::vector<MetricsRow> rows;
};

inline SeedRun run_seed(const ExperimentConfig& cfg, std::uint64_t seed,
                        bool deterministic_timing) {
  SeedRun run;
  run.outcome.seed = seed;

  const LoadedData data = load_experiment_data(cfg, seed);
  const int n = cfg.protocol.n;
  const int b = cfg.protocol.b;
  const int d = logreg_dimension(data.train.classes, data.train.feature_dim());

  ProtocolConfig pcfg = cfg.protocol;
  pcfg.d = d;
  pcfg.validate();
  validate_field_size(pcfg.quant, d, n, b);

  Rng part_rng(mix_seed(seed, 0xD112));
  const auto parts = dirichlet_partition(data.train.labels, n, cfg.beta, part_rng);
  std::vector<Dataset> client_data(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    client_data[static_cast<std::size_t>(i)] = subset(data.train, parts[static_cast<std::size_t>(i)]);
  }

  const ByzantineSpec byz = byzantine_spec(cfg);
  if (cfg.attack.kind == AttackKind::LabelFlip) {
    for (int id : byz.members) client_data[static_cast<std::size_t>(id - 1)] =
        lf(client_data[static_cast<std::size_t>(id - 1)]);
  }

  const SharedRandomness shared(mix_seed(seed, 0x5EED));
  const Field& F = cfg.protocol.field();
  const RuleSpec rule = cfg.protocol.rule;

  std::vector<double> w(static_cast<std::size_t>(d), 0.0);
  std::vector<std::vector<double>> grads(static_cast<std::size_t>(n));

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();

    std::vector<std::vector<double>> honest;
    honest.reserve(static_cast<std::size_t>(n - b));
    for (int id = 1; id <= n; ++id) {
      grads[static_cast<std::size_t>(id - 1)] = local_gradient(
          cfg, client_data[static_cast<std::size_t>(id - 1)], w, shared, seed, id, epoch);
      if (!byz.contains(id)) honest.push_back(grads[static_cast<std::size_t>(id - 1)]);
    }

    // Input-level attacks replace the Byzantine members' gradients; message
    // level attacks leave inputs honest and corrupt protocol traffic instead.
    switch (cfg.attack.kind) {
      case AttackKind::Alie: {
        const auto g = alie(honest, b, cfg.attack.grid, rule);
        for (int id : byz.members) grads[static_cast<std::size_t>(id - 1)] = g;
        break;
      }
      case AttackKind::Foe: {
        const auto g = foe(honest, b, cfg.attack.grid, rule);
        for (int id : byz.members) grads[static_cast<std::size_t>(id - 1)] = g;
        break;
      }
      case AttackKind::SignFlip:
        for (int id : byz.members) {
          grads[static_cast<std::size_t>(id - 1)] = sf(grads[static_cast<std::size_t>(id - 1)]);
        }
        break;
      case AttackKind::RandomNoise:
        for (int id : byz.members) {
          Rng arng(mix_seed(seed, 0xA77Cu ^ (static_cast<std::uint64_t>(id) << 8),
                            static_cast<std::uint64_t>(epoch)));
          grads[static_cast<std::size_t>(id - 1)] =
              random_noise(d, cfg.attack.noise_scale, arng);
        }
        break;
      default:
        break;  // none / label-flip / message-level: inputs stay as computed
    }

    // Quantizer streams are keyed by (seed, client, epoch) so the protocol
    // and plaintext paths consume identical draws and stay bit-compatible.
    std::vector<std::vector<fe>> field_grads(static_cast<std::size_t>(n));
    std::vector<std::vector<std::int64_t>> int_grads(static_cast<std::size_t>(n));
    for (int id = 1; id <= n; ++id) {
      Rng qrng(mix_seed(seed, 0x9A37u ^ (static_cast<std::uint64_t>(id) << 8),
                        static_cast<std::uint64_t>(epoch)));
      const auto q = quantize(grads[static_cast<std::size_t>(id - 1)], cfg.protocol.quant, qrng);
      auto& ints = int_grads[static_cast<std::size_t>(id - 1)];
      ints.resize(q.values.size());
      for (std::size_t u = 0; u < q.values.size(); ++u) ints[u] = F.unembed(q.values[u]);
      field_grads[static_cast<std::size_t>(id - 1)] = std::move(q.values);
    }

    std::vector<double> aggregate;
    std::uint64_t bytes_user = 0, bytes_fed = 0;
    if (cfg.use_protocol) {
      const RoundResult res = run_round(pcfg, field_grads, byz, shared,
                                        static_cast<std::uint64_t>(epoch), seed);
      if (res.aborted) {
        run.outcome.failed = true;
        run.outcome.fail_reason = res.abort_reason;
        break;
      }
      if (!res.dequantize_ok) {
        run.outcome.failed = true;
        run.outcome.fail_reason = "aggregate outside the dequantization range";
        break;
      }
      aggregate = res.aggregate;
      bytes_user = res.bytes_sent[1];  // client 1 is honest: attackers get top ids
      bytes_fed = res.bytes_sent[0];
    } else {
      const auto qa = aggregate_quantized(int_grads, b, rule);
      aggregate = normalize_aggregate(cfg.protocol.quant, qa.sum, qa.summands);
    }

    for (std::size_t u = 0; u < w.size(); ++u) w[u] -= cfg.eta * aggregate[u];

    MetricsRow row;
    row.seed = seed;
    row.epoch = epoch;
    row.test_acc = logreg_accuracy(w, data.test);
    row.train_loss = logreg_loss(w, data.train);
    row.bytes_user = bytes_user;
    row.bytes_fed = bytes_fed;
    if (!deterministic_timing) {
      row.wall_ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - t0)
                        .count();
    }
    run.rows.push_back(row);
    run.outcome.max_acc = std::max(run.outcome.max_acc, row.test_acc);
  }
  return run;
}

}  // namespace detail

// Runs every configured seed (in parallel up to the BYZAGG_THREADS cap) and
// assembles rows in seed order, so output bytes never depend on scheduling.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                       bool deterministic_timing = false) {
  cfg.validate();
  ExperimentConfig effective = cfg;
  apply_environment(effective);

  const std::size_t count = effective.seeds.size();
  std::vector<detail::SeedRun> runs(count);
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const int cap = environment_thread_cap(static_cast<int>(hw));
  const std::size_t workers = std::min(count, static_cast<std::size_t>(std::max(1, cap)));

  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mu;
  auto work = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        runs[i] = detail::run_seed(effective, effective.seeds[i], deterministic_timing);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  ExperimentResult result;
  std::vector<double> maxima;
  for (auto& run : runs) {
    result.outcomes.push_back(run.outcome);
    if (!run.outcome.failed) maxima.push_back(run.outcome.max_acc);
    result.rows.insert(result.rows.end(), run.rows.begin(), run.rows.end());
  }
  if (!maxima.empty()) {
    result.mean_max_acc = mean(maxima);
    result.std_max_acc = maxima.size() > 1 ? sample_stddev(maxima) : 0.0;
  }
  return result;
}

}  // namespace byzagg

#endif  // BYZAGG_HARNESS_HPP_
