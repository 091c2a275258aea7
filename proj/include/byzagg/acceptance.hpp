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
// Release acceptance suite: nine end-to-end checks covering correctness,
// error correction, quantization, privacy, robustness, communication
// scaling, training trends, the zero-order estimator, and determinism.
// Each criterion reports one pass/fail line; `selftest` and the test suite
// both drive these functions.

#ifndef BYZAGG_ACCEPTANCE_HPP_
#define BYZAGG_ACCEPTANCE_HPP_

#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "byzagg/harness.hpp"
#include "byzagg/poly.hpp"
#include "byzagg/protocol.hpp"
#include "byzagg/stats.hpp"

namespace byzagg {
namespace acceptance {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
};

namespace detail {

class Timer {
 public:
  Timer() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

inline std::string fmt(double x, int precision = 3) {
  std::ostringstream ss;
  ss << std::setprecision(precision) << std::fixed << x;
  return ss.str();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Criterion 1: the protocol's field-domain aggregate equals the plaintext
// quantized-domain composition bit-exactly, across every implemented
// Byzantine message-corruption strategy, for Krum and Multi-Krum.
// ---------------------------------------------------------------------------
inline CriterionResult c1_oracle_equivalence() {
  CriterionResult r{1, "oracle-equivalence", false, ""};
  const detail::Timer timer;

  struct Strategy {
    const char* name;
    void (*apply)(ByzantineSpec&);
  };
  static const Strategy kStrategies[] = {
      {"honest-messages", [](ByzantineSpec&) {}},
      {"false-complaints", [](ByzantineSpec& s) { s.false_vss_complaints = true; }},
      {"distance-garbage", [](ByzantineSpec& s) { s.corrupt_distance_shares = true; }},
      {"response-garbage", [](ByzantineSpec& s) { s.corrupt_pir_responses = true; }},
      {"aggregate-garbage", [](ByzantineSpec& s) { s.corrupt_aggregate_shares = true; }},
      {"all-message-garbage",
       [](ByzantineSpec& s) {
         s.false_vss_complaints = true;
         s.corrupt_distance_shares = true;
         s.corrupt_pir_responses = true;
         s.corrupt_aggregate_shares = true;
       }},
      {"inconsistent-dealing", [](ByzantineSpec& s) { s.corrupt_dealing = true; }},
  };

  long long rounds = 0;
  auto run_rule = [&](AggRule rule, int n, std::string* why) -> bool {
    ProtocolConfig cfg;
    cfg.n = n;
    cfg.b = 2;
    cfg.z = 1;
    cfg.d = 8;
    cfg.rule = RuleSpec{rule, true};
    cfg.quant.levels = 32;
    cfg.quant.clip = 1.0;
    const Field& F = cfg.field();
    const std::int64_t max_idx = cfg.quant.max_index();

    for (std::uint64_t seed = 1; seed <= 200; ++seed) {
      for (std::size_t s = 0; s < std::size(kStrategies); ++s) {
        Rng rng(mix_seed(seed, 0xACC1, s, static_cast<std::uint64_t>(rule)));
        std::vector<std::vector<fe>> grads(static_cast<std::size_t>(n));
        ByzantineSpec byz;
        byz.members = {n - 1, n};
        kStrategies[s].apply(byz);
        for (int id = 1; id <= n; ++id) {
          auto& g = grads[static_cast<std::size_t>(id - 1)];
          g.resize(static_cast<std::size_t>(cfg.d));
          if (byz.contains(id)) {
            // Arbitrary grid points, including the extremes.
            for (auto& x : g) {
              const std::int64_t k = static_cast<std::int64_t>(
                                         rng.below(static_cast<std::uint64_t>(2 * max_idx + 1))) -
                                     max_idx;
              x = F.embed(k);
            }
          } else {
            std::vector<double> real(static_cast<std::size_t>(cfg.d));
            for (auto& x : real) x = 2.0 * rng.real() - 1.0;
            g = quantize(real, cfg.quant, rng).values;
          }
        }
        const SharedRandomness shared(mix_seed(seed, 0x511A, s));
        const RoundResult res = run_round(cfg, grads, byz, shared, 1, seed);
        ++rounds;
        if (res.aborted) {
          *why = std::string("round aborted under ") + kStrategies[s].name + ": " +
                 res.abort_reason;
          return false;
        }
        // Oracle on the surviving inputs with the surviving budget.
        std::vector<std::vector<std::int64_t>> ints;
        for (int id : res.active) {
          const auto& g = grads[static_cast<std::size_t>(id - 1)];
          std::vector<std::int64_t> row(g.size());
          for (std::size_t u = 0; u < g.size(); ++u) row[u] = F.unembed(g[u]);
          ints.push_back(std::move(row));
        }
        const int b_eff = cfg.b - static_cast<int>(res.excluded.size());
        const auto oracle = aggregate_quantized(ints, b_eff, cfg.rule);
        std::vector<int> oracle_ids;
        for (int pos : oracle.selected) {
          oracle_ids.push_back(res.active[static_cast<std::size_t>(pos)]);
        }
        bool same = oracle_ids == res.selected && oracle.summands == res.summands &&
                    oracle.sum == res.aggregate_int;
        for (std::size_t u = 0; same && u < oracle.sum.size(); ++u) {
          same = res.aggregate_field[u] == F.embed(oracle.sum[u]);
        }
        if (same) {
          const auto normalized =
              normalize_aggregate(cfg.quant, oracle.sum, oracle.summands);
          same = res.dequantize_ok && normalized == res.aggregate;
        }
        if (!same) {
          *why = std::string("mismatch vs plaintext oracle, strategy ") + kStrategies[s].name +
                 ", seed " + std::to_string(seed);
          return false;
        }
      }
    }
    return true;
  };

  std::string why;
  if (!run_rule(AggRule::Krum, 7, &why)) {
    r.detail = "krum: " + why;
    return r;
  }
  if (!run_rule(AggRule::MultiKrum, 8, &why)) {
    r.detail = "multikrum: " + why;
    return r;
  }
  const double secs = timer.seconds();
  r.pass = secs < 120.0;
  r.detail = std::to_string(rounds) + " rounds (200 seeds x " +
             std::to_string(std::size(kStrategies)) +
             " corruption strategies, krum n=7 + multikrum n=8) all bit-exact vs the "
             "plaintext oracle in " +
             detail::fmt(secs, 1) + "s" + (r.pass ? "" : " (budget 120s exceeded)");
  return r;
}

// ---------------------------------------------------------------------------
// Criterion 2: degree-2z distance decoding corrects exactly b corruptions and
// fails loudly (never silently wrong) at b+1.
// ---------------------------------------------------------------------------
inline CriterionResult c2_error_correction() {
  CriterionResult r{2, "error-correction", false, ""};
  const Field F = Field::mersenne61();
  const int z = 1, b = 2, n = 7;  // n = 2z + 2b + 1: the protocol's decode shape
  std::vector<fe> xs;
  for (int j = 1; j <= n; ++j) xs.push_back(static_cast<fe>(j));

  Rng rng(0xC2C2);
  int recovered = 0, wrong = 0, loud = 0;
  const int trials = 1000;
  for (int t = 0; t < trials; ++t) {
    Polynomial p;
    for (int k = 0; k <= 2 * z; ++k) p.c.push_back(F.uniform(rng));
    std::vector<fe> clean(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) clean[static_cast<std::size_t>(j)] = poly_eval(F, p, xs[static_cast<std::size_t>(j)]);

    auto corrupt = [&](int count) {
      std::vector<fe> ys = clean;
      std::vector<int> pos(static_cast<std::size_t>(n));
      std::iota(pos.begin(), pos.end(), 0);
      for (int k = 0; k < count; ++k) {
        const std::size_t j = static_cast<std::size_t>(k) + static_cast<std::size_t>(rng.below(
                                                                static_cast<std::uint64_t>(n - k)));
        std::swap(pos[static_cast<std::size_t>(k)], pos[j]);
      }
      for (int k = 0; k < count; ++k) {
        auto& y = ys[static_cast<std::size_t>(pos[static_cast<std::size_t>(k)])];
        fe delta = F.uniform(rng);
        while (delta == 0) delta = F.uniform(rng);
        y = F.add(y, delta);
      }
      return ys;
    };

    {
      const auto ys = corrupt(b);
      try {
        const Polynomial dec = rs_decode(F, xs, ys, 2 * z, b);
        bool same = true;
        for (int j = 0; j < n; ++j) {
          same = same && poly_eval(F, dec, xs[static_cast<std::size_t>(j)]) ==
                             clean[static_cast<std::size_t>(j)];
        }
        if (same) {
          ++recovered;
        } else {
          ++wrong;
        }
      } catch (const DecodingFailure&) {
        // Failing to correct a correctable word counts against recovery.
      }
    }
    {
      const auto ys = corrupt(b + 1);
      try {
        const Polynomial dec = rs_decode(F, xs, ys, 2 * z, b);
        bool same = true;
        for (int j = 0; j < n; ++j) {
          same = same && poly_eval(F, dec, xs[static_cast<std::size_t>(j)]) ==
                             clean[static_cast<std::size_t>(j)];
        }
        // The true word is at distance b+1, beyond the budget; any decode
        // here returned a different codeword, i.e. a silent wrong value.
        if (!same) ++wrong;
      } catch (const DecodingFailure&) {
        ++loud;
      }
    }
  }
  r.pass = recovered == trials && wrong == 0 && loud >= (trials * 95) / 100;
  r.detail = std::to_string(recovered) + "/" + std::to_string(trials) +
             " corrected at b corruptions, " + std::to_string(loud) + "/" +
             std::to_string(trials) + " loud failures at b+1 (>=950 required), " +
             std::to_string(wrong) + " wrong-value acceptances (0 required)";
  return r;
}

// ---------------------------------------------------------------------------
// Criterion 3: stochastic quantization is empirically unbiased on grid
// interior values (3-standard-error band, small multiple-testing allowance).
// ---------------------------------------------------------------------------
inline CriterionResult c3_quantizer_unbiasedness() {
  CriterionResult r{3, "quantizer-unbiasedness", false, ""};
  QuantConfig q;
  q.levels = 32;
  q.clip = 1.0;
  const double step = q.step();
  Rng rng(0xC3C3);
  const int values = 50;
  const int draws = 100000;
  int exceed = 0;
  double worst = 0.0;
  for (int v = 0; v < values; ++v) {
    const double lo = -q.clip + step;
    const double hi = q.clip - step;
    const double x = lo + (hi - lo) * rng.real();
    double sum = 0.0, sum2 = 0.0;
    const double target[1] = {x};
    for (int i = 0; i < draws; ++i) {
      const auto g = quantize(target, q, rng);
      const double y = dequantize(g, q)[0];
      sum += y;
      sum2 += y * y;
    }
    const double mean_hat = sum / draws;
    const double var_hat = (sum2 - sum * sum / draws) / (draws - 1);
    const double se = std::sqrt(std::max(var_hat, 0.0) / draws);
    const double dev = std::abs(mean_hat - x);
    if (se == 0.0) {
      if (dev != 0.0) ++exceed;
      continue;
    }
    worst = std::max(worst, dev / se);
    if (dev > 3.0 * se) ++exceed;
  }
  r.pass = exceed <= 2;
  r.detail = std::to_string(values) + " interior values x " + std::to_string(draws) +
             " draws: " + std::to_string(exceed) +
             " outside the 3-standard-error band (<=2 allowed), worst deviation " +
             detail::fmt(worst, 2) + " SE";
  return r;
}

// ---------------------------------------------------------------------------
// Criterion 4: statistical privacy proxies at q=31, d=1, n=7, z=2.
// ---------------------------------------------------------------------------
namespace detail {

// Two-sample chi-squared across every payload slot with a Bonferroni-style
// correction.  Slots where both sides are constant and equal contribute
// nothing; a constant slot that differs is an immediate distinguisher.
struct SlotTestResult {
  bool distinguished = false;
  double min_p = 1.0;
  std::size_t slots = 0;
};

inline SlotTestResult slot_chi2(const std::vector<std::vector<fe>>& a,
                                const std::vector<std::vector<fe>>& b, fe q) {
  SlotTestResult out;
  if (a.empty() || b.empty() || a[0].size() != b[0].size()) {
    out.distinguished = true;
    return out;
  }
  const std::size_t slots = a[0].size();
  out.slots = slots;
  for (std::size_t u = 0; u < slots; ++u) {
    std::vector<std::uint64_t> ha(static_cast<std::size_t>(q), 0), hb(static_cast<std::size_t>(q), 0);
    for (const auto& row : a) ++ha[static_cast<std::size_t>(row[u])];
    for (const auto& row : b) ++hb[static_cast<std::size_t>(row[u])];
    int populated = 0;
    bool equal = true;
    for (std::size_t k = 0; k < ha.size(); ++k) {
      if (ha[k] + hb[k] > 0) ++populated;
      equal = equal && ha[k] == hb[k];
    }
    if (populated < 2) {
      // One shared bin: identical constants are uninformative; different
      // constants would show up as populated == 2 with disjoint support.
      continue;
    }
    if (equal) continue;  // exactly matching histograms cannot distinguish
    const auto res = chi2_two_sample(ha, hb);
    out.min_p = std::min(out.min_p, res.p_value);
  }
  return out;
}

struct PrivacyProbe {
  ProtocolConfig cfg;
  std::vector<std::vector<fe>> inputs_a;
  std::vector<std::vector<fe>> inputs_b;
  int observer_party_a = 0, observer_party_b = 0;  // two coalition members, or 0 twice
  std::vector<MessageKind> kinds;
};

inline std::vector<fe> observe(const Transcript& t, const PrivacyProbe& p) {
  std::vector<fe> out;
  for (const Message& m : t.messages) {
    if (m.to != p.observer_party_a && m.to != p.observer_party_b) continue;
    bool match = false;
    for (MessageKind k : p.kinds) match |= (k == m.kind);
    if (!match) continue;
    out.insert(out.end(), m.payload.begin(), m.payload.end());
  }
  return out;
}

inline bool privacy_trial_pair(const PrivacyProbe& probe, int trials, std::uint64_t tag,
                               std::string* why) {
  std::vector<std::vector<fe>> obs_a, obs_b;
  obs_a.reserve(static_cast<std::size_t>(trials));
  obs_b.reserve(static_cast<std::size_t>(trials));
  const ByzantineSpec honest;
  for (int t = 0; t < trials; ++t) {
    const SharedRandomness sa(mix_seed(tag, 1, static_cast<std::uint64_t>(t)));
    const SharedRandomness sb(mix_seed(tag, 2, static_cast<std::uint64_t>(t)));
    const auto ra = run_round(probe.cfg, probe.inputs_a, honest, sa, 1,
                              mix_seed(tag, 3, static_cast<std::uint64_t>(t)));
    const auto rb = run_round(probe.cfg, probe.inputs_b, honest, sb, 1,
                              mix_seed(tag, 4, static_cast<std::uint64_t>(t)));
    if (ra.aborted || rb.aborted) {
      *why = "honest privacy round aborted";
      return false;
    }
    obs_a.push_back(observe(ra.transcript, probe));
    obs_b.push_back(observe(rb.transcript, probe));
  }
  const auto res = slot_chi2(obs_a, obs_b, probe.cfg.field().q());
  if (res.distinguished) {
    *why = "views structurally distinguishable";
    return false;
  }
  const double alpha = 0.01 / static_cast<double>(std::max<std::size_t>(res.slots, 1));
  if (res.min_p < alpha) {
    *why = "chi-squared rejected: min p " + fmt(res.min_p, 6) + " < corrected alpha " +
           fmt(alpha, 6) + " over " + std::to_string(res.slots) + " slots";
    return false;
  }
  *why = "min p " + fmt(res.min_p, 4) + " over " + std::to_string(res.slots) + " slots";
  return true;
}

inline std::vector<fe> embed_all(const Field& F, const std::vector<std::int64_t>& xs) {
  std::vector<fe> out;
  for (auto x : xs) out.push_back(F.embed(x));
  return out;
}

}  // namespace detail

inline CriterionResult c4_privacy_proxies() {
  CriterionResult r{4, "privacy-proxies", false, ""};
  const detail::Timer timer;
  const int trials = 10000;

  ProtocolConfig cfg;
  cfg.n = 7;
  cfg.b = 1;
  cfg.z = 2;
  cfg.d = 1;
  cfg.rule = RuleSpec{AggRule::Krum, true};
  cfg.quant.field = Field(31);
  cfg.quant.levels = 4;  // carries the field; inputs are raw residues here
  cfg.record_payloads = true;
  const Field& F = cfg.field();

  // Inputs here are raw field residues (the privacy statements are about
  // arbitrary field-domain gradients, not quantizer outputs).
  auto wrap = [&](const std::vector<std::uint64_t>& vals) {
    std::vector<std::vector<fe>> grads;
    for (auto v : vals) grads.push_back({static_cast<fe>(v % F.q())});
    return grads;
  };

  const std::vector<MessageKind> coalition_kinds = {
      MessageKind::VssRow, MessageKind::VssCheck, MessageKind::PirQuery,
      MessageKind::MixtureShare, MessageKind::SelectionBroadcast};
  const std::vector<MessageKind> federator_kinds = {
      MessageKind::DistanceShare, MessageKind::PirResponse, MessageKind::MixtureDistanceShare,
      MessageKind::AggregateShare};

  // Deterministic sanity probes: the conditioning must actually hold, i.e.
  // both hypotheses produce the same selection/aggregate (4a) or the same
  // distances and aggregate (4b).
  auto probe_once = [&](const std::vector<std::vector<fe>>& inputs) {
    const SharedRandomness sr(0x9999);
    return run_round(cfg, inputs, ByzantineSpec{}, sr, 1, 0x7777);
  };

  // 4a-i: third client's gradient changes, neighbor sets and C* unchanged.
  detail::PrivacyProbe grad_pair;
  grad_pair.cfg = cfg;
  grad_pair.inputs_a = wrap({1, 2, 2, 1, 2, 1, 5});
  grad_pair.inputs_b = wrap({1, 2, 2, 1, 2, 1, 6});
  grad_pair.observer_party_a = 2;
  grad_pair.observer_party_b = 3;
  grad_pair.kinds = coalition_kinds;
  {
    const auto pa = probe_once(grad_pair.inputs_a);
    const auto pb = probe_once(grad_pair.inputs_b);
    if (pa.selected != pb.selected || pa.aggregate_field != pb.aggregate_field ||
        pa.neighbor_ids != pb.neighbor_ids) {
      r.detail = "4a gradient pair: construction broken (selection or aggregate differs)";
      return r;
    }
  }

  // 4a-ii: the victim's gradient flips other clients' neighbor sets while the
  // broadcast selection and aggregate stay fixed.
  detail::PrivacyProbe nbr_pair;
  nbr_pair.cfg = cfg;
  nbr_pair.inputs_a = wrap({4, 0, 1, 2, 1, 0, 2});
  nbr_pair.inputs_b = wrap({5, 0, 1, 2, 1, 0, 2});
  nbr_pair.observer_party_a = 2;
  nbr_pair.observer_party_b = 3;
  nbr_pair.kinds = coalition_kinds;
  {
    const auto pa = probe_once(nbr_pair.inputs_a);
    const auto pb = probe_once(nbr_pair.inputs_b);
    if (pa.selected != pb.selected || pa.aggregate_field != pb.aggregate_field) {
      r.detail = "4a neighbor pair: construction broken (selection or aggregate differs)";
      return r;
    }
    if (pa.neighbor_ids == pb.neighbor_ids) {
      r.detail = "4a neighbor pair: construction broken (neighbor sets do not differ)";
      return r;
    }
  }

  // 4b: federator view between assignments with equal distances + aggregate.
  detail::PrivacyProbe fed_pair;
  fed_pair.cfg = cfg;
  fed_pair.inputs_a = wrap({3, 7, 12, 20, 25, 9, 14});
  {
    const auto pa = probe_once(fed_pair.inputs_a);
    // Reflection g -> s - g preserves all pairwise distances; choosing
    // s = 2 * aggregate * inv((n-b) * |C*|) also preserves the aggregate.
    const fe agg = pa.aggregate_field.at(0);
    const fe denom = F.mul(F.embed(static_cast<std::int64_t>(cfg.n - cfg.b)),
                           F.embed(static_cast<std::int64_t>(pa.selected.size())));
    const fe s = F.mul(F.add(agg, agg), F.inv(denom));
    for (const auto& g : fed_pair.inputs_a) {
      fed_pair.inputs_b.push_back({F.sub(s, g[0])});
    }
    const auto pb = probe_once(fed_pair.inputs_b);
    if (pa.input_distances.cells != pb.input_distances.cells || pa.selected != pb.selected ||
        pa.aggregate_field != pb.aggregate_field) {
      r.detail = "4b reflection pair: construction broken";
      return r;
    }
  }
  fed_pair.observer_party_a = 0;
  fed_pair.observer_party_b = 0;
  fed_pair.kinds = federator_kinds;

  std::string why_grad, why_nbr, why_fed;
  const bool ok_grad = detail::privacy_trial_pair(grad_pair, trials, 0xC4A1, &why_grad);
  const bool ok_nbr = detail::privacy_trial_pair(nbr_pair, trials, 0xC4A2, &why_nbr);
  const bool ok_fed = detail::privacy_trial_pair(fed_pair, trials, 0xC4B0, &why_fed);
  r.pass = ok_grad && ok_nbr && ok_fed;
  r.detail = std::string("coalition/gradients ") + (ok_grad ? "held" : "REJECTED") + " (" +
             why_grad + "); coalition/neighbor-sets " + (ok_nbr ? "held" : "REJECTED") + " (" +
             why_nbr + "); federator steps 4-7 " + (ok_fed ? "held" : "REJECTED") + " (" +
             why_fed + "); " + std::to_string(trials) + " trials each, alpha 0.01, in " +
             detail::fmt(timer.seconds(), 1) + "s";
  return r;
}

// ---------------------------------------------------------------------------
// Criterion 5: the composed rule's robustness inequality, gated on the
// identical-honest-gradients special case (RHS = 0 forces exact recovery).
// ---------------------------------------------------------------------------
inline CriterionResult c5_robustness_audit() {
  CriterionResult r{5, "robustness-audit", false, ""};
  const int n = 10, b = 2, d = 5;
  const RuleSpec spec{AggRule::Krum, true};
  Rng rng(0xC5C5);
  const int instances = 1000;

  std::vector<int> honest_idx;
  for (int i = 0; i < n - b; ++i) honest_idx.push_back(i);

  int exact_violations = 0;
  for (int t = 0; t < instances; ++t) {
    std::vector<double> g(static_cast<std::size_t>(d));
    for (auto& x : g) x = rng.normal();
    std::vector<std::vector<double>> vectors(static_cast<std::size_t>(n));
    for (int i = 0; i < n - b; ++i) vectors[static_cast<std::size_t>(i)] = g;
    for (int i = n - b; i < n; ++i) {
      auto& v = vectors[static_cast<std::size_t>(i)];
      v.resize(static_cast<std::size_t>(d));
      for (auto& x : v) x = 1e6 * rng.normal();  // wild outliers
    }
    if (!robustness_check(spec, vectors, honest_idx, b, 0.0)) ++exact_violations;
  }

  // General-kappa audit: reported, not gated (the inner constant is a
  // literature input; we use kappa = 1 for the composed bound).
  const double kappa = composed_kappa(n, b, 1.0);
  int general_violations = 0;
  for (int t = 0; t < instances; ++t) {
    std::vector<std::vector<double>> vectors(static_cast<std::size_t>(n));
    for (int i = 0; i < n - b; ++i) {
      auto& v = vectors[static_cast<std::size_t>(i)];
      v.resize(static_cast<std::size_t>(d));
      for (auto& x : v) x = rng.normal();
    }
    for (int i = n - b; i < n; ++i) {
      auto& v = vectors[static_cast<std::size_t>(i)];
      v.resize(static_cast<std::size_t>(d));
      for (auto& x : v) x = 1e6 * rng.normal();
    }
    if (!robustness_check(spec, vectors, honest_idx, b, kappa)) ++general_violations;
  }

  r.pass = exact_violations == 0;
  r.detail = "identical-honest case: " + std::to_string(exact_violations) + "/" +
             std::to_string(instances) + " violations (0 required); general case at composed "
             "kappa " +
             detail::fmt(kappa, 2) + " (inner kappa 1): " + std::to_string(general_violations) +
             "/" + std::to_string(instances) + " violations (reported, not gated)";
  return r;
}

// ---------------------------------------------------------------------------
// Criterion 6: communication scaling measured from transcripts.
// ---------------------------------------------------------------------------
inline CriterionResult c6_comm_scaling() {
  CriterionResult r{6, "communication-scaling", false, ""};
  const detail::Timer timer;

  auto measure = [](int n, int d) {
    ProtocolConfig cfg;
    cfg.n = n;
    cfg.b = 1;
    cfg.z = 1;
    cfg.d = d;
    cfg.rule = RuleSpec{AggRule::Krum, true};
    cfg.quant.levels = 32;
    cfg.quant.clip = 1.0;
    Rng rng(mix_seed(0xC6C6, static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(d)));
    std::vector<std::vector<fe>> grads(static_cast<std::size_t>(n));
    for (auto& g : grads) {
      std::vector<double> real(static_cast<std::size_t>(d));
      for (auto& x : real) x = 2.0 * rng.real() - 1.0;
      g = quantize(real, cfg.quant, rng).values;
    }
    const SharedRandomness shared(mix_seed(0x6666, static_cast<std::uint64_t>(n)));
    const RoundResult res = run_round(cfg, grads, ByzantineSpec{}, shared, 1, 1);
    return std::pair<double, double>(static_cast<double>(res.bytes_sent[1]),
                                     static_cast<double>(res.bytes_sent[0]));
  };

  std::vector<double> ns = {7, 9, 11, 13, 15};
  std::vector<double> user_by_n, fed_by_n;
  for (double n : ns) {
    const auto [user, fed] = measure(static_cast<int>(n), 100);
    user_by_n.push_back(user);
    fed_by_n.push_back(fed);
  }
  std::vector<double> ds = {50, 100, 200, 400};
  std::vector<double> user_by_d;
  for (double d : ds) {
    user_by_d.push_back(measure(9, static_cast<int>(d)).first);
  }

  const double slope_user_n = loglog_slope(ns, user_by_n);
  const double slope_fed_n = loglog_slope(ns, fed_by_n);
  const double slope_user_d = loglog_slope(ds, user_by_d);

  const bool ok_user_n = std::abs(slope_user_n - 2.0) <= 0.3;
  const bool ok_user_d = std::abs(slope_user_d - 1.0) <= 0.1;
  const bool ok_fed_n = slope_fed_n > 2.0 && slope_fed_n < 3.0;
  const double secs = timer.seconds();
  r.pass = ok_user_n && ok_user_d && ok_fed_n && secs < 300.0;
  r.detail = "per-user bytes ~ n^" + detail::fmt(slope_user_n, 2) + " (want 2.0±0.3), ~ d^" +
             detail::fmt(slope_user_d, 2) + " (want 1.0±0.1); federator ~ n^" +
             detail::fmt(slope_fed_n, 2) + " (want in (2,3)); " + detail::fmt(secs, 1) + "s";
  return r;
}

// ---------------------------------------------------------------------------
// Criterion 7: training-trend reproduction at n=15, b=3, beta=0.1 across the
// four input attacks and the four rule variants.
// ---------------------------------------------------------------------------
inline CriterionResult c7_training_trends(std::ostream* log = nullptr) {
  CriterionResult r{7, "training-trends", false, ""};
  const detail::Timer timer;

  ExperimentConfig base;
  base.protocol.n = 15;
  base.protocol.b = 3;
  base.protocol.z = 1;
  base.protocol.quant.levels = 1024;
  // A tight clip bounds the per-coordinate mass any Byzantine input can
  // inject into a nearest-neighbor mixture, which is what lets the composed
  // rules keep their edge under the adaptive scaled attacks.
  base.protocol.quant.clip = 0.25;
  base.use_protocol = true;
  base.eta = 0.1;
  base.epochs = 300;
  base.beta = 0.1;
  base.classes = 10;
  base.features = 20;
  base.train_samples = 5000;
  base.test_samples = 1000;
  base.separation = 3.0;
  base.seeds = {1, 2, 3, 4, 5};

  const AttackKind attacks[] = {AttackKind::Alie, AttackKind::Foe, AttackKind::SignFlip,
                                AttackKind::LabelFlip};
  struct Variant {
    AggRule rule;
    bool nnm;
  };
  const Variant variants[] = {{AggRule::Krum, false},
                              {AggRule::Krum, true},
                              {AggRule::MultiKrum, false},
                              {AggRule::MultiKrum, true}};

  std::ostringstream table;
  bool ok = true;
  std::string first_failure;
  for (AttackKind attack : attacks) {
    double acc[4] = {0, 0, 0, 0};
    for (int v = 0; v < 4; ++v) {
      ExperimentConfig cfg = base;
      cfg.attack.kind = attack;
      cfg.protocol.rule = RuleSpec{variants[v].rule, variants[v].nnm};
      cfg.attack.target = cfg.protocol.rule;
      const auto result = run_experiment(cfg, /*deterministic_timing=*/true);
      for (const auto& o : result.outcomes) {
        if (o.failed) {
          ok = false;
          if (first_failure.empty()) {
            first_failure = std::string(attack_name(attack)) + "/" +
                            rule_name(variants[v].rule) + (variants[v].nnm ? "-nnm" : "") +
                            " seed " + std::to_string(o.seed) + " failed: " + o.fail_reason;
          }
        }
      }
      acc[v] = result.mean_max_acc;
    }
    const double kr = acc[0], kr_nnm = acc[1], mkr = acc[2], mkr_nnm = acc[3];
    const bool kr_gain = kr_nnm > kr;
    const bool mkr_hold = mkr_nnm >= mkr - 0.01;
    const bool sf_margin = attack != AttackKind::SignFlip || (kr_nnm - kr >= 0.05);
    if (!(kr_gain && mkr_hold && sf_margin) && first_failure.empty()) {
      first_failure = std::string(attack_name(attack)) + ": kr " + detail::fmt(kr) + " kr-nnm " +
                      detail::fmt(kr_nnm) + " mkr " + detail::fmt(mkr) + " mkr-nnm " +
                      detail::fmt(mkr_nnm);
    }
    ok = ok && kr_gain && mkr_hold && sf_margin;
    table << attack_name(attack) << ": kr " << detail::fmt(kr) << ", kr-nnm "
          << detail::fmt(kr_nnm) << ", mkr " << detail::fmt(mkr) << ", mkr-nnm "
          << detail::fmt(mkr_nnm) << "; ";
    if (log != nullptr) {
      *log << "  [criterion 7] " << attack_name(attack) << ": kr " << detail::fmt(kr)
           << ", kr-nnm " << detail::fmt(kr_nnm) << ", mkr " << detail::fmt(mkr) << ", mkr-nnm "
           << detail::fmt(mkr_nnm) << "\n"
           << std::flush;
    }
  }
  const double secs = timer.seconds();
  r.pass = ok && secs < 1800.0;
  r.detail = table.str() + (ok ? "all orderings hold" : "ORDERING FAILED: " + first_failure) +
             "; " + detail::fmt(secs, 1) + "s" + (secs < 1800.0 ? "" : " (budget exceeded)");
  return r;
}

// ---------------------------------------------------------------------------
// Criterion 8: zero-order estimator sanity.
// ---------------------------------------------------------------------------
inline CriterionResult c8_zero_order() {
  CriterionResult r{8, "zero-order-sanity", false, ""};

  // Exactness for d = 1 (unit sphere = {-1, +1}), power-of-two radii so the
  // floating-point arithmetic is exact end to end.
  bool exact_ok = true;
  {
    const double a = 3.0;
    auto loss = [a](std::span<const double> w) { return a * w[0]; };
    const std::vector<double> w = {1.0};
    for (double mu : {0x1p-20, 0x1p-8, 0.5, 8.0}) {
      ZoConfig cfg;
      cfg.R = 16;
      cfg.zo_mu = mu;
      cfg.average_perturbations = true;
      const SharedRandomness sr(0xC8C8);
      const auto g = zo_estimate(loss, w, cfg, sr, 0);
      exact_ok = exact_ok && g[0] == a;
    }
  }

  // General d: each affine-loss term equals the directional reconstruction
  // d * (a . z) z up to rounding.
  bool recon_ok = true;
  {
    const std::vector<double> a = {2.0, -1.0, 0.5, 4.0, -3.0};
    auto dot = [](std::span<const double> x, std::span<const double> y) {
      double s = 0.0;
      for (std::size_t u = 0; u < x.size(); ++u) s += x[u] * y[u];
      return s;
    };
    auto loss = [&](std::span<const double> w) { return dot(a, w) + 7.0; };
    const std::vector<double> w = {0.1, 0.2, -0.3, 0.0, 1.0};
    ZoConfig cfg;
    cfg.R = 64;
    cfg.zo_mu = 1e-2;
    const SharedRandomness sr(0xC8C9);
    const auto g = zo_estimate(loss, w, cfg, sr, 5);
    const auto zs = sample_perturbations(5, 64, sr, 5);
    std::vector<double> expected(5, 0.0);
    for (const auto& z : zs) {
      const double coeff = 5.0 * dot(a, z);
      for (std::size_t u = 0; u < 5; ++u) expected[u] += coeff * z[u];
    }
    for (std::size_t u = 0; u < 5; ++u) {
      recon_ok = recon_ok &&
                 std::abs(g[u] - expected[u]) <= 1e-9 * std::max(1.0, std::abs(expected[u]));
    }
  }

  // Quadratic expectation: the estimator is unbiased, so averaging the 100
  // per-trial means (R = 512 each) lands within 10% of the true gradient.
  double rel_err = 0.0;
  {
    const int d = 20, R = 512, trials = 100;
    std::vector<double> w(static_cast<std::size_t>(d));
    Rng wr(0xC8CA);
    for (auto& x : w) x = wr.normal();
    auto loss = [](std::span<const double> v) {
      double s = 0.0;
      for (double x : v) s += x * x;
      return 0.5 * s;
    };
    ZoConfig cfg;
    cfg.R = R;
    cfg.average_perturbations = true;
    std::vector<double> mean_est(static_cast<std::size_t>(d), 0.0);
    for (int t = 0; t < trials; ++t) {
      const SharedRandomness sr(mix_seed(0xC8CB, static_cast<std::uint64_t>(t)));
      const auto g = zo_estimate(loss, w, cfg, sr, static_cast<std::uint64_t>(t));
      for (std::size_t u = 0; u < w.size(); ++u) mean_est[u] += g[u];
    }
    double err2 = 0.0, norm2 = 0.0;
    for (std::size_t u = 0; u < w.size(); ++u) {
      mean_est[u] /= trials;
      const double diff = mean_est[u] - w[u];
      err2 += diff * diff;
      norm2 += w[u] * w[u];
    }
    rel_err = std::sqrt(err2 / norm2);
  }

  r.pass = exact_ok && recon_ok && rel_err <= 0.10;
  r.detail = std::string("d=1 linear exactness ") + (exact_ok ? "exact" : "FAILED") +
             "; directional reconstruction " + (recon_ok ? "within 1e-9" : "FAILED") +
             "; quadratic d=20 R=512 x 100 trials relative error " + detail::fmt(rel_err, 4) +
             " (<=0.10)";
  return r;
}

// ---------------------------------------------------------------------------
// Criterion 9: the selftest's canonical run is byte-deterministic.
// ---------------------------------------------------------------------------
inline CriterionResult c9_determinism(const std::string& csv_path = "") {
  CriterionResult r{9, "determinism", false, ""};
  ExperimentConfig cfg;
  cfg.protocol.n = 7;
  cfg.protocol.b = 2;
  cfg.protocol.z = 1;
  cfg.protocol.rule = RuleSpec{AggRule::Krum, true};
  cfg.protocol.quant.levels = 64;
  cfg.protocol.quant.clip = 2.0;
  cfg.attack.kind = AttackKind::SignFlip;
  cfg.attack.target = cfg.protocol.rule;
  cfg.classes = 3;
  cfg.features = 4;
  cfg.train_samples = 210;
  cfg.test_samples = 90;
  cfg.separation = 5.0;
  cfg.eta = 0.5;
  cfg.epochs = 10;
  cfg.beta = 0.5;
  cfg.seeds = {1, 2};

  const auto first = run_experiment(cfg, /*deterministic_timing=*/true);
  const auto second = run_experiment(cfg, /*deterministic_timing=*/true);
  const std::string csv_first = metrics_to_csv(first.rows);
  const std::string csv_second = metrics_to_csv(second.rows);
  r.pass = csv_first == csv_second && !first.rows.empty();
  r.detail = "two selftest runs produced " +
             std::string(r.pass ? "byte-identical" : "DIFFERING") + " CSV output (" +
             std::to_string(csv_first.size()) + " bytes, " + std::to_string(first.rows.size()) +
             " rows)";
  if (!csv_path.empty()) {
    std::ofstream out(csv_path, std::ios::trunc);
    out << csv_first;
    if (!out) r.detail += "; WARNING: could not write " + csv_path;
  }
  return r;
}

// Runs all nine criteria, printing one line each; returns true when all pass.
inline bool run_all(std::ostream& out, const std::string& csv_path = "") {
  bool all = true;
  auto report = [&](const CriterionResult& r) {
    out << (r.pass ? "[PASS]" : "[FAIL]") << " criterion " << r.id << " (" << r.name
        << "): " << r.detail << "\n"
        << std::flush;
    all = all && r.pass;
  };
  report(c1_oracle_equivalence());
  report(c2_error_correction());
  report(c3_quantizer_unbiasedness());
  report(c4_privacy_proxies());
  report(c5_robustness_audit());
  report(c6_comm_scaling());
  report(c7_training_trends(&out));
  report(c8_zero_order());
  report(c9_determinism(csv_path));
  out << (all ? "selftest: all 9 criteria passed" : "selftest: FAILURES above") << "\n";
  return all;
}

}  // namespace acceptance
}  // namespace byzagg

#endif  // BYZAGG_ACCEPTANCE_HPP_
