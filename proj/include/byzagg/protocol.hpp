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

#include <array>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "byzagg/errors.hpp"
#include "byzagg/field.hpp"
#include "byzagg/poly.hpp"
#include "byzagg/quantizer.hpp"
#include "byzagg/rng.hpp"
#include "byzagg/robust_agg.hpp"
#include "byzagg/sharing.hpp"

namespace byzagg {

// ---------------------------------------------------------------------------
// Message layer
//
// The simulator is synchronous: each step's messages are produced in a fixed
// order (sender id, then receiver id), so transcripts are deterministic given
// the seeds.  Channels are reliable, authenticated point-to-point links plus
// an idealized broadcast (modeled as one message per recipient).
// ---------------------------------------------------------------------------

enum class ProtocolStep : int {
  ShareGradients = 1,
  DistanceShares = 2,
  SelectNeighbors = 3,
  PadShares = 4,
  SumRetrieval = 5,
  Reencode = 6,
  Unpad = 7,
  Aggregate = 8,
};

enum class MessageKind {
  VssRow,
  VssCheck,
  VssComplaint,
  DistanceShare,
  PirQuery,
  PirResponse,
  MixtureShare,
  MixtureDistanceShare,
  SelectionBroadcast,
  AggregateShare,
  FinalQuery,
  FinalResponse,
};

inline const char* message_kind_name(MessageKind kind) {
  switch (kind) {
    case MessageKind::VssRow: return "vss_row";
    case MessageKind::VssCheck: return "vss_check";
    case MessageKind::VssComplaint: return "vss_complaint";
    case MessageKind::DistanceShare: return "distance_share";
    case MessageKind::PirQuery: return "pir_query";
    case MessageKind::PirResponse: return "pir_response";
    case MessageKind::MixtureShare: return "mixture_share";
    case MessageKind::MixtureDistanceShare: return "mixture_distance_share";
    case MessageKind::SelectionBroadcast: return "selection_broadcast";
    case MessageKind::AggregateShare: return "aggregate_share";
    case MessageKind::FinalQuery: return "final_query";
    case MessageKind::FinalResponse: return "final_response";
  }
  return "unknown";
}

struct Message {
  int from = 0;  // party id; clients 1..n, federator 0
  int to = 0;
  ProtocolStep step = ProtocolStep::ShareGradients;
  MessageKind kind = MessageKind::VssRow;
  std::uint32_t count = 0;        // logical units carried (field elements or ids)
  std::uint64_t size_bytes = 0;
  std::vector<fe> payload;        // recorded only when the transcript asks for it
};

struct Transcript {
  bool record_payloads = false;
  std::vector<Message> messages;

  void add(int from, int to, ProtocolStep step, MessageKind kind, std::uint32_t count,
           std::uint64_t size_bytes, std::vector<fe> payload = {}) {
    Message m;
    m.from = from;
    m.to = to;
    m.step = step;
    m.kind = kind;
    m.count = count;
    m.size_bytes = size_bytes;
    if (record_payloads) m.payload = std::move(payload);
    messages.push_back(std::move(m));
  }
};

// Newline-delimited JSON dump of the transcript (payloads optional).
inline std::string transcript_to_ndjson(const Transcript& t, bool include_payloads = false) {
  std::ostringstream out;
  for (const Message& m : t.messages) {
    out << "{\"from\":" << m.from << ",\"to\":" << m.to
        << ",\"step\":" << static_cast<int>(m.step) << ",\"kind\":\""
        << message_kind_name(m.kind) << "\",\"count\":" << m.count
        << ",\"size_bytes\":" << m.size_bytes;
    if (include_payloads) {
      out << ",\"payload\":[";
      for (std::size_t i = 0; i < m.payload.size(); ++i) {
        if (i) out << ",";
        out << m.payload[i];
      }
      out << "]";
    }
    out << "}\n";
  }
  return out.str();
}

// Exact per-party byte totals, overall and per protocol step.
struct CommSummary {
  std::vector<std::uint64_t> sent;                       // [0]=federator, [i]=client i
  std::vector<std::uint64_t> received;
  std::vector<std::array<std::uint64_t, 9>> sent_by_step;  // index by int(step)
};

inline CommSummary comm_accounting(const Transcript& t, int n) {
  CommSummary s;
  s.sent.assign(static_cast<std::size_t>(n) + 1, 0);
  s.received.assign(static_cast<std::size_t>(n) + 1, 0);
  s.sent_by_step.assign(static_cast<std::size_t>(n) + 1, {});
  for (const Message& m : t.messages) {
    s.sent[static_cast<std::size_t>(m.from)] += m.size_bytes;
    s.received[static_cast<std::size_t>(m.to)] += m.size_bytes;
    s.sent_by_step[static_cast<std::size_t>(m.from)][static_cast<std::size_t>(m.step)] +=
        m.size_bytes;
  }
  return s;
}

// A party's observation log: the payloads of everything delivered to it, in
// transcript order, optionally filtered by message kind.  Requires a
// transcript recorded with payloads.
inline std::vector<fe> observed_payloads(const Transcript& t, int party,
                                         std::initializer_list<MessageKind> kinds = {}) {
  std::vector<fe> out;
  for (const Message& m : t.messages) {
    if (m.to != party) continue;
    if (kinds.size() != 0) {
      bool match = false;
      for (MessageKind k : kinds) match |= (k == m.kind);
      if (!match) continue;
    }
    out.insert(out.end(), m.payload.begin(), m.payload.end());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct ProtocolConfig {
  int n = 0;   // clients
  int b = 0;   // tolerated Byzantine clients
  int z = 1;   // privacy threshold (max colluding clients)
  int d = 0;   // gradient dimension
  RuleSpec rule;                 // aggregation rule + NNM toggle
  QuantConfig quant;             // also carries the field
  bool restart_on_vss_failure = false;
  bool private_final_aggregation = false;
  bool disable_rerandomization = false;  // test hook: lambda == 0
  bool record_payloads = false;

  const Field& field() const { return quant.field; }

  void validate() const {
    if (n < 1 || d < 1 || b < 0 || z < 1) {
      throw ConfigInvalid("protocol: need n >= 1, d >= 1, b >= 0, z >= 1");
    }
    if (n <= 3 * b) throw ConfigInvalid("protocol: need n > 3b for share verification");
    if (n <= 2 * (z + b)) throw ConfigInvalid("protocol: need n > 2(z+b)");
    if (n < 2 * z + 2 * b + 1) throw ConfigInvalid("protocol: need n >= 2z+2b+1 to decode");
    if (rule.rule == AggRule::Krum && n < b + 3) {
      throw ConfigInvalid("protocol: Krum needs n >= b+3");
    }
    if (rule.rule == AggRule::MultiKrum && n < 2 * b + 4) {
      throw ConfigInvalid("protocol: Multi-Krum needs n >= 2b+4");
    }
    if (static_cast<std::uint64_t>(n) >= field().q()) {
      throw ConfigInvalid("protocol: field too small for evaluation points");
    }
  }
};

// Which corruptions the Byzantine members apply.  Members always control
// their input gradients; the flags below additionally corrupt protocol
// messages.  Honest-looking Byzantine (all flags off) follow the protocol on
// whatever inputs they chose.
struct ByzantineSpec {
  std::vector<int> members;  // client ids (1-based)
  bool corrupt_dealing = false;            // deal inconsistent VSS rows
  bool false_vss_complaints = false;       // complain about every honest dealer
  bool corrupt_distance_shares = false;    // garbage in steps 2 and 8
  bool corrupt_pir_responses = false;      // garbage step-5 responses
  bool corrupt_aggregate_shares = false;   // garbage step-8 aggregate shares

  bool contains(int id) const {
    for (int m : members) {
      if (m == id) return true;
    }
    return false;
  }
};

struct RoundResult {
  bool aborted = false;
  std::string abort_reason;

  std::vector<int> active;    // client ids still in the protocol, ascending
  std::vector<int> excluded;  // dealers excluded during verification
  std::vector<int> selected;  // C* as client ids, in selection order

  // Decoded distance matrices over active positions (field residues; honest
  // values stay below q/2 by the field-size bound).
  DistanceMatrix<fe> input_distances;
  DistanceMatrix<fe> mixture_distances;
  std::vector<std::vector<int>> neighbor_ids;  // per active position, client ids

  std::vector<fe> aggregate_field;          // sum over C* in the field
  std::vector<std::int64_t> aggregate_int;  // unembedded
  std::uint64_t summands = 0;               // quantized gradients per entry
  bool dequantize_ok = false;
  std::vector<double> aggregate;            // g^Sigma (normalized), if dequantizable

  std::vector<std::uint64_t> bytes_sent;  // [0]=federator, [i]=client i
  Transcript transcript;
};

// Final normalization shared by the protocol and the plaintext oracle paths:
// the mean of the summed quantized gradients, with the grid offset corrected.
// Both paths must call this exact function so results compare bit-for-bit.
inline std::vector<double> normalize_aggregate(const QuantConfig& quant,
                                               std::span<const std::int64_t> sum,
                                               std::uint64_t summands) {
  std::vector<fe> embedded(sum.size());
  for (std::size_t u = 0; u < sum.size(); ++u) embedded[u] = quant.field.embed(sum[u]);
  std::vector<double> real = dequantize(embedded, quant, summands);
  for (auto& v : real) v /= static_cast<double>(summands);
  return real;
}

// ---------------------------------------------------------------------------
// One protocol round
// ---------------------------------------------------------------------------

namespace detail {

struct ActiveSet {
  std::vector<int> ids;     // ascending client ids
  std::vector<fe> alphas;   // matching evaluation points
  int b_eff = 0;            // remaining Byzantine budget

  int size() const { return static_cast<int>(ids.size()); }
  int position_of(int id) const {
    for (int p = 0; p < size(); ++p) {
      if (ids[static_cast<std::size_t>(p)] == id) return p;
    }
    return -1;
  }
};

inline std::vector<fe> random_vector(const Field& F, std::size_t d, Rng& rng) {
  std::vector<fe> v(d);
  for (auto& x : v) x = F.uniform(rng);
  return v;
}

}  // namespace detail

// Executes one aggregation round on already-quantized gradients (field
// domain, one entry per client in id order).  `seed` drives all private
// randomness (sharing coefficients, federator queries, Byzantine garbage);
// `shared` is the client-shared randomness the federator never sees.
inline RoundResult run_round(const ProtocolConfig& cfg,
                             const std::vector<std::vector<fe>>& gradients,
                             const ByzantineSpec& byz, const SharedRandomness& shared,
                             std::uint64_t round, std::uint64_t seed) {
  cfg.validate();
  const Field& F = cfg.field();
  const int n = cfg.n;
  const int z = cfg.z;
  const std::size_t d = static_cast<std::size_t>(cfg.d);
  if (static_cast<int>(gradients.size()) != n) {
    throw ConfigInvalid("run_round: need one gradient per client");
  }
  for (const auto& g : gradients) {
    if (g.size() != d) throw ConfigInvalid("run_round: gradient dimension mismatch");
    for (fe v : g) {
      if (v >= F.q()) throw ConfigInvalid("run_round: gradient entry outside field");
    }
  }

  RoundResult res;
  res.transcript.record_payloads = cfg.record_payloads;
  res.bytes_sent.assign(static_cast<std::size_t>(n) + 1, 0);
  const int eb = F.element_bytes();

  auto log = [&](int from, int to, ProtocolStep step, MessageKind kind, std::uint32_t count,
                 std::uint64_t bytes, std::vector<fe> payload = {}) {
    res.bytes_sent[static_cast<std::size_t>(from)] += bytes;
    res.transcript.add(from, to, step, kind, count, bytes, std::move(payload));
  };
  auto abort_round = [&](const std::string& reason) -> RoundResult& {
    res.aborted = true;
    res.abort_reason = reason;
    return res;
  };

  Rng federator_rng(mix_seed(seed, 0xFED0u, round, 0));
  auto client_rng = [&](int id, std::uint64_t attempt) {
    return Rng(mix_seed(seed, 0xC11Eu ^ (static_cast<std::uint64_t>(id) << 8), round, attempt));
  };
  auto byz_rng = [&](int id) {
    return Rng(mix_seed(seed, 0xBAD0u ^ (static_cast<std::uint64_t>(id) << 8), round, 1));
  };

  detail::ActiveSet act;
  for (int i = 1; i <= n; ++i) {
    act.ids.push_back(i);
    act.alphas.push_back(static_cast<fe>(i));
  }
  act.b_eff = cfg.b;

  // -------------------------------------------------------------------------
  // Step 1: verifiable sharing of every client's gradient.
  //
  // rows[i][k][u] = x-coefficients of coordinate u of the row polynomial that
  // dealer (position k) gave client (position i).
  // -------------------------------------------------------------------------
  const std::size_t w = static_cast<std::size_t>(z) + 1;
  std::vector<std::vector<std::vector<std::vector<fe>>>> rows;
  const int max_attempts = cfg.restart_on_vss_failure ? 3 : 1;
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    const int na = act.size();
    std::vector<EvalPoint> points(static_cast<std::size_t>(na));
    for (int p = 0; p < na; ++p) {
      points[static_cast<std::size_t>(p)] = {act.ids[static_cast<std::size_t>(p)],
                                             act.alphas[static_cast<std::size_t>(p)]};
    }
    rows.assign(static_cast<std::size_t>(na),
                std::vector<std::vector<std::vector<fe>>>(static_cast<std::size_t>(na)));
    for (int k = 0; k < na; ++k) {
      const int dealer = act.ids[static_cast<std::size_t>(k)];
      Rng deal_rng = client_rng(dealer, static_cast<std::uint64_t>(attempt));
      VssDealing dealing = vss_deal(F, gradients[static_cast<std::size_t>(dealer - 1)], z,
                                    points, deal_rng, dealer);
      if (byz.contains(dealer) && byz.corrupt_dealing) {
        // Hand the lowest-id honest client an evaluation of a different
        // polynomial (constant bumped on coordinate 0).
        for (int p = 0; p < na; ++p) {
          if (!byz.contains(act.ids[static_cast<std::size_t>(p)])) {
            dealing.rows[static_cast<std::size_t>(p)].row[0][0] =
                F.add(dealing.rows[static_cast<std::size_t>(p)].row[0][0], 1);
            break;
          }
        }
      }
      for (int p = 0; p < na; ++p) {
        rows[static_cast<std::size_t>(p)][static_cast<std::size_t>(k)] =
            dealing.rows[static_cast<std::size_t>(p)].row;
        if (p != k) {
          std::vector<fe> payload;
          if (cfg.record_payloads) {
            for (const auto& coeffs : dealing.rows[static_cast<std::size_t>(p)].row) {
              payload.insert(payload.end(), coeffs.begin(), coeffs.end());
            }
          }
          log(dealer, act.ids[static_cast<std::size_t>(p)], ProtocolStep::ShareGradients,
              MessageKind::VssRow, static_cast<std::uint32_t>(d * w),
              static_cast<std::uint64_t>(d * w) * eb, std::move(payload));
        }
      }
    }

    // Pairwise cross-check: client i sends f^k_i(alpha_j) for all dealers k.
    // checks[i][j][k*d+u] = value reported by i to j.
    std::vector<std::vector<std::vector<fe>>> checks(
        static_cast<std::size_t>(na), std::vector<std::vector<fe>>(static_cast<std::size_t>(na)));
    for (int i = 0; i < na; ++i) {
      for (int j = 0; j < na; ++j) {
        if (i == j) continue;
        auto& vals = checks[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        vals.reserve(static_cast<std::size_t>(na) * d);
        for (int k = 0; k < na; ++k) {
          for (std::size_t u = 0; u < d; ++u) {
            vals.push_back(poly_eval(
                F, rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)][u],
                act.alphas[static_cast<std::size_t>(j)]));
          }
        }
        log(act.ids[static_cast<std::size_t>(i)], act.ids[static_cast<std::size_t>(j)],
            ProtocolStep::ShareGradients, MessageKind::VssCheck,
            static_cast<std::uint32_t>(vals.size()),
            static_cast<std::uint64_t>(vals.size()) * eb,
            cfg.record_payloads ? vals : std::vector<fe>{});
      }
    }

    // Complaints: client j compares its own value against every peer's report.
    std::vector<std::vector<int>> complaint_positions(static_cast<std::size_t>(na));
    for (int j = 0; j < na; ++j) {
      const int id_j = act.ids[static_cast<std::size_t>(j)];
      const bool liar = byz.contains(id_j) && byz.false_vss_complaints;
      for (int k = 0; k < na; ++k) {
        bool complain = false;
        if (liar && !byz.contains(act.ids[static_cast<std::size_t>(k)])) {
          complain = true;
        } else {
          for (int i = 0; i < na && !complain; ++i) {
            if (i == j) continue;
            for (std::size_t u = 0; u < d && !complain; ++u) {
              const fe own = poly_eval(
                  F, rows[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)][u],
                  act.alphas[static_cast<std::size_t>(i)]);
              const fe reported =
                  checks[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]
                        [static_cast<std::size_t>(k) * d + u];
              if (own != reported) complain = true;
            }
          }
        }
        if (complain) complaint_positions[static_cast<std::size_t>(j)].push_back(k);
      }
    }
    // Broadcast complaints (one message per recipient, 4 bytes per dealer id).
    for (int j = 0; j < na; ++j) {
      const auto& list = complaint_positions[static_cast<std::size_t>(j)];
      if (list.empty()) continue;
      const int id_j = act.ids[static_cast<std::size_t>(j)];
      const auto bytes = static_cast<std::uint64_t>(list.size()) * 4;
      log(id_j, kFederatorId, ProtocolStep::ShareGradients, MessageKind::VssComplaint,
          static_cast<std::uint32_t>(list.size()), bytes);
      for (int p = 0; p < na; ++p) {
        if (p != j) {
          log(id_j, act.ids[static_cast<std::size_t>(p)], ProtocolStep::ShareGradients,
              MessageKind::VssComplaint, static_cast<std::uint32_t>(list.size()), bytes);
        }
      }
    }
    // Tally complaints per dealer; >= b_eff+1 complainants exclude the dealer.
    std::vector<int> failed_positions;
    for (int k = 0; k < na; ++k) {
      int complaints = 0;
      for (int j = 0; j < na; ++j) {
        for (int kk : complaint_positions[static_cast<std::size_t>(j)]) {
          if (kk == k) {
            ++complaints;
            break;
          }
        }
      }
      if (!vss_accept_dealer(complaints, act.b_eff)) failed_positions.push_back(k);
    }
    if (failed_positions.empty()) break;
    if (cfg.restart_on_vss_failure && attempt + 1 < max_attempts) continue;

    // Exclude the failed dealers; each exclusion provably removes a Byzantine
    // party, so the remaining budget shrinks with the active set.
    for (int k : failed_positions) res.excluded.push_back(act.ids[static_cast<std::size_t>(k)]);
    if (static_cast<int>(res.excluded.size()) > cfg.b) {
      return abort_round("more than b dealers failed share verification");
    }
    detail::ActiveSet next;
    next.b_eff = cfg.b - static_cast<int>(res.excluded.size());
    std::vector<std::vector<std::vector<std::vector<fe>>>> kept_rows;
    for (int p = 0; p < na; ++p) {
      bool failed = false;
      for (int k : failed_positions) failed |= (k == p);
      if (failed) continue;
      next.ids.push_back(act.ids[static_cast<std::size_t>(p)]);
      next.alphas.push_back(act.alphas[static_cast<std::size_t>(p)]);
      std::vector<std::vector<std::vector<fe>>> kept;
      for (int k = 0; k < na; ++k) {
        bool kf = false;
        for (int fk : failed_positions) kf |= (fk == k);
        if (!kf) kept.push_back(std::move(rows[static_cast<std::size_t>(p)][static_cast<std::size_t>(k)]));
      }
      kept_rows.push_back(std::move(kept));
    }
    act = std::move(next);
    rows = std::move(kept_rows);
    break;  // shares of surviving dealers remain valid; no re-deal needed
  }

  const int na = act.size();
  res.active = act.ids;
  const int quorum = 2 * z + 2 * act.b_eff + 1;
  if (na < quorum) return abort_round("too few active clients for the decode quorum");

  // Shamir share of dealer k's gradient held by client position i.
  auto gshare = [&](int i, int k, std::size_t u) -> fe {
    return rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)][u][0];
  };

  const BatchDecoder decode2z(F, act.alphas, 2 * z, act.b_eff);
  const BatchDecoder decodez(F, act.alphas, z, act.b_eff);

  // -------------------------------------------------------------------------
  // Steps 2-3: re-randomized distance shares, decoding, neighbor selection.
  // -------------------------------------------------------------------------
  const int npairs = na * (na - 1) / 2;
  std::vector<std::vector<fe>> distance_words(
      static_cast<std::size_t>(npairs), std::vector<fe>(static_cast<std::size_t>(na)));
  {
    // lambda polynomials are common to all clients; evaluate once per pair.
    std::vector<Polynomial> lambdas(static_cast<std::size_t>(npairs));
    int p = 0;
    for (int j = 0; j < na; ++j) {
      for (int l = j + 1; l < na; ++l, ++p) {
        const auto id_pair = static_cast<std::uint64_t>(act.ids[static_cast<std::size_t>(j)]) *
                                 1000 +
                             static_cast<std::uint64_t>(act.ids[static_cast<std::size_t>(l)]);
        Rng stream = shared.stream(SharedStream::DistanceRerandomizer, round, id_pair);
        lambdas[static_cast<std::size_t>(p)] = rerandomizer(F, z, stream);
      }
    }
    for (int i = 0; i < na; ++i) {
      const int id_i = act.ids[static_cast<std::size_t>(i)];
      const bool garbage = byz.contains(id_i) && byz.corrupt_distance_shares;
      Rng garbage_rng = byz_rng(id_i);
      std::vector<fe> values(static_cast<std::size_t>(npairs));
      p = 0;
      for (int j = 0; j < na; ++j) {
        for (int l = j + 1; l < na; ++l, ++p) {
          if (garbage) {
            values[static_cast<std::size_t>(p)] = F.uniform(garbage_rng);
          } else {
            fe acc = 0;
            for (std::size_t u = 0; u < d; ++u) {
              const fe diff = F.sub(gshare(i, j, u), gshare(i, l, u));
              acc = F.add(acc, F.mul(diff, diff));
            }
            if (!cfg.disable_rerandomization) {
              acc = F.add(acc, poly_eval(F, lambdas[static_cast<std::size_t>(p)],
                                         act.alphas[static_cast<std::size_t>(i)]));
            }
            values[static_cast<std::size_t>(p)] = acc;
          }
          distance_words[static_cast<std::size_t>(p)][static_cast<std::size_t>(i)] =
              values[static_cast<std::size_t>(p)];
        }
      }
      log(id_i, kFederatorId, ProtocolStep::DistanceShares, MessageKind::DistanceShare,
          static_cast<std::uint32_t>(npairs), static_cast<std::uint64_t>(npairs) * eb,
          cfg.record_payloads ? values : std::vector<fe>{});
    }
  }
  res.input_distances = DistanceMatrix<fe>(na);
  {
    int p = 0;
    for (int j = 0; j < na; ++j) {
      for (int l = j + 1; l < na; ++l, ++p) {
        fe value;
        try {
          value = decode2z.decode_constant(distance_words[static_cast<std::size_t>(p)]);
        } catch (const DecodingFailure&) {
          return abort_round("distance decoding failed (more than b corruptions)");
        }
        res.input_distances.at(j, l) = value;
        res.input_distances.at(l, j) = value;
      }
    }
  }
  std::vector<std::vector<int>> neighbor_positions;
  if (cfg.rule.nnm) {
    neighbor_positions = neighbor_sets(res.input_distances, act.b_eff);
    res.neighbor_ids.assign(neighbor_positions.size(), {});
    for (std::size_t j = 0; j < neighbor_positions.size(); ++j) {
      for (int pos : neighbor_positions[j]) {
        res.neighbor_ids[j].push_back(act.ids[static_cast<std::size_t>(pos)]);
      }
    }
  }

  // -------------------------------------------------------------------------
  // Steps 4-7 (NNM only): pads, private sum retrieval, re-encode, unpad.
  // mixshare[i][j][u]: client position i's share of g^NN_j (coordinate u).
  // -------------------------------------------------------------------------
  std::vector<std::vector<std::vector<fe>>> mixshare;
  if (cfg.rule.nnm) {
    mixshare.assign(static_cast<std::size_t>(na),
                    std::vector<std::vector<fe>>(static_cast<std::size_t>(na),
                                                 std::vector<fe>(d, 0)));
    const fe pad_scale = F.reduce(static_cast<std::uint64_t>(na - act.b_eff));
    for (int j = 0; j < na; ++j) {
      const int id_j = act.ids[static_cast<std::size_t>(j)];
      // Step 4: common pad for this query, unknown to the federator.
      Rng pad_stream = shared.stream(SharedStream::Pad, round, static_cast<std::uint64_t>(id_j));
      const std::vector<fe> pad = sample_pad(F, d, pad_stream);
      // Response mask: per-coordinate zero-constant degree-2z polynomials.
      Rng mask_stream =
          shared.stream(SharedStream::ResponseMask, round, static_cast<std::uint64_t>(id_j));
      std::vector<Polynomial> masks(d);
      for (std::size_t u = 0; u < d; ++u) masks[u] = rerandomizer(F, z, mask_stream);

      // Step 5a: the federator shares the indicator of N_j (degree z).
      std::vector<std::vector<fe>> query_coeffs(static_cast<std::size_t>(na),
                                                std::vector<fe>(w, 0));
      for (int l = 0; l < na; ++l) query_coeffs[static_cast<std::size_t>(l)][0] = 0;
      for (int pos : neighbor_positions[static_cast<std::size_t>(j)]) {
        query_coeffs[static_cast<std::size_t>(pos)][0] = 1;
      }
      for (int l = 0; l < na; ++l) {
        for (int t = 1; t <= z; ++t) {
          query_coeffs[static_cast<std::size_t>(l)][static_cast<std::size_t>(t)] =
              F.uniform(federator_rng);
        }
      }
      std::vector<std::vector<fe>> response_words(d, std::vector<fe>(static_cast<std::size_t>(na)));
      for (int i = 0; i < na; ++i) {
        const int id_i = act.ids[static_cast<std::size_t>(i)];
        const fe alpha = act.alphas[static_cast<std::size_t>(i)];
        std::vector<fe> query(static_cast<std::size_t>(na));
        for (int l = 0; l < na; ++l) {
          query[static_cast<std::size_t>(l)] =
              poly_eval(F, query_coeffs[static_cast<std::size_t>(l)], alpha);
        }
        log(kFederatorId, id_i, ProtocolStep::SumRetrieval, MessageKind::PirQuery,
            static_cast<std::uint32_t>(na), static_cast<std::uint64_t>(na) * eb,
            cfg.record_payloads ? query : std::vector<fe>{});

        // Step 5b: response = sum_l q_l * ([g_l]_i + m) + mask(alpha_i).
        std::vector<fe> response(d);
        if (byz.contains(id_i) && byz.corrupt_pir_responses) {
          Rng garbage_rng = byz_rng(id_i);
          response = detail::random_vector(F, d, garbage_rng);
        } else {
          fe query_total = 0;
          for (int l = 0; l < na; ++l) {
            query_total = F.add(query_total, query[static_cast<std::size_t>(l)]);
          }
          for (std::size_t u = 0; u < d; ++u) {
            fe acc = F.mul(query_total, pad[u]);
            for (int l = 0; l < na; ++l) {
              acc = F.add(acc, F.mul(query[static_cast<std::size_t>(l)], gshare(i, l, u)));
            }
            if (!cfg.disable_rerandomization) {
              acc = F.add(acc, poly_eval(F, masks[u], alpha));
            }
            response[u] = acc;
          }
        }
        for (std::size_t u = 0; u < d; ++u) {
          response_words[u][static_cast<std::size_t>(i)] = response[u];
        }
        log(id_i, kFederatorId, ProtocolStep::SumRetrieval, MessageKind::PirResponse,
            static_cast<std::uint32_t>(d), static_cast<std::uint64_t>(d) * eb,
            cfg.record_payloads ? response : std::vector<fe>{});
      }
      // Step 5c: decode the padded mixture.
      std::vector<fe> padded_mixture(d);
      for (std::size_t u = 0; u < d; ++u) {
        try {
          padded_mixture[u] = decode2z.decode_constant(response_words[u]);
        } catch (const DecodingFailure&) {
          return abort_round("sum-retrieval decoding failed (more than b corruptions)");
        }
      }
      // Step 6: fresh degree-z re-sharing of the padded mixture.
      std::vector<EvalPoint> points(static_cast<std::size_t>(na));
      for (int pnt = 0; pnt < na; ++pnt) {
        points[static_cast<std::size_t>(pnt)] = {act.ids[static_cast<std::size_t>(pnt)],
                                                 act.alphas[static_cast<std::size_t>(pnt)]};
      }
      const std::vector<Share> reshared =
          share_vector(F, padded_mixture, z, points, federator_rng, kFederatorId,
                       ShareKind::MixtureShare);
      for (int i = 0; i < na; ++i) {
        const Share& s = reshared[static_cast<std::size_t>(i)];
        log(kFederatorId, s.owner, ProtocolStep::Reencode, MessageKind::MixtureShare,
            static_cast<std::uint32_t>(d), static_cast<std::uint64_t>(d) * eb,
            cfg.record_payloads ? s.payload : std::vector<fe>{});
        // Step 7: unpad locally with the public scaling |N_j| = n - b.
        for (std::size_t u = 0; u < d; ++u) {
          mixshare[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)][u] =
              F.sub(s.payload[u], F.mul(pad_scale, pad[u]));
        }
      }
    }
  }

  // -------------------------------------------------------------------------
  // Step 8: mixture distances, selection, aggregation.
  // -------------------------------------------------------------------------
  const bool need_mixture_distances =
      cfg.rule.nnm && cfg.rule.rule != AggRule::Average;
  if (need_mixture_distances) {
    std::vector<std::vector<fe>> words(static_cast<std::size_t>(npairs),
                                       std::vector<fe>(static_cast<std::size_t>(na)));
    std::vector<Polynomial> lambdas(static_cast<std::size_t>(npairs));
    int p = 0;
    for (int j = 0; j < na; ++j) {
      for (int l = j + 1; l < na; ++l, ++p) {
        const auto id_pair = static_cast<std::uint64_t>(act.ids[static_cast<std::size_t>(j)]) *
                                 1000 +
                             static_cast<std::uint64_t>(act.ids[static_cast<std::size_t>(l)]);
        Rng stream = shared.stream(SharedStream::MixtureRerandomizer, round, id_pair);
        lambdas[static_cast<std::size_t>(p)] = rerandomizer(F, z, stream);
      }
    }
    for (int i = 0; i < na; ++i) {
      const int id_i = act.ids[static_cast<std::size_t>(i)];
      const bool garbage = byz.contains(id_i) && byz.corrupt_distance_shares;
      Rng garbage_rng(mix_seed(seed, 0xBAD8u ^ (static_cast<std::uint64_t>(id_i) << 8), round, 2));
      std::vector<fe> values(static_cast<std::size_t>(npairs));
      p = 0;
      for (int j = 0; j < na; ++j) {
        for (int l = j + 1; l < na; ++l, ++p) {
          if (garbage) {
            values[static_cast<std::size_t>(p)] = F.uniform(garbage_rng);
          } else {
            fe acc = 0;
            const auto& mi = mixshare[static_cast<std::size_t>(i)];
            for (std::size_t u = 0; u < d; ++u) {
              const fe diff = F.sub(mi[static_cast<std::size_t>(j)][u],
                                    mi[static_cast<std::size_t>(l)][u]);
              acc = F.add(acc, F.mul(diff, diff));
            }
            if (!cfg.disable_rerandomization) {
              acc = F.add(acc, poly_eval(F, lambdas[static_cast<std::size_t>(p)],
                                         act.alphas[static_cast<std::size_t>(i)]));
            }
            values[static_cast<std::size_t>(p)] = acc;
          }
          words[static_cast<std::size_t>(p)][static_cast<std::size_t>(i)] =
              values[static_cast<std::size_t>(p)];
        }
      }
      log(id_i, kFederatorId, ProtocolStep::Aggregate, MessageKind::MixtureDistanceShare,
          static_cast<std::uint32_t>(npairs), static_cast<std::uint64_t>(npairs) * eb,
          cfg.record_payloads ? values : std::vector<fe>{});
    }
    res.mixture_distances = DistanceMatrix<fe>(na);
    p = 0;
    for (int j = 0; j < na; ++j) {
      for (int l = j + 1; l < na; ++l, ++p) {
        fe value;
        try {
          value = decode2z.decode_constant(words[static_cast<std::size_t>(p)]);
        } catch (const DecodingFailure&) {
          return abort_round("mixture-distance decoding failed (more than b corruptions)");
        }
        res.mixture_distances.at(j, l) = value;
        res.mixture_distances.at(l, j) = value;
      }
    }
  } else if (!cfg.rule.nnm) {
    res.mixture_distances = res.input_distances;
  }

  std::vector<int> selected_positions;
  switch (cfg.rule.rule) {
    case AggRule::Krum:
      selected_positions = krum_select(res.mixture_distances, act.b_eff).selected;
      break;
    case AggRule::MultiKrum:
      selected_positions = multikrum_select(res.mixture_distances, act.b_eff).selected;
      break;
    case AggRule::Average:
      for (int j = 0; j < na; ++j) selected_positions.push_back(j);
      break;
  }
  for (int pos : selected_positions) {
    res.selected.push_back(act.ids[static_cast<std::size_t>(pos)]);
  }

  // Share of the selected sum held by client position i (degree z).
  auto selected_sum_share = [&](int i, std::size_t u) -> fe {
    fe acc = 0;
    for (int s : selected_positions) {
      acc = F.add(acc, cfg.rule.nnm
                           ? mixshare[static_cast<std::size_t>(i)][static_cast<std::size_t>(s)][u]
                           : gshare(i, s, u));
    }
    return acc;
  };

  std::vector<std::vector<fe>> aggregate_words(d, std::vector<fe>(static_cast<std::size_t>(na)));
  if (!cfg.private_final_aggregation) {
    // Broadcast C*, collect sums of the selected shares.
    for (int i = 0; i < na; ++i) {
      log(kFederatorId, act.ids[static_cast<std::size_t>(i)], ProtocolStep::Aggregate,
          MessageKind::SelectionBroadcast, static_cast<std::uint32_t>(res.selected.size()),
          static_cast<std::uint64_t>(res.selected.size()) * 4);
    }
    for (int i = 0; i < na; ++i) {
      const int id_i = act.ids[static_cast<std::size_t>(i)];
      std::vector<fe> share(d);
      if (byz.contains(id_i) && byz.corrupt_aggregate_shares) {
        Rng garbage_rng(
            mix_seed(seed, 0xBADAu ^ (static_cast<std::uint64_t>(id_i) << 8), round, 3));
        share = detail::random_vector(F, d, garbage_rng);
      } else {
        for (std::size_t u = 0; u < d; ++u) share[u] = selected_sum_share(i, u);
      }
      for (std::size_t u = 0; u < d; ++u) aggregate_words[u][static_cast<std::size_t>(i)] = share[u];
      log(id_i, kFederatorId, ProtocolStep::Aggregate, MessageKind::AggregateShare,
          static_cast<std::uint32_t>(d), static_cast<std::uint64_t>(d) * eb,
          cfg.record_payloads ? share : std::vector<fe>{});
    }
    for (std::size_t u = 0; u < d; ++u) {
      try {
        res.aggregate_field.push_back(decodez.decode_constant(aggregate_words[u]));
      } catch (const DecodingFailure&) {
        return abort_round("aggregate decoding failed (more than b corruptions)");
      }
    }
  } else {
    // Private final aggregation: a second sum-retrieval round over the
    // mixture shares with the indicator of C*; clients never learn C*.
    Rng mask_stream = shared.stream(SharedStream::FinalMask, round, 0);
    std::vector<Polynomial> masks(d);
    for (std::size_t u = 0; u < d; ++u) masks[u] = rerandomizer(F, z, mask_stream);
    std::vector<std::vector<fe>> query_coeffs(static_cast<std::size_t>(na),
                                              std::vector<fe>(w, 0));
    for (int s : selected_positions) query_coeffs[static_cast<std::size_t>(s)][0] = 1;
    for (int l = 0; l < na; ++l) {
      for (int t = 1; t <= z; ++t) {
        query_coeffs[static_cast<std::size_t>(l)][static_cast<std::size_t>(t)] =
            F.uniform(federator_rng);
      }
    }
    for (int i = 0; i < na; ++i) {
      const int id_i = act.ids[static_cast<std::size_t>(i)];
      const fe alpha = act.alphas[static_cast<std::size_t>(i)];
      std::vector<fe> query(static_cast<std::size_t>(na));
      for (int l = 0; l < na; ++l) {
        query[static_cast<std::size_t>(l)] =
            poly_eval(F, query_coeffs[static_cast<std::size_t>(l)], alpha);
      }
      log(kFederatorId, id_i, ProtocolStep::Aggregate, MessageKind::FinalQuery,
          static_cast<std::uint32_t>(na), static_cast<std::uint64_t>(na) * eb,
          cfg.record_payloads ? query : std::vector<fe>{});
      std::vector<fe> response(d);
      if (byz.contains(id_i) && byz.corrupt_pir_responses) {
        Rng garbage_rng(
            mix_seed(seed, 0xBADFu ^ (static_cast<std::uint64_t>(id_i) << 8), round, 4));
        response = detail::random_vector(F, d, garbage_rng);
      } else {
        for (std::size_t u = 0; u < d; ++u) {
          fe acc = 0;
          for (int l = 0; l < na; ++l) {
            const fe file = cfg.rule.nnm
                                ? mixshare[static_cast<std::size_t>(i)][static_cast<std::size_t>(l)][u]
                                : gshare(i, l, u);
            acc = F.add(acc, F.mul(query[static_cast<std::size_t>(l)], file));
          }
          if (!cfg.disable_rerandomization) acc = F.add(acc, poly_eval(F, masks[u], alpha));
          response[u] = acc;
        }
      }
      for (std::size_t u = 0; u < d; ++u) aggregate_words[u][static_cast<std::size_t>(i)] = response[u];
      log(id_i, kFederatorId, ProtocolStep::Aggregate, MessageKind::FinalResponse,
          static_cast<std::uint32_t>(d), static_cast<std::uint64_t>(d) * eb,
          cfg.record_payloads ? response : std::vector<fe>{});
    }
    for (std::size_t u = 0; u < d; ++u) {
      try {
        res.aggregate_field.push_back(decode2z.decode_constant(aggregate_words[u]));
      } catch (const DecodingFailure&) {
        return abort_round("final-aggregation decoding failed (more than b corruptions)");
      }
    }
  }

  res.summands = static_cast<std::uint64_t>(selected_positions.size()) *
                 (cfg.rule.nnm ? static_cast<std::uint64_t>(na - act.b_eff) : 1u);
  // Out-of-range sums are possible only when inputs were not valid
  // quantizations (undersized field or wild Byzantine inputs); the field
  // aggregate is still reported, but no real-valued result is claimed.
  try {
    res.aggregate_int.reserve(d);
    for (std::size_t u = 0; u < d; ++u) {
      res.aggregate_int.push_back(F.unembed(res.aggregate_field[u]));
    }
    res.aggregate = normalize_aggregate(cfg.quant, res.aggregate_int, res.summands);
    res.dequantize_ok = true;
  } catch (const Error&) {
    res.aggregate.clear();
    res.dequantize_ok = false;
  }
  return res;
}

}  // namespace byzagg
