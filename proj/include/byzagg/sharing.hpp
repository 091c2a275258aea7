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
#include <string>
#include <vector>

#include "byzagg/errors.hpp"
#include "byzagg/field.hpp"
#include "byzagg/poly.hpp"
#include "byzagg/rng.hpp"

namespace byzagg {

// Party identifiers: clients are 1..n, the federator is 0.
constexpr int kFederatorId = 0;

struct EvalPoint {
  int client_id = 0;
  fe alpha = 0;
};

// Default assignment: client i evaluates at alpha = i.  Requires n < q so the
// points are distinct and nonzero.
inline std::vector<EvalPoint> sequential_eval_points(const Field& F, int n) {
  if (n < 1) throw ConfigInvalid("need at least one client");
  if (static_cast<std::uint64_t>(n) >= F.q()) {
    throw ConfigInvalid("field too small for " + std::to_string(n) + " evaluation points");
  }
  std::vector<EvalPoint> points;
  points.reserve(static_cast<std::size_t>(n));
  for (int i = 1; i <= n; ++i) points.push_back({i, static_cast<fe>(i)});
  return points;
}

enum class ShareKind {
  GradientShare,
  DistanceShare,
  PaddedGradientShare,
  MixtureShare,
  QueryShare,
  ResponseShare,
};

struct Share {
  int owner = 0;   // client holding the share
  int source = 0;  // dealer (client id, or kFederatorId)
  ShareKind kind = ShareKind::GradientShare;
  int degree = 0;
  fe alpha = 0;                // owner's evaluation point
  std::vector<fe> payload;     // one field element per secret coordinate
};

// Plain Shamir sharing: one polynomial per coordinate with the secret in the
// constant term and z uniform higher coefficients.
inline std::vector<Share> share_vector(const Field& F, std::span<const fe> secret, int z,
                                       std::span<const EvalPoint> points, Rng& rng,
                                       int source = kFederatorId,
                                       ShareKind kind = ShareKind::GradientShare) {
  if (z < 1) throw ConfigInvalid("sharing degree must be at least 1");
  if (static_cast<int>(points.size()) <= z) {
    throw InsufficientClients("need more than z = " + std::to_string(z) +
                              " clients to share, got " + std::to_string(points.size()));
  }
  std::vector<Share> shares(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    shares[i].owner = points[i].client_id;
    shares[i].source = source;
    shares[i].kind = kind;
    shares[i].degree = z;
    shares[i].alpha = points[i].alpha;
    shares[i].payload.assign(secret.size(), 0);
  }
  std::vector<fe> coeffs(static_cast<std::size_t>(z) + 1);
  for (std::size_t u = 0; u < secret.size(); ++u) {
    coeffs[0] = secret[u];
    for (int t = 1; t <= z; ++t) coeffs[static_cast<std::size_t>(t)] = F.uniform(rng);
    for (std::size_t i = 0; i < points.size(); ++i) {
      shares[i].payload[u] = poly_eval(F, coeffs, points[i].alpha);
    }
  }
  return shares;
}

// Error-free reconstruction of the shared vector; throws DecodingFailure if
// the provided shares are inconsistent with the claimed degree.  Robust
// recovery in the presence of corrupted shares goes through rs_decode.
inline std::vector<fe> reconstruct_at_zero(const Field& F, std::span<const Share> shares) {
  if (shares.empty()) throw ConfigInvalid("no shares to reconstruct from");
  const int degree = shares[0].degree;
  const std::size_t d = shares[0].payload.size();
  std::vector<fe> xs;
  xs.reserve(shares.size());
  for (const Share& s : shares) {
    if (s.degree != degree || s.payload.size() != d) {
      throw ConfigInvalid("inconsistent shares passed to reconstruct_at_zero");
    }
    xs.push_back(s.alpha);
  }
  if (static_cast<int>(shares.size()) < degree + 1) {
    throw InsufficientClients("need degree+1 shares to reconstruct");
  }
  std::vector<fe> secret(d);
  std::vector<fe> ys(shares.size());
  for (std::size_t u = 0; u < d; ++u) {
    for (std::size_t i = 0; i < shares.size(); ++i) ys[i] = shares[i].payload[u];
    secret[u] = rs_decode(F, xs, ys, degree, 0).c[0];
  }
  return secret;
}

// ---------------------------------------------------------------------------
// Verifiable secret sharing (symmetric bivariate polynomials)
//
// The dealer samples, per coordinate, a symmetric S(x, y) of degree z in each
// variable with S(0,0) = secret, and hands client i the row polynomial
// f_i(x) = S(x, alpha_i).  Client i's Shamir share of the secret is f_i(0),
// and any pair (i, j) can cross-check f_i(alpha_j) = f_j(alpha_i).  A dealer
// drawing at least b+1 complaints is excluded: with at most b Byzantine
// clients, at least one complaint then provably came from an honest pair.
// ---------------------------------------------------------------------------

struct VssRowShare {
  int dealer = 0;
  int owner = 0;
  fe alpha = 0;
  // row[u] holds the z+1 x-coefficients of coordinate u's row polynomial.
  std::vector<std::vector<fe>> row;
};

struct VssDealing {
  int dealer = 0;
  int z = 0;
  std::vector<VssRowShare> rows;  // aligned with the evaluation-point order
};

inline VssDealing vss_deal(const Field& F, std::span<const fe> secret, int z,
                           std::span<const EvalPoint> points, Rng& rng, int dealer_id) {
  if (z < 1) throw ConfigInvalid("sharing degree must be at least 1");
  if (static_cast<int>(points.size()) <= z) {
    throw InsufficientClients("need more than z clients for verifiable sharing");
  }
  const std::size_t w = static_cast<std::size_t>(z) + 1;
  VssDealing dealing;
  dealing.dealer = dealer_id;
  dealing.z = z;
  dealing.rows.resize(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    dealing.rows[i].dealer = dealer_id;
    dealing.rows[i].owner = points[i].client_id;
    dealing.rows[i].alpha = points[i].alpha;
    dealing.rows[i].row.assign(secret.size(), std::vector<fe>(w, 0));
  }
  std::vector<std::vector<fe>> S(w, std::vector<fe>(w));
  for (std::size_t u = 0; u < secret.size(); ++u) {
    S[0][0] = secret[u];
    for (std::size_t a = 0; a < w; ++a) {
      for (std::size_t c = a; c < w; ++c) {
        if (a == 0 && c == 0) continue;
        S[a][c] = F.uniform(rng);
        S[c][a] = S[a][c];
      }
    }
    for (std::size_t i = 0; i < points.size(); ++i) {
      const fe alpha = points[i].alpha;
      auto& coeffs = dealing.rows[i].row[u];
      for (std::size_t a = 0; a < w; ++a) {
        // coefficient of x^a in S(x, alpha): sum_c S[a][c] * alpha^c
        fe acc = 0;
        for (std::size_t c = w; c-- > 0;) acc = F.add(F.mul(acc, alpha), S[a][c]);
        coeffs[a] = acc;
      }
    }
  }
  return dealing;
}

// Client i's Shamir share of the dealt secret: the row evaluated at x = 0.
inline std::vector<fe> vss_own_share(const VssRowShare& row) {
  std::vector<fe> share(row.row.size());
  for (std::size_t u = 0; u < row.row.size(); ++u) share[u] = row.row[u][0];
  return share;
}

// Values client `row.owner` sends to the peer at `peer_alpha` for the
// symmetry check: f_i(alpha_j) per coordinate.
inline std::vector<fe> vss_check_values(const Field& F, const VssRowShare& row, fe peer_alpha) {
  std::vector<fe> values(row.row.size());
  for (std::size_t u = 0; u < row.row.size(); ++u) {
    values[u] = poly_eval(F, row.row[u], peer_alpha);
  }
  return values;
}

// Reference complaint count for one dealer, used as the oracle for the
// message-level implementation in the protocol simulator.  A client complains
// if any peer's reported f_j(alpha_i) disagrees with its own f_i(alpha_j);
// `false_complainers` complain regardless of evidence.
inline int vss_count_complaints(const Field& F, const std::vector<VssRowShare>& rows,
                                std::span<const int> false_complainers = {}) {
  const std::size_t n = rows.size();
  std::vector<bool> complains(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const std::vector<fe> from_i = vss_check_values(F, rows[i], rows[j].alpha);
      const std::vector<fe> from_j = vss_check_values(F, rows[j], rows[i].alpha);
      if (from_i != from_j) {
        complains[i] = true;
        complains[j] = true;
      }
    }
  }
  for (int id : false_complainers) {
    for (std::size_t i = 0; i < n; ++i) {
      if (rows[i].owner == id) complains[i] = true;
    }
  }
  int count = 0;
  for (bool c : complains) count += c ? 1 : 0;
  return count;
}

inline bool vss_accept_dealer(int complaints, int b) { return complaints <= b; }

// ---------------------------------------------------------------------------
// Re-randomization and pads
// ---------------------------------------------------------------------------

// lambda(x) = x r1 + ... + x^{2z} r_{2z}: a degree-2z polynomial with zero
// constant term, identical at every client holding the shared seed.  Added to
// products of degree-z shares it re-randomizes all non-constant coefficients
// without disturbing the encoded value.
inline Polynomial rerandomizer(const Field& F, int z, Rng& stream) {
  if (z < 1) throw ConfigInvalid("rerandomizer needs z >= 1");
  Polynomial lambda;
  lambda.c.assign(static_cast<std::size_t>(2 * z) + 1, 0);
  for (std::size_t t = 1; t < lambda.c.size(); ++t) lambda.c[t] = F.uniform(stream);
  return lambda;
}

inline std::vector<fe> sample_pad(const Field& F, std::size_t d, Rng& stream) {
  std::vector<fe> pad(d);
  for (auto& v : pad) v = F.uniform(stream);
  return pad;
}

// Share-space addition of a public-per-client pad equals coefficient-space
// addition of the pad to the constant term.
inline void pad_share(const Field& F, Share& share, std::span<const fe> pad) {
  if (share.payload.size() != pad.size()) {
    throw ConfigInvalid("pad dimension mismatch");
  }
  for (std::size_t u = 0; u < pad.size(); ++u) {
    share.payload[u] = F.add(share.payload[u], pad[u]);
  }
  share.kind = ShareKind::PaddedGradientShare;
}

}  // namespace byzagg
