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

#include "byzagg/sharing.hpp"

#include <gtest/gtest.h>

#include <cstdint>
#include <vector>

#include "byzagg/errors.hpp"
#include "byzagg/field.hpp"
#include "byzagg/poly.hpp"
#include "byzagg/rng.hpp"
#include "byzagg/stats.hpp"

namespace byzagg {
namespace {

TEST(EvalPoints, SequentialAssignment) {
  Field F(31);
  const auto points = sequential_eval_points(F, 5);
  ASSERT_EQ(points.size(), 5u);
  for (int i = 0; i < 5; ++i) {
    EXPECT_EQ(points[static_cast<std::size_t>(i)].client_id, i + 1);
    EXPECT_EQ(points[static_cast<std::size_t>(i)].alpha, static_cast<fe>(i + 1));
  }
  EXPECT_THROW(sequential_eval_points(F, 31), ConfigInvalid);
}

TEST(ShareVector, KnownEvaluationMod31) {
  // secret 7, r1 = 3: share at alpha = 2 is 7 + 2*3 = 13.
  Field F(31);
  const std::vector<fe> poly = {7, 3};
  EXPECT_EQ(poly_eval(F, poly, 2), 13u);
}

TEST(ShareVector, ReconstructsFromZPlusOneShares) {
  Field F = Field::mersenne61();
  Rng rng(1);
  const auto points = sequential_eval_points(F, 7);
  for (int z : {1, 2, 3}) {
    std::vector<fe> secret(5);
    for (auto& s : secret) s = F.uniform(rng);
    const auto shares = share_vector(F, secret, z, points, rng, 3);
    // Any z+1 shares suffice; use the last ones to exercise a nontrivial subset.
    std::vector<Share> subset(shares.end() - (z + 1), shares.end());
    EXPECT_EQ(reconstruct_at_zero(F, subset), secret);
    // All shares together also reconstruct (consistency across the full set).
    EXPECT_EQ(reconstruct_at_zero(F, shares), secret);
    for (const Share& s : shares) {
      EXPECT_EQ(s.source, 3);
      EXPECT_EQ(s.degree, z);
      EXPECT_EQ(s.payload.size(), secret.size());
    }
  }
}

TEST(ShareVector, TooFewClientsThrows) {
  Field F(31);
  Rng rng(2);
  const auto points = sequential_eval_points(F, 2);
  const std::vector<fe> secret = {7};
  EXPECT_THROW(share_vector(F, secret, 2, points, rng), InsufficientClients);
  EXPECT_THROW(share_vector(F, secret, 0, points, rng), ConfigInvalid);
}

TEST(ShareVector, SingleShareIsUniform) {
  // One share of a degree-1 sharing must look uniform regardless of the
  // secret: histogram client 1's share over many resharings.
  Field F(31);
  Rng rng(3);
  const auto points = sequential_eval_points(F, 3);
  const std::vector<fe> secret = {7};
  std::vector<std::uint64_t> counts(31, 0);
  for (int trial = 0; trial < 10000; ++trial) {
    const auto shares = share_vector(F, secret, 1, points, rng);
    counts[shares[0].payload[0]] += 1;
  }
  EXPECT_GT(chi2_uniform(counts).p_value, 0.01);
}

TEST(ShareVector, CoalitionShareDistributionIndependentOfSecret) {
  // Statistical proxy for perfect z-privacy: the distribution of a single
  // share (z = 1 coalition) under secret 7 matches the one under secret 20.
  Field F(31);
  Rng rng(4);
  const auto points = sequential_eval_points(F, 3);
  std::vector<std::uint64_t> counts_a(31, 0), counts_b(31, 0);
  const std::vector<fe> secret_a = {7}, secret_b = {20};
  for (int trial = 0; trial < 10000; ++trial) {
    counts_a[share_vector(F, secret_a, 1, points, rng)[1].payload[0]] += 1;
    counts_b[share_vector(F, secret_b, 1, points, rng)[1].payload[0]] += 1;
  }
  EXPECT_GT(chi2_two_sample(counts_a, counts_b).p_value, 0.01);
}

TEST(ShareVector, ErrorCorrectedReconstruction) {
  // Corrupting up to b of 2(z+b)+1 shares leaves rs_decode unchanged.
  Field F = Field::mersenne61();
  Rng rng(5);
  const int z = 2, b = 2;
  const int n = 2 * (z + b) + 1;
  const auto points = sequential_eval_points(F, n);
  for (int trial = 0; trial < 50; ++trial) {
    const std::vector<fe> secret = {F.uniform(rng)};
    const auto shares = share_vector(F, secret, z, points, rng);
    std::vector<fe> xs, ys;
    for (const Share& s : shares) {
      xs.push_back(s.alpha);
      ys.push_back(s.payload[0]);
    }
    for (int c = 0; c < b; ++c) ys[rng.below(static_cast<std::uint64_t>(n))] = F.uniform(rng);
    EXPECT_EQ(rs_decode(F, xs, ys, z, b).c[0], secret[0]);
  }
}

// ---------------------------------------------------------------------------
// Verifiable secret sharing
// ---------------------------------------------------------------------------

TEST(Vss, HonestDealingAcceptedAndSharesReconstruct) {
  Field F = Field::mersenne61();
  Rng rng(6);
  const int n = 7, z = 2, b = 2;  // n > 3b
  const auto points = sequential_eval_points(F, n);
  std::vector<fe> secret(4);
  for (auto& s : secret) s = F.uniform(rng);
  const VssDealing dealing = vss_deal(F, secret, z, points, rng, 1);
  EXPECT_EQ(vss_count_complaints(F, dealing.rows), 0);
  EXPECT_TRUE(vss_accept_dealer(0, b));
  // Pairwise symmetry holds exactly.
  for (std::size_t i = 0; i < dealing.rows.size(); ++i) {
    for (std::size_t j = i + 1; j < dealing.rows.size(); ++j) {
      EXPECT_EQ(vss_check_values(F, dealing.rows[i], dealing.rows[j].alpha),
                vss_check_values(F, dealing.rows[j], dealing.rows[i].alpha));
    }
  }
  // The constant terms of the rows are a degree-z sharing of the secret.
  std::vector<Share> shares;
  for (const auto& row : dealing.rows) {
    Share s;
    s.owner = row.owner;
    s.alpha = row.alpha;
    s.degree = z;
    s.payload = vss_own_share(row);
    shares.push_back(s);
  }
  EXPECT_EQ(reconstruct_at_zero(F, shares), secret);
}

TEST(Vss, CorruptedRowDrawsComplaintsFromHonestMajority) {
  Field F = Field::mersenne61();
  Rng rng(7);
  const int n = 7, z = 2, b = 2;
  const auto points = sequential_eval_points(F, n);
  std::vector<fe> secret(2);
  for (auto& s : secret) s = F.uniform(rng);
  VssDealing dealing = vss_deal(F, secret, z, points, rng, 1);
  // Dealer hands client 1 an evaluation of a different polynomial.
  dealing.rows[0].row[0][0] = F.add(dealing.rows[0].row[0][0], 1);
  const int complaints = vss_count_complaints(F, dealing.rows);
  // Client 1 disagrees with every peer, so client 1 and all n-1 peers complain.
  EXPECT_EQ(complaints, n);
  EXPECT_GE(complaints, b + 1);
  EXPECT_FALSE(vss_accept_dealer(complaints, b));
}

TEST(Vss, FalseComplaintsBelowThresholdDoNotExclude) {
  Field F = Field::mersenne61();
  Rng rng(8);
  const int n = 7, z = 2, b = 2;
  const auto points = sequential_eval_points(F, n);
  const std::vector<fe> secret = {5};
  const VssDealing dealing = vss_deal(F, secret, z, points, rng, 4);
  const std::vector<int> liars = {2, 6};  // b false complainers
  const int complaints = vss_count_complaints(F, dealing.rows, liars);
  EXPECT_EQ(complaints, b);
  EXPECT_TRUE(vss_accept_dealer(complaints, b));
}

// ---------------------------------------------------------------------------
// Re-randomizers and pads
// ---------------------------------------------------------------------------

TEST(Rerandomizer, ZeroConstantAndDeterministic) {
  Field F = Field::mersenne61();
  SharedRandomness sr(99);
  for (int z : {1, 2, 3}) {
    Rng s1 = sr.stream(SharedStream::DistanceRerandomizer, 5, 7);
    Rng s2 = sr.stream(SharedStream::DistanceRerandomizer, 5, 7);
    const Polynomial l1 = rerandomizer(F, z, s1);
    const Polynomial l2 = rerandomizer(F, z, s2);
    EXPECT_EQ(l1.c, l2.c);
    EXPECT_EQ(l1.c[0], 0u);
    EXPECT_EQ(static_cast<int>(l1.c.size()), 2 * z + 1);
    EXPECT_EQ(poly_eval(F, l1, 0), 0u);
  }
}

TEST(Rerandomizer, DoesNotDisturbDecodedDistance) {
  // Clients hold degree-z shares of two gradients; each computes the squared
  // share-difference plus lambda(alpha_i).  The rs-decoded constant is the
  // true squared distance, with or without the re-randomizer.
  Field F = Field::mersenne61();
  Rng rng(9);
  SharedRandomness sr(100);
  const int z = 1, b = 1, n = 5;  // n = 2z + 2b + 1
  const auto points = sequential_eval_points(F, n);
  const std::vector<std::int64_t> a = {3, -2, 5}, c = {-1, 4, 5};
  std::int64_t true_dist = 0;
  std::vector<fe> ea, ec;
  for (std::size_t u = 0; u < a.size(); ++u) {
    true_dist += (a[u] - c[u]) * (a[u] - c[u]);
    ea.push_back(F.embed(a[u]));
    ec.push_back(F.embed(c[u]));
  }
  const auto shares_a = share_vector(F, ea, z, points, rng);
  const auto shares_c = share_vector(F, ec, z, points, rng);
  Rng stream = sr.stream(SharedStream::DistanceRerandomizer, 0, 0);
  const Polynomial lambda = rerandomizer(F, z, stream);
  std::vector<fe> xs, with_lambda, without_lambda;
  for (int i = 0; i < n; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    fe acc = 0;
    for (std::size_t u = 0; u < a.size(); ++u) {
      const fe diff = F.sub(shares_a[idx].payload[u], shares_c[idx].payload[u]);
      acc = F.add(acc, F.mul(diff, diff));
    }
    xs.push_back(points[idx].alpha);
    without_lambda.push_back(acc);
    with_lambda.push_back(F.add(acc, poly_eval(F, lambda, points[idx].alpha)));
  }
  const fe decoded_plain = rs_decode(F, xs, without_lambda, 2 * z, b).c[0];
  const fe decoded_rerand = rs_decode(F, xs, with_lambda, 2 * z, b).c[0];
  EXPECT_EQ(decoded_plain, decoded_rerand);
  EXPECT_EQ(F.unembed(decoded_rerand), true_dist);
}

TEST(Pads, PaddedSharesReconstructPaddedSecret) {
  Field F = Field::mersenne61();
  Rng rng(10);
  SharedRandomness sr(101);
  const int z = 2, n = 6;
  const auto points = sequential_eval_points(F, n);
  std::vector<fe> secret(3);
  for (auto& s : secret) s = F.uniform(rng);
  auto shares = share_vector(F, secret, z, points, rng);
  Rng pad_stream = sr.stream(SharedStream::Pad, 3, 2);
  const std::vector<fe> pad = sample_pad(F, secret.size(), pad_stream);
  for (auto& s : shares) pad_share(F, s, pad);
  const std::vector<fe> recon = reconstruct_at_zero(F, shares);
  for (std::size_t u = 0; u < secret.size(); ++u) {
    EXPECT_EQ(recon[u], F.add(secret[u], pad[u]));
    EXPECT_EQ(shares[0].kind, ShareKind::PaddedGradientShare);
  }
}

TEST(Pads, ZeroPadIsIdentityAndStreamsAgree) {
  Field F = Field::mersenne61();
  Rng rng(11);
  SharedRandomness sr(102);
  const auto points = sequential_eval_points(F, 4);
  const std::vector<fe> secret = {42, 17};
  auto shares = share_vector(F, secret, 1, points, rng);
  const auto original_payload = shares[2].payload;
  const std::vector<fe> zero_pad(secret.size(), 0);
  pad_share(F, shares[2], zero_pad);
  EXPECT_EQ(shares[2].payload, original_payload);
  // Two clients deriving the pad for the same (round, target) agree.
  Rng sa = sr.stream(SharedStream::Pad, 9, 4);
  Rng sb = sr.stream(SharedStream::Pad, 9, 4);
  EXPECT_EQ(sample_pad(F, 8, sa), sample_pad(F, 8, sb));
}

}  // namespace
}  // namespace byzagg
