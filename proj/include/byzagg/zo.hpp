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
#include <functional>
#include <span>
#include <vector>

#include "byzagg/errors.hpp"
#include "byzagg/rng.hpp"

namespace byzagg {

// Symmetric two-point zero-order gradient estimation.  All clients derive the
// same perturbation directions from the shared randomness, so their estimates
// live in the same R-dimensional subspace and differ only through their local
// losses; that is what makes the d -> R compression argument work.

struct ZoConfig {
  int R = 64;                       // perturbations per round
  double zo_mu = 1e-3;              // smoothing radius
  bool average_perturbations = false;  // divide the sum by R

  void validate() const {
    if (R < 1) throw ConfigInvalid("zo: need R >= 1");
    if (!(zo_mu > 0.0)) throw ConfigInvalid("zo: smoothing radius must be positive");
  }
};

// R directions uniform on the unit sphere (normalized Gaussians), identical
// for every holder of the shared seed.
inline std::vector<std::vector<double>> sample_perturbations(int d, int R,
                                                             const SharedRandomness& sr,
                                                             std::uint64_t round) {
  if (d < 1 || R < 1) throw ConfigInvalid("sample_perturbations: need d >= 1, R >= 1");
  std::vector<std::vector<double>> zs(static_cast<std::size_t>(R),
                                      std::vector<double>(static_cast<std::size_t>(d)));
  for (int r = 0; r < R; ++r) {
    Rng rng = sr.stream(SharedStream::ZeroOrderDirection, round, static_cast<std::uint64_t>(r));
    auto& z = zs[static_cast<std::size_t>(r)];
    double norm2 = 0.0;
    do {
      norm2 = 0.0;
      for (auto& x : z) {
        x = rng.normal();
        norm2 += x * x;
      }
    } while (norm2 == 0.0);
    const double inv_norm = 1.0 / std::sqrt(norm2);
    for (auto& x : z) x *= inv_norm;
  }
  return zs;
}

// g_hat = sum_r d * (F(w + mu z_r) - F(w - mu z_r)) / (2 mu) * z_r
// (or the average over r when the flag is set).
inline std::vector<double> zo_estimate(const std::function<double(std::span<const double>)>& loss,
                                       std::span<const double> w, const ZoConfig& cfg,
                                       const SharedRandomness& sr, std::uint64_t round) {
  cfg.validate();
  const int d = static_cast<int>(w.size());
  if (d < 1) throw ConfigInvalid("zo_estimate: empty parameter vector");
  const auto zs = sample_perturbations(d, cfg.R, sr, round);
  std::vector<double> estimate(w.size(), 0.0);
  std::vector<double> shifted(w.begin(), w.end());
  for (const auto& z : zs) {
    for (std::size_t u = 0; u < w.size(); ++u) shifted[u] = w[u] + cfg.zo_mu * z[u];
    const double up = loss(shifted);
    for (std::size_t u = 0; u < w.size(); ++u) shifted[u] = w[u] - cfg.zo_mu * z[u];
    const double down = loss(shifted);
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw InvalidLoss("zero-order estimate hit a non-finite loss");
    }
    const double coeff = static_cast<double>(d) * (up - down) / (2.0 * cfg.zo_mu);
    for (std::size_t u = 0; u < w.size(); ++u) estimate[u] += coeff * z[u];
  }
  if (cfg.average_perturbations) {
    for (auto& x : estimate) x /= static_cast<double>(cfg.R);
  }
  return estimate;
}

}  // namespace byzagg
