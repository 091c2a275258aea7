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
#include <cstdint>

namespace byzagg {

// Deterministic, platform-independent randomness.  We avoid the <random>
// distributions on purpose: their output is not pinned by the standard, so
// results would differ across standard libraries.  The raw generator is
// xoshiro256** seeded through splitmix64; the floating-point helpers are
// hand-rolled (53-bit uniforms, Box-Muller normals) so that a seed produces
// the same trajectory everywhere.

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Collapses up to four words into one well-mixed seed.  Used to derive
// per-party / per-round / per-purpose streams from a single run seed.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0,
                              std::uint64_t d = 0) {
  std::uint64_t x = a;
  std::uint64_t h = splitmix64_next(x);
  x ^= b;
  h = (h << 1 | h >> 63) ^ splitmix64_next(x);
  x ^= c;
  h = (h << 1 | h >> 63) ^ splitmix64_next(x);
  x ^= d;
  h = (h << 1 | h >> 63) ^ splitmix64_next(x);
  return h;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t s = seed;
    for (auto& word : s_) word = splitmix64_next(s);
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform in [0, bound) without modulo bias.  bound must be >= 1.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t threshold = (0 - bound) % bound;  // 2^64 mod bound
    for (;;) {
      const std::uint64_t r = next();
      if (r >= threshold) return r % bound;
    }
  }

  // Uniform double in [0, 1) with 53 significant bits.
  double real() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller; the spare value is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1;
    do {
      u1 = real();
    } while (u1 <= 0.0);
    const double u2 = real();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 6.283185307179586476925286766559 * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::uint64_t s_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Labels for the independent streams drawn from the client-shared seed.
// Each (purpose, round, index) triple yields its own generator, so values
// are never reused across protocol steps or rounds.
enum class SharedStream : std::uint64_t {
  DistanceRerandomizer = 1,  // pairwise masks for distance shares
  MixtureRerandomizer = 2,   // pairwise masks for mixture-distance shares
  Pad = 3,                   // additive pads hiding gradients from the federator
  ResponseMask = 4,          // zero-constant masks on sum-retrieval responses
  FinalMask = 5,             // masks for the private final-aggregation round
  ZeroOrderDirection = 6,    // common perturbation directions for gradient estimates
};

// Randomness shared by all clients but unknown to the federator.  In a real
// deployment this would come from pairwise-agreed PRF keys; the simulation
// models it as a common seed that the federator never sees.
class SharedRandomness {
 public:
  explicit SharedRandomness(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  Rng stream(SharedStream purpose, std::uint64_t round, std::uint64_t index = 0,
             std::uint64_t subindex = 0) const {
    return Rng(mix_seed(seed_, static_cast<std::uint64_t>(purpose), round,
                        mix_seed(index, subindex)));
  }

 private:
  std::uint64_t seed_;
};

}  // namespace byzagg
