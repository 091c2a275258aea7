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
#include <span>
#include <string>
#include <vector>

#include "byzagg/errors.hpp"
#include "byzagg/field.hpp"
#include "byzagg/rng.hpp"

namespace byzagg {

// Stochastic quantization of real gradients onto a uniform grid of `levels`
// points spanning [-clip, clip], represented as signed grid indices embedded
// into the field.
//
// For odd level counts the grid contains zero and index s maps to s*step.
// For even level counts (the common case, e.g. 1024) the symmetric grid has
// no zero point; indices map to s*step + step/2.  Storing indices rather than
// scaled values keeps every intermediate integer, so aggregation over the
// field is exact and the offset is corrected at dequantization time, where
// the number of summands is known.
struct QuantConfig {
  std::uint64_t levels = 1024;
  double clip = 1.0;
  Field field = Field::mersenne61();

  void validate() const {
    if (levels < 2) throw ConfigInvalid("quantizer needs at least 2 levels");
    if (!(clip > 0.0) || !std::isfinite(clip)) {
      throw ConfigInvalid("quantizer clip bound must be positive and finite");
    }
    if (field.q() == 0) throw ConfigInvalid("quantizer field not initialized");
  }

  double step() const { return 2.0 * clip / static_cast<double>(levels - 1); }

  bool offset_grid() const { return levels % 2 == 0; }

  // Grid offset applied per quantized value: step/2 on even grids, 0 on odd.
  double offset() const { return offset_grid() ? step() / 2.0 : 0.0; }

  // Largest magnitude a single stored index can take.
  std::int64_t max_index() const {
    return static_cast<std::int64_t>(offset_grid() ? levels / 2 : (levels - 1) / 2);
  }
};

struct QuantizedGradient {
  std::vector<fe> values;

  std::size_t dimension() const { return values.size(); }
};

// The aggregation pipeline squares distances between sums of up to n-b
// quantized vectors; the field must be large enough that those integers
// cannot wrap.
inline void validate_field_size(const QuantConfig& cfg, int d, int n, int b) {
  cfg.validate();
  const std::uint64_t required = min_field_size(d, n, b, cfg.levels);
  if (cfg.field.q() < required) throw FieldTooSmall(cfg.field.q(), required);
}

// Unbiased stochastic rounding: E[dequantize(quantize(g))] = clip(g).
// Entries exactly on a grid point quantize to that point with probability 1.
// Non-finite entries are rejected.
inline QuantizedGradient quantize(std::span<const double> gradient, const QuantConfig& cfg,
                                  Rng& rng) {
  cfg.validate();
  const double step = cfg.step();
  const std::int64_t shift =
      cfg.offset_grid() ? static_cast<std::int64_t>(cfg.levels / 2)
                        : static_cast<std::int64_t>((cfg.levels - 1) / 2);
  QuantizedGradient out;
  out.values.reserve(gradient.size());
  for (std::size_t i = 0; i < gradient.size(); ++i) {
    const double x = gradient[i];
    if (!std::isfinite(x)) {
      throw InvalidGradient("non-finite gradient entry at coordinate " + std::to_string(i));
    }
    const double clipped = x < -cfg.clip ? -cfg.clip : (x > cfg.clip ? cfg.clip : x);
    // Position on the grid in units of `step`, in [0, levels-1].
    const double u = (clipped + cfg.clip) / step;
    std::int64_t lower = static_cast<std::int64_t>(std::floor(u));
    const std::int64_t top = static_cast<std::int64_t>(cfg.levels) - 2;
    if (lower > top) lower = top;
    if (lower < 0) lower = 0;
    const double p_up = u - static_cast<double>(lower);
    const std::int64_t k = lower + (rng.real() < p_up ? 1 : 0);
    out.values.push_back(cfg.field.embed(k - shift));
  }
  return out;
}

// Maps field-domain values back to reals.  `summands` is the number of
// quantized vectors that were added together (1 for a single gradient); it
// scales both the admissible magnitude and the grid-offset correction.
inline std::vector<double> dequantize(std::span<const fe> values, const QuantConfig& cfg,
                                      std::uint64_t summands = 1) {
  cfg.validate();
  if (summands < 1) throw ConfigInvalid("dequantize: summand count must be positive");
  const double step = cfg.step();
  const double offset = cfg.offset();
  const std::int64_t bound =
      static_cast<std::int64_t>(summands) * cfg.max_index();
  std::vector<double> out;
  out.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::int64_t s = cfg.field.unembed(values[i]);
    if (s > bound || s < -bound) {
      throw OverflowSuspected("aggregated value " + std::to_string(s) + " at coordinate " +
                              std::to_string(i) + " exceeds bound " + std::to_string(bound));
    }
    out.push_back(static_cast<double>(s) * step + static_cast<double>(summands) * offset);
  }
  return out;
}

inline std::vector<double> dequantize(const QuantizedGradient& g, const QuantConfig& cfg,
                                      std::uint64_t summands = 1) {
  return dequantize(std::span<const fe>(g.values), cfg, summands);
}

}  // namespace byzagg
