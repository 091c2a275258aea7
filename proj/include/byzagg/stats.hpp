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
#include <vector>

#include "byzagg/errors.hpp"

namespace byzagg {

namespace detail {

// Regularized lower incomplete gamma P(a, x) by series expansion (for
// x < a + 1) and Q(a, x) by continued fraction (modified Lentz), as in the
// standard numerical treatments.
inline double gamma_p_series(double a, double x) {
  const double log_prefactor = -x + a * std::log(x) - std::lgamma(a);
  double term = 1.0 / a;
  double sum = term;
  for (int n = 1; n < 500; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::abs(term) < std::abs(sum) * 1e-15) break;
  }
  return sum * std::exp(log_prefactor);
}

inline double gamma_q_cf(double a, double x) {
  const double log_prefactor = -x + a * std::log(x) - std::lgamma(a);
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 500; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-15) break;
  }
  return std::exp(log_prefactor) * h;
}

}  // namespace detail

// Regularized incomplete gamma functions.
inline double gamma_p(double a, double x) {
  if (a <= 0.0 || x < 0.0) throw ConfigInvalid("gamma_p: invalid arguments");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return detail::gamma_p_series(a, x);
  return 1.0 - detail::gamma_q_cf(a, x);
}

inline double gamma_q(double a, double x) {
  if (a <= 0.0 || x < 0.0) throw ConfigInvalid("gamma_q: invalid arguments");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - detail::gamma_p_series(a, x);
  return detail::gamma_q_cf(a, x);
}

// Survival function of the chi-squared distribution: P(X >= x) with
// `dof` degrees of freedom.
inline double chi2_sf(double x, int dof) {
  if (dof < 1) throw ConfigInvalid("chi2_sf: dof must be positive");
  if (x <= 0.0) return 1.0;
  return gamma_q(static_cast<double>(dof) / 2.0, x / 2.0);
}

struct Chi2Result {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
};

// One-sample test of uniformity over the given histogram bins.
inline Chi2Result chi2_uniform(std::span<const std::uint64_t> counts) {
  if (counts.size() < 2) throw ConfigInvalid("chi2_uniform: need at least 2 bins");
  std::uint64_t total = 0;
  for (auto c : counts) total += c;
  if (total == 0) throw ConfigInvalid("chi2_uniform: empty sample");
  const double expected = static_cast<double>(total) / static_cast<double>(counts.size());
  Chi2Result r;
  for (auto c : counts) {
    const double diff = static_cast<double>(c) - expected;
    r.statistic += diff * diff / expected;
  }
  r.dof = static_cast<int>(counts.size()) - 1;
  r.p_value = chi2_sf(r.statistic, r.dof);
  return r;
}

// Two-sample chi-squared test for identical underlying distributions.  The
// samples may have different sizes; bins empty in both samples are skipped.
inline Chi2Result chi2_two_sample(std::span<const std::uint64_t> counts_a,
                                  std::span<const std::uint64_t> counts_b) {
  if (counts_a.size() != counts_b.size() || counts_a.empty()) {
    throw ConfigInvalid("chi2_two_sample: bin count mismatch");
  }
  double total_a = 0, total_b = 0;
  for (auto c : counts_a) total_a += static_cast<double>(c);
  for (auto c : counts_b) total_b += static_cast<double>(c);
  if (total_a == 0 || total_b == 0) throw ConfigInvalid("chi2_two_sample: empty sample");
  const double scale_a = std::sqrt(total_b / total_a);
  const double scale_b = std::sqrt(total_a / total_b);
  Chi2Result r;
  int used = 0;
  for (std::size_t i = 0; i < counts_a.size(); ++i) {
    const double a = static_cast<double>(counts_a[i]);
    const double b = static_cast<double>(counts_b[i]);
    if (a + b == 0) continue;
    const double diff = scale_a * a - scale_b * b;
    r.statistic += diff * diff / (a + b);
    ++used;
  }
  if (used < 2) throw ConfigInvalid("chi2_two_sample: fewer than 2 populated bins");
  r.dof = used - 1;
  r.p_value = chi2_sf(r.statistic, r.dof);
  return r;
}

inline double mean(std::span<const double> xs) {
  if (xs.empty()) throw ConfigInvalid("mean of empty sample");
  double s = 0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

// Sample standard deviation (n-1 denominator); 0 for singleton samples.
inline double sample_stddev(std::span<const double> xs) {
  if (xs.empty()) throw ConfigInvalid("stddev of empty sample");
  if (xs.size() == 1) return 0.0;
  const double m = mean(xs);
  double s = 0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

// Least-squares slope of log(y) against log(x); inputs must be positive.
inline double loglog_slope(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2) {
    throw ConfigInvalid("loglog_slope: need at least two points");
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!(xs[i] > 0) || !(ys[i] > 0)) throw ConfigInvalid("loglog_slope: nonpositive input");
    const double lx = std::log(xs[i]);
    const double ly = std::log(ys[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double denom = n * sxx - sx * sx;
  if (denom == 0) throw ConfigInvalid("loglog_slope: degenerate abscissae");
  return (n * sxy - sx * sy) / denom;
}

}  // namespace byzagg
