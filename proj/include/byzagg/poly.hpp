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

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "byzagg/errors.hpp"
#include "byzagg/field.hpp"

namespace byzagg {

// Dense univariate polynomial over a prime field, constant term first.
struct Polynomial {
  std::vector<fe> c;

  Polynomial() = default;
  explicit Polynomial(std::vector<fe> coeffs) : c(std::move(coeffs)) {}

  // Degree of the zero polynomial is -1.
  int degree() const {
    for (int i = static_cast<int>(c.size()) - 1; i >= 0; --i) {
      if (c[static_cast<std::size_t>(i)] != 0) return i;
    }
    return -1;
  }

  bool is_zero() const { return degree() < 0; }

  fe constant() const { return c.empty() ? 0 : c[0]; }
};

inline fe poly_eval(const Field& F, std::span<const fe> coeffs, fe x) {
  fe acc = 0;
  for (std::size_t i = coeffs.size(); i-- > 0;) {
    acc = F.add(F.mul(acc, x), coeffs[i]);
  }
  return acc;
}

inline fe poly_eval(const Field& F, const Polynomial& p, fe x) {
  return poly_eval(F, std::span<const fe>(p.c), x);
}

namespace detail {

inline void poly_trim(Polynomial& p) {
  while (!p.c.empty() && p.c.back() == 0) p.c.pop_back();
}

inline Polynomial poly_mul(const Field& F, const Polynomial& a, const Polynomial& b) {
  if (a.c.empty() || b.c.empty()) return Polynomial{};
  Polynomial out;
  out.c.assign(a.c.size() + b.c.size() - 1, 0);
  for (std::size_t i = 0; i < a.c.size(); ++i) {
    if (a.c[i] == 0) continue;
    for (std::size_t j = 0; j < b.c.size(); ++j) {
      out.c[i + j] = F.add(out.c[i + j], F.mul(a.c[i], b.c[j]));
    }
  }
  poly_trim(out);
  return out;
}

inline Polynomial poly_sub(const Field& F, const Polynomial& a, const Polynomial& b) {
  Polynomial out = a;
  if (out.c.size() < b.c.size()) out.c.resize(b.c.size(), 0);
  for (std::size_t i = 0; i < b.c.size(); ++i) out.c[i] = F.sub(out.c[i], b.c[i]);
  poly_trim(out);
  return out;
}

// Long division: returns (quotient, remainder) with deg(rem) < deg(divisor).
inline std::pair<Polynomial, Polynomial> poly_divmod(const Field& F, Polynomial num,
                                                     const Polynomial& den) {
  poly_trim(num);
  const int dden = den.degree();
  if (dden < 0) throw DivisionByZero();
  Polynomial quot;
  int dnum = num.degree();
  if (dnum < dden) return {quot, num};
  quot.c.assign(static_cast<std::size_t>(dnum - dden) + 1, 0);
  const fe lead_inv = F.inv(den.c[static_cast<std::size_t>(dden)]);
  for (int d = dnum; d >= dden; --d) {
    const fe coeff = num.c[static_cast<std::size_t>(d)];
    if (coeff == 0) continue;
    const fe factor = F.mul(coeff, lead_inv);
    quot.c[static_cast<std::size_t>(d - dden)] = factor;
    for (int i = 0; i <= dden; ++i) {
      auto idx = static_cast<std::size_t>(d - dden + i);
      num.c[idx] = F.sub(num.c[idx], F.mul(factor, den.c[static_cast<std::size_t>(i)]));
    }
  }
  poly_trim(num);
  return {std::move(quot), std::move(num)};
}

inline void check_distinct(const Field& F, std::span<const fe> xs) {
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (std::size_t j = i + 1; j < xs.size(); ++j) {
      if (F.reduce(xs[i]) == F.reduce(xs[j])) throw DuplicateEvalPoint();
    }
  }
}

}  // namespace detail

// Evaluates the unique interpolating polynomial through (xs, ys) at `at`
// without materializing its coefficients.
inline fe lagrange_interpolate(const Field& F, std::span<const fe> xs, std::span<const fe> ys,
                               fe at) {
  if (xs.size() != ys.size() || xs.empty()) {
    throw ConfigInvalid("lagrange_interpolate: point count mismatch");
  }
  detail::check_distinct(F, xs);
  const std::size_t n = xs.size();
  // Prefix/suffix products of (at - x_j) give each numerator in O(n) total.
  std::vector<fe> prefix(n + 1), suffix(n + 1);
  prefix[0] = 1;
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = F.mul(prefix[i], F.sub(at, xs[i]));
  suffix[n] = 1;
  for (std::size_t i = n; i-- > 0;) suffix[i] = F.mul(suffix[i + 1], F.sub(at, xs[i]));
  fe acc = 0;
  for (std::size_t i = 0; i < n; ++i) {
    fe den = 1;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) den = F.mul(den, F.sub(xs[i], xs[j]));
    }
    const fe num = F.mul(prefix[i], suffix[i + 1]);
    acc = F.add(acc, F.mul(ys[i], F.mul(num, F.inv(den))));
  }
  return acc;
}

// Full coefficient recovery via Newton's divided differences.
inline Polynomial interpolate(const Field& F, std::span<const fe> xs, std::span<const fe> ys) {
  if (xs.size() != ys.size() || xs.empty()) {
    throw ConfigInvalid("interpolate: point count mismatch");
  }
  detail::check_distinct(F, xs);
  const std::size_t n = xs.size();
  std::vector<fe> dd(ys.begin(), ys.end());
  for (std::size_t j = 1; j < n; ++j) {
    for (std::size_t i = n - 1; i >= j; --i) {
      dd[i] = F.mul(F.sub(dd[i], dd[i - 1]), F.inv(F.sub(xs[i], xs[i - j])));
    }
  }
  Polynomial p;
  p.c.assign(1, dd[n - 1]);
  for (std::size_t step = n - 1; step-- > 0;) {
    // p <- p * (x - xs[step]) + dd[step]
    p.c.push_back(0);
    for (std::size_t t = p.c.size() - 1; t >= 1; --t) {
      p.c[t] = F.sub(p.c[t - 1], F.mul(xs[step], p.c[t]));
    }
    p.c[0] = F.neg(F.mul(xs[step], p.c[0]));
    p.c[0] = F.add(p.c[0], dd[step]);
  }
  detail::poly_trim(p);
  return p;
}

// Reed-Solomon decoding in the evaluation domain (Gao's algorithm).  Given
// evaluations ys at distinct points xs, recovers the unique polynomial of
// degree <= `degree` that agrees with at least |xs| - max_errors of them, or
// throws DecodingFailure when no such polynomial exists.  Requires
// |xs| >= degree + 2*max_errors + 1 so the answer is unambiguous.  The result
// is padded to exactly degree+1 coefficients.
inline Polynomial rs_decode(const Field& F, std::span<const fe> xs, std::span<const fe> ys,
                            int degree, int max_errors) {
  if (degree < 0 || max_errors < 0) throw ConfigInvalid("rs_decode: negative parameter");
  if (xs.size() != ys.size()) throw ConfigInvalid("rs_decode: point count mismatch");
  const int n = static_cast<int>(xs.size());
  const int k = degree + 1;
  if (n < k + 2 * max_errors) {
    throw ConfigInvalid("rs_decode: need at least degree + 2*max_errors + 1 evaluations");
  }
  detail::check_distinct(F, xs);

  Polynomial f;
  if (max_errors == 0) {
    f = interpolate(F, xs, ys);
    if (f.degree() > degree) throw DecodingFailure();
  } else {
    // g0 = prod (x - x_i), g1 = interpolation through all points.  Run the
    // extended Euclidean algorithm on (g0, g1) and stop as soon as the
    // remainder drops below (n + k) / 2; the codeword polynomial is then the
    // quotient remainder/v if the division is exact.
    Polynomial g0;
    g0.c.assign(1, 1);
    for (int i = 0; i < n; ++i) {
      g0.c.push_back(0);
      for (std::size_t t = g0.c.size() - 1; t >= 1; --t) {
        g0.c[t] = F.sub(g0.c[t - 1], F.mul(xs[static_cast<std::size_t>(i)], g0.c[t]));
      }
      g0.c[0] = F.neg(F.mul(xs[static_cast<std::size_t>(i)], g0.c[0]));
    }
    Polynomial r_prev = std::move(g0);
    Polynomial r_cur = interpolate(F, xs, ys);
    Polynomial v_prev, v_cur;
    v_cur.c.assign(1, 1);
    while (2 * r_cur.degree() >= n + k) {
      auto [quot, rem] = detail::poly_divmod(F, r_prev, r_cur);
      Polynomial v_next = detail::poly_sub(F, v_prev, detail::poly_mul(F, quot, v_cur));
      r_prev = std::move(r_cur);
      r_cur = std::move(rem);
      v_prev = std::move(v_cur);
      v_cur = std::move(v_next);
    }
    if (v_cur.is_zero()) throw DecodingFailure();
    auto [candidate, residue] = detail::poly_divmod(F, r_cur, v_cur);
    if (!residue.is_zero() || candidate.degree() > degree) throw DecodingFailure();
    f = std::move(candidate);
  }

  // Post-check: accept only if the candidate explains all but at most
  // max_errors evaluations.  This makes every miscorrection loud.
  int agree = 0;
  for (int i = 0; i < n; ++i) {
    if (poly_eval(F, f, xs[static_cast<std::size_t>(i)]) == ys[static_cast<std::size_t>(i)]) {
      ++agree;
    }
  }
  if (agree < n - max_errors) throw DecodingFailure();

  f.c.resize(static_cast<std::size_t>(degree) + 1, 0);
  return f;
}

// Decoder for a fixed evaluation-point set, amortizing the per-point setup
// across many codewords (the protocol decodes thousands of codewords per
// round on the same points).  Error-free words are recognized with the dual
// parity checks of the code and resolved by a precomputed linear combination;
// anything else falls back to full Gao decoding with identical semantics.
class BatchDecoder {
 public:
  BatchDecoder(const Field& F, std::vector<fe> xs, int degree, int max_errors)
      : F_(F), xs_(std::move(xs)), k_(degree + 1), e_(max_errors) {
    n_ = static_cast<int>(xs_.size());
    if (degree < 0 || e_ < 0 || n_ < k_ + 2 * e_) {
      throw ConfigInvalid("BatchDecoder: need at least degree + 2*max_errors + 1 points");
    }
    detail::check_distinct(F_, xs_);
    // Dual-code parity rows: u_i * x_i^t for t < n-k, with
    // u_i = prod_{j != i} (x_i - x_j)^-1.  A word is a codeword iff all
    // parity sums vanish.
    std::vector<fe> u(static_cast<std::size_t>(n_));
    for (int i = 0; i < n_; ++i) {
      fe den = 1;
      for (int j = 0; j < n_; ++j) {
        if (j != i) {
          den = F_.mul(den, F_.sub(xs_[static_cast<std::size_t>(i)],
                                   xs_[static_cast<std::size_t>(j)]));
        }
      }
      u[static_cast<std::size_t>(i)] = F_.inv(den);
    }
    parity_.assign(static_cast<std::size_t>(n_ - k_),
                   std::vector<fe>(static_cast<std::size_t>(n_)));
    for (int i = 0; i < n_; ++i) {
      fe power = u[static_cast<std::size_t>(i)];
      for (int t = 0; t < n_ - k_; ++t) {
        parity_[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)] = power;
        power = F_.mul(power, xs_[static_cast<std::size_t>(i)]);
      }
    }
    // Lagrange weights of the first k points evaluated at zero: for a
    // verified codeword the constant term is their weighted sum.
    const std::span<const fe> head(xs_.data(), static_cast<std::size_t>(k_));
    const_weights_.assign(static_cast<std::size_t>(k_), 0);
    for (int i = 0; i < k_; ++i) {
      fe num = 1, den = 1;
      for (int j = 0; j < k_; ++j) {
        if (j == i) continue;
        num = F_.mul(num, F_.neg(head[static_cast<std::size_t>(j)]));
        den = F_.mul(den, F_.sub(head[static_cast<std::size_t>(i)],
                                 head[static_cast<std::size_t>(j)]));
      }
      const_weights_[static_cast<std::size_t>(i)] = F_.mul(num, F_.inv(den));
    }
  }

  const std::vector<fe>& points() const { return xs_; }

  bool consistent(std::span<const fe> ys) const {
    for (const auto& row : parity_) {
      fe s = 0;
      for (int i = 0; i < n_; ++i) {
        s = F_.add(s, F_.mul(row[static_cast<std::size_t>(i)], ys[static_cast<std::size_t>(i)]));
      }
      if (s != 0) return false;
    }
    return true;
  }

  fe decode_constant(std::span<const fe> ys) const {
    if (static_cast<int>(ys.size()) != n_) {
      throw ConfigInvalid("BatchDecoder: word length mismatch");
    }
    if (consistent(ys)) {
      fe acc = 0;
      for (int i = 0; i < k_; ++i) {
        acc = F_.add(acc, F_.mul(const_weights_[static_cast<std::size_t>(i)],
                                 ys[static_cast<std::size_t>(i)]));
      }
      return acc;
    }
    return rs_decode(F_, xs_, ys, k_ - 1, e_).c[0];
  }

  Polynomial decode(std::span<const fe> ys) const {
    if (static_cast<int>(ys.size()) != n_) {
      throw ConfigInvalid("BatchDecoder: word length mismatch");
    }
    if (consistent(ys)) {
      const std::span<const fe> head_x(xs_.data(), static_cast<std::size_t>(k_));
      Polynomial p = interpolate(F_, head_x, ys.subspan(0, static_cast<std::size_t>(k_)));
      p.c.resize(static_cast<std::size_t>(k_), 0);
      return p;
    }
    return rs_decode(F_, xs_, ys, k_ - 1, e_);
  }

 private:
  Field F_;
  std::vector<fe> xs_;
  int n_ = 0;
  int k_ = 0;
  int e_ = 0;
  std::vector<std::vector<fe>> parity_;
  std::vector<fe> const_weights_;
};

}  // namespace byzagg
