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
#include <span>
#include <vector>

#include "byzagg/data.hpp"
#include "byzagg/errors.hpp"

namespace byzagg {

// Multinomial logistic regression with softmax cross-entropy.  The flat
// parameter layout is row-major by class: w[c * (features + 1) + f] with the
// bias stored last in each row, so d = classes * (features + 1).

inline int logreg_dimension(int classes, int features) { return classes * (features + 1); }

namespace detail {

// Stable softmax of the class logits for one sample.
inline void logreg_probs(std::span<const double> w, std::span<const double> x, int classes,
                         std::vector<double>& probs) {
  const int stride = static_cast<int>(x.size()) + 1;
  probs.assign(static_cast<std::size_t>(classes), 0.0);
  double max_logit = -1e300;
  for (int c = 0; c < classes; ++c) {
    const double* row = w.data() + static_cast<std::size_t>(c) * stride;
    double logit = row[x.size()];  // bias
    for (std::size_t f = 0; f < x.size(); ++f) logit += row[f] * x[f];
    probs[static_cast<std::size_t>(c)] = logit;
    if (logit > max_logit) max_logit = logit;
  }
  double total = 0.0;
  for (auto& p : probs) {
    p = std::exp(p - max_logit);
    total += p;
  }
  for (auto& p : probs) p /= total;
}

inline void check_model(std::span<const double> w, const Dataset& ds) {
  if (ds.size() == 0) throw ConfigInvalid("logreg: empty dataset");
  if (static_cast<int>(w.size()) != logreg_dimension(ds.classes, ds.feature_dim())) {
    throw ConfigInvalid("logreg: parameter size does not match dataset shape");
  }
}

}  // namespace detail

// Mean cross-entropy over the dataset.
inline double logreg_loss(std::span<const double> w, const Dataset& ds) {
  detail::check_model(w, ds);
  std::vector<double> probs;
  double loss = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    detail::logreg_probs(w, ds.features[i], ds.classes, probs);
    const double p = probs[static_cast<std::size_t>(ds.labels[i])];
    loss += -std::log(p > 1e-300 ? p : 1e-300);
  }
  return loss / static_cast<double>(ds.size());
}

// Mean softmax cross-entropy gradient, flattened to the parameter layout.
inline std::vector<double> logreg_gradient(std::span<const double> w, const Dataset& ds) {
  detail::check_model(w, ds);
  const int stride = ds.feature_dim() + 1;
  std::vector<double> grad(w.size(), 0.0);
  std::vector<double> probs;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    detail::logreg_probs(w, ds.features[i], ds.classes, probs);
    const auto& x = ds.features[i];
    for (int c = 0; c < ds.classes; ++c) {
      const double delta = probs[static_cast<std::size_t>(c)] - (c == ds.labels[i] ? 1.0 : 0.0);
      double* row = grad.data() + static_cast<std::size_t>(c) * stride;
      for (std::size_t f = 0; f < x.size(); ++f) row[f] += delta * x[f];
      row[x.size()] += delta;
    }
  }
  for (auto& g : grad) g /= static_cast<double>(ds.size());
  return grad;
}

// Fraction of samples whose argmax class matches the label (ties -> lowest
// class index, matching the deterministic contract everywhere else).
inline double logreg_accuracy(std::span<const double> w, const Dataset& ds) {
  detail::check_model(w, ds);
  std::vector<double> probs;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    detail::logreg_probs(w, ds.features[i], ds.classes, probs);
    int best = 0;
    for (int c = 1; c < ds.classes; ++c) {
      if (probs[static_cast<std::size_t>(c)] > probs[static_cast<std::size_t>(best)]) best = c;
    }
    correct += (best == ds.labels[i]) ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(ds.size());
}

}  // namespace byzagg
