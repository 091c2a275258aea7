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
#include <cmath>
#include <cstdint>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "byzagg/errors.hpp"
#include "byzagg/rng.hpp"

namespace byzagg {

struct Dataset {
  std::vector<std::vector<double>> features;  // one row per sample
  std::vector<int> labels;                    // 0 .. classes-1
  int classes = 0;

  std::size_t size() const { return labels.size(); }
  int feature_dim() const {
    return features.empty() ? 0 : static_cast<int>(features[0].size());
  }

  void validate() const {
    if (features.size() != labels.size()) {
      throw ConfigInvalid("dataset: feature/label count mismatch");
    }
    for (const auto& row : features) {
      if (static_cast<int>(row.size()) != feature_dim()) {
        throw ConfigInvalid("dataset: ragged feature rows");
      }
    }
    for (int y : labels) {
      if (y < 0 || y >= classes) throw ConfigInvalid("dataset: label out of range");
    }
  }
};

inline Dataset subset(const Dataset& ds, std::span<const std::size_t> indices) {
  Dataset out;
  out.classes = ds.classes;
  out.features.reserve(indices.size());
  out.labels.reserve(indices.size());
  for (std::size_t i : indices) {
    out.features.push_back(ds.features[i]);
    out.labels.push_back(ds.labels[i]);
  }
  return out;
}

// Balanced Gaussian-blob classification task: class centers are `separation`
// times uniformly random unit directions, samples are centers plus unit
// Gaussian noise.  Labels cycle 0,1,...,classes-1 so any prefix/suffix split
// stays balanced when sizes divide evenly.
inline Dataset make_blobs(int classes, int features, int samples, double separation, Rng& rng) {
  if (classes < 2 || features < 1 || samples < classes) {
    throw ConfigInvalid("make_blobs: need classes >= 2, features >= 1, samples >= classes");
  }
  std::vector<std::vector<double>> centers(static_cast<std::size_t>(classes),
                                           std::vector<double>(static_cast<std::size_t>(features)));
  for (auto& center : centers) {
    double norm2 = 0.0;
    for (auto& x : center) {
      x = rng.normal();
      norm2 += x * x;
    }
    const double scale = separation / std::sqrt(norm2);
    for (auto& x : center) x *= scale;
  }
  Dataset ds;
  ds.classes = classes;
  ds.features.reserve(static_cast<std::size_t>(samples));
  ds.labels.reserve(static_cast<std::size_t>(samples));
  for (int i = 0; i < samples; ++i) {
    const int y = i % classes;
    std::vector<double> row = centers[static_cast<std::size_t>(y)];
    for (auto& x : row) x += rng.normal();
    ds.features.push_back(std::move(row));
    ds.labels.push_back(y);
  }
  return ds;
}

namespace detail {

// Marsaglia-Tsang gamma sampling; the alpha < 1 case goes through the
// standard boost G(alpha) = G(alpha + 1) * U^(1/alpha).
inline double gamma_draw(double alpha, Rng& rng) {
  if (alpha <= 0.0) throw ConfigInvalid("gamma_draw: alpha must be positive");
  if (alpha < 1.0) {
    const double u = rng.real();
    return gamma_draw(alpha + 1.0, rng) * std::pow(u, 1.0 / alpha);
  }
  const double d = alpha - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    const double x = rng.normal();
    const double t = 1.0 + c * x;
    if (t <= 0.0) continue;
    const double v = t * t * t;
    const double u = rng.real();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

}  // namespace detail

// Heterogeneous partition: for every label class, client proportions are
// drawn from Dirichlet(beta * 1_n) and each sample of that class lands on a
// client drawn from those proportions.  Clients left empty steal one sample
// from the currently largest client so every client can participate.
inline std::vector<std::vector<std::size_t>> dirichlet_partition(std::span<const int> labels,
                                                                 int n, double beta, Rng& rng) {
  if (n < 1) throw ConfigInvalid("dirichlet_partition: need n >= 1");
  if (!(beta > 0.0)) throw ConfigInvalid("dirichlet_partition: beta must be positive");
  int classes = 0;
  for (int y : labels) {
    if (y < 0) throw ConfigInvalid("dirichlet_partition: negative label");
    classes = std::max(classes, y + 1);
  }
  std::vector<std::vector<std::size_t>> parts(static_cast<std::size_t>(n));
  std::vector<double> weights(static_cast<std::size_t>(n));
  for (int c = 0; c < classes; ++c) {
    double total = 0.0;
    for (auto& w : weights) {
      w = detail::gamma_draw(beta, rng);
      total += w;
    }
    if (total <= 0.0) {
      for (auto& w : weights) w = 1.0;
      total = static_cast<double>(n);
    }
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] != c) continue;
      double pick = rng.real() * total;
      int client = n - 1;
      for (int k = 0; k < n; ++k) {
        pick -= weights[static_cast<std::size_t>(k)];
        if (pick < 0.0) {
          client = k;
          break;
        }
      }
      parts[static_cast<std::size_t>(client)].push_back(i);
    }
  }
  for (int k = 0; k < n; ++k) {
    if (!parts[static_cast<std::size_t>(k)].empty()) continue;
    int donor = 0;
    for (int j = 1; j < n; ++j) {
      if (parts[static_cast<std::size_t>(j)].size() > parts[static_cast<std::size_t>(donor)].size()) {
        donor = j;
      }
    }
    if (parts[static_cast<std::size_t>(donor)].size() < 2) {
      throw ConfigInvalid("dirichlet_partition: too few samples to cover all clients");
    }
    parts[static_cast<std::size_t>(k)].push_back(parts[static_cast<std::size_t>(donor)].back());
    parts[static_cast<std::size_t>(donor)].pop_back();
  }
  return parts;
}

// ---------------------------------------------------------------------------
// File ingestion: IDX (big-endian image/label files) and CSV (label,features)
// ---------------------------------------------------------------------------

namespace detail {

inline std::uint32_t read_be32(std::istream& in, const std::string& what) {
  unsigned char bytes[4];
  if (!in.read(reinterpret_cast<char*>(bytes), 4)) throw ParseError("truncated " + what);
  return (static_cast<std::uint32_t>(bytes[0]) << 24) | (static_cast<std::uint32_t>(bytes[1]) << 16) |
         (static_cast<std::uint32_t>(bytes[2]) << 8) | static_cast<std::uint32_t>(bytes[3]);
}

}  // namespace detail

// IDX image/label pair (the classic big-endian format: magic 0x00000803 for
// images, 0x00000801 for labels).  Pixels are scaled to [0, 1].
inline Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
  std::ifstream images(images_path, std::ios::binary);
  if (!images) throw ParseError("cannot open image file " + images_path);
  if (detail::read_be32(images, "image header") != 0x00000803u) {
    throw ParseError("bad image magic in " + images_path);
  }
  const std::uint32_t count = detail::read_be32(images, "image header");
  const std::uint32_t rows = detail::read_be32(images, "image header");
  const std::uint32_t cols = detail::read_be32(images, "image header");

  std::ifstream labels(labels_path, std::ios::binary);
  if (!labels) throw ParseError("cannot open label file " + labels_path);
  if (detail::read_be32(labels, "label header") != 0x00000801u) {
    throw ParseError("bad label magic in " + labels_path);
  }
  if (detail::read_be32(labels, "label header") != count) {
    throw ParseError("image/label count mismatch");
  }

  Dataset ds;
  const std::size_t dim = static_cast<std::size_t>(rows) * cols;
  std::vector<unsigned char> pixel_row(dim);
  for (std::uint32_t i = 0; i < count; ++i) {
    if (!images.read(reinterpret_cast<char*>(pixel_row.data()),
                     static_cast<std::streamsize>(dim))) {
      throw ParseError("truncated image data");
    }
    std::vector<double> row(dim);
    for (std::size_t p = 0; p < dim; ++p) row[p] = static_cast<double>(pixel_row[p]) / 255.0;
    ds.features.push_back(std::move(row));
    char y = 0;
    if (!labels.read(&y, 1)) throw ParseError("truncated label data");
    ds.labels.push_back(static_cast<unsigned char>(y));
  }
  ds.classes = 0;
  for (int y : ds.labels) ds.classes = std::max(ds.classes, y + 1);
  ds.validate();
  return ds;
}

// CSV rows of "label,feature,feature,...".
inline Dataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open csv file " + path);
  Dataset ds;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> values;
    std::size_t start = 0;
    while (start <= line.size()) {
      const std::size_t comma = line.find(',', start);
      const std::string cell =
          line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      try {
        std::size_t used = 0;
        values.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw ParseError("trailing junk in csv cell '" + cell + "'");
      } catch (const ParseError&) {
        throw;
      } catch (const std::exception&) {
        throw ParseError("bad csv cell '" + cell + "' in " + path);
      }
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (values.size() < 2) throw ParseError("csv row needs a label and features");
    const double label = values[0];
    if (label < 0 || label != std::floor(label)) throw ParseError("csv label must be a nonnegative integer");
    ds.labels.push_back(static_cast<int>(label));
    ds.features.emplace_back(values.begin() + 1, values.end());
  }
  if (ds.labels.empty()) throw ParseError("empty csv file " + path);
  for (int y : ds.labels) ds.classes = std::max(ds.classes, y + 1);
  ds.validate();
  return ds;
}

}  // namespace byzagg
