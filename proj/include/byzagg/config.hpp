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
//
// Experiment configuration: a plain struct mirroring the CLI-facing
// key = value config file format, plus its parser and validation.

#ifndef BYZAGG_CONFIG_HPP_
#define BYZAGG_CONFIG_HPP_

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "byzagg/attacks.hpp"
#include "byzagg/errors.hpp"
#include "byzagg/protocol.hpp"
#include "byzagg/zo.hpp"

namespace byzagg {

enum class Optimizer { Sgd, Zo };

enum class DatasetKind { Synthetic, Idx, Csv };

// Everything needed to run one experiment: protocol shape, model/optimizer,
// attack, training schedule, dataset recipe, and the seed list.
struct ExperimentConfig {
  ProtocolConfig protocol;          // n, b, z, rule, quantizer, flags
  bool use_protocol = true;         // false: plaintext oracle aggregation path
  Optimizer optimizer = Optimizer::Sgd;
  ZoConfig zo;
  AttackSpec attack;
  double eta = 0.05;                // learning rate
  int epochs = 300;
  int batch = 0;                    // samples per client per epoch; 0 = full batch
  double beta = 0.1;                // Dirichlet heterogeneity parameter

  DatasetKind dataset = DatasetKind::Synthetic;
  int classes = 10;
  int features = 20;
  int train_samples = 5000;
  int test_samples = 1000;
  double separation = 4.0;
  std::string idx_train_images, idx_train_labels;
  std::string idx_test_images, idx_test_labels;
  std::string csv_train, csv_test;

  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  std::string output = "results.csv";

  void validate() const {
    // The model dimension is derived from the dataset at run time; validate
    // the protocol shape with a placeholder when it has not been fixed yet.
    ProtocolConfig p = protocol;
    if (p.d == 0) p.d = 1;
    p.validate();
    if (!(eta > 0.0) || !std::isfinite(eta)) throw ConfigInvalid("eta must be positive");
    if (epochs < 1) throw ConfigInvalid("epochs must be at least 1");
    if (batch < 0) throw ConfigInvalid("batch must be non-negative");
    if (!(beta > 0.0)) throw ConfigInvalid("beta must be positive");
    if (optimizer == Optimizer::Zo) zo.validate();
    if (seeds.empty()) throw ConfigInvalid("at least one seed is required");
    if (dataset == DatasetKind::Synthetic) {
      if (classes < 2) throw ConfigInvalid("synthetic dataset needs at least 2 classes");
      if (features < 1) throw ConfigInvalid("synthetic dataset needs at least 1 feature");
      if (train_samples < classes || test_samples < classes) {
        throw ConfigInvalid("synthetic dataset needs at least one sample per class");
      }
    } else if (dataset == DatasetKind::Idx) {
      if (idx_train_images.empty() || idx_train_labels.empty() || idx_test_images.empty() ||
          idx_test_labels.empty()) {
        throw ConfigInvalid("idx dataset requires all four idx_* paths");
      }
    } else {
      if (csv_train.empty() || csv_test.empty()) {
        throw ConfigInvalid("csv dataset requires csv_train and csv_test paths");
      }
    }
    if (attack.kind == AttackKind::LabelFlip && classes < 2) {
      throw ConfigInvalid("label flipping needs at least 2 classes");
    }
    if (attack.kind == AttackKind::Alie || attack.kind == AttackKind::Foe) {
      // Adaptive attacks evaluate the target rule on the n-b honest
      // gradients alone, so that set must satisfy the rule's size floor.
      const int honest = protocol.n - protocol.b;
      if (protocol.rule.rule == AggRule::Krum && honest < protocol.b + 3) {
        throw ConfigInvalid("adaptive attacks need n-b >= b+3 honest clients for Krum");
      }
      if (protocol.rule.rule == AggRule::MultiKrum && honest < 2 * protocol.b + 4) {
        throw ConfigInvalid(
            "adaptive attacks need n-b >= 2b+4 honest clients for Multi-Krum");
      }
    }
  }
};

namespace detail {

inline std::string trimmed(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

inline std::string lowered(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

inline bool parse_bool(const std::string& key, const std::string& value) {
  const std::string v = lowered(value);
  if (v == "true" || v == "on" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "off" || v == "no" || v == "0") return false;
  throw ParseError("config key '" + key + "': expected a boolean, got '" + value + "'");
}

inline long long parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const long long out = std::stoll(value, &pos);
    if (pos != value.size()) throw ParseError("");
    return out;
  } catch (const std::exception&) {
    throw ParseError("config key '" + key + "': expected an integer, got '" + value + "'");
  }
}

inline double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double out = std::stod(value, &pos);
    if (pos != value.size()) throw ParseError("");
    return out;
  } catch (const std::exception&) {
    throw ParseError("config key '" + key + "': expected a number, got '" + value + "'");
  }
}

inline std::vector<std::uint64_t> parse_seed_list(const std::string& key,
                                                  const std::string& value) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trimmed(item);
    if (item.empty()) continue;
    out.push_back(static_cast<std::uint64_t>(parse_int(key, item)));
  }
  if (out.empty()) throw ParseError("config key '" + key + "': expected at least one seed");
  return out;
}

inline AggRule parse_rule(const std::string& value) {
  const std::string v = lowered(value);
  if (v == "krum" || v == "kr") return AggRule::Krum;
  if (v == "multikrum" || v == "multi-krum" || v == "mkr") return AggRule::MultiKrum;
  if (v == "average" || v == "avg") return AggRule::Average;
  throw ParseError("unknown aggregation rule '" + value + "'");
}

inline AttackKind parse_attack(const std::string& value) {
  const std::string v = lowered(value);
  if (v == "none") return AttackKind::None;
  if (v == "alie") return AttackKind::Alie;
  if (v == "foe") return AttackKind::Foe;
  if (v == "sf" || v == "signflip" || v == "sign-flip") return AttackKind::SignFlip;
  if (v == "lf" || v == "labelflip" || v == "label-flip") return AttackKind::LabelFlip;
  if (v == "noise" || v == "random" || v == "random-noise") return AttackKind::RandomNoise;
  if (v == "shares" || v == "share-corruption") return AttackKind::ShareCorruption;
  if (v == "responses" || v == "response-corruption") return AttackKind::ResponseCorruption;
  throw ParseError("unknown attack '" + value + "'");
}

}  // namespace detail

inline const char* optimizer_name(Optimizer o) { return o == Optimizer::Sgd ? "sgd" : "zo"; }

inline const char* rule_name(AggRule r) {
  switch (r) {
    case AggRule::Krum: return "krum";
    case AggRule::MultiKrum: return "multikrum";
    case AggRule::Average: return "average";
  }
  return "?";
}

inline const char* attack_name(AttackKind k) {
  switch (k) {
    case AttackKind::None: return "none";
    case AttackKind::Alie: return "alie";
    case AttackKind::Foe: return "foe";
    case AttackKind::SignFlip: return "sf";
    case AttackKind::LabelFlip: return "lf";
    case AttackKind::RandomNoise: return "noise";
    case AttackKind::ShareCorruption: return "shares";
    case AttackKind::ResponseCorruption: return "responses";
  }
  return "?";
}

// Applies one `key = value` assignment; shared by the file parser and the
// CLI sweep machinery so sweeps accept exactly the config-file vocabulary.
inline void apply_config_key(ExperimentConfig& cfg, const std::string& raw_key,
                             const std::string& value) {
  using namespace detail;
  const std::string key = lowered(trimmed(raw_key));
  if (key == "n") {
    cfg.protocol.n = static_cast<int>(parse_int(key, value));
  } else if (key == "b") {
    cfg.protocol.b = static_cast<int>(parse_int(key, value));
  } else if (key == "z") {
    cfg.protocol.z = static_cast<int>(parse_int(key, value));
  } else if (key == "levels") {
    cfg.protocol.quant.levels = static_cast<std::uint64_t>(parse_int(key, value));
  } else if (key == "clip") {
    cfg.protocol.quant.clip = parse_double(key, value);
  } else if (key == "field") {
    if (lowered(value) == "mersenne61") {
      cfg.protocol.quant.field = Field::mersenne61();
    } else {
      cfg.protocol.quant.field = Field(static_cast<fe>(parse_int(key, value)));
    }
  } else if (key == "rule") {
    cfg.protocol.rule.rule = parse_rule(value);
  } else if (key == "nnm") {
    cfg.protocol.rule.nnm = parse_bool(key, value);
  } else if (key == "protocol") {
    cfg.use_protocol = parse_bool(key, value);
  } else if (key == "private_final") {
    cfg.protocol.private_final_aggregation = parse_bool(key, value);
  } else if (key == "restart_on_vss_failure") {
    cfg.protocol.restart_on_vss_failure = parse_bool(key, value);
  } else if (key == "optimizer") {
    const std::string v = lowered(value);
    if (v == "sgd") {
      cfg.optimizer = Optimizer::Sgd;
    } else if (v == "zo") {
      cfg.optimizer = Optimizer::Zo;
    } else {
      throw ParseError("unknown optimizer '" + value + "'");
    }
  } else if (key == "zo_r") {
    cfg.zo.R = static_cast<int>(parse_int(key, value));
  } else if (key == "zo_mu") {
    cfg.zo.zo_mu = parse_double(key, value);
  } else if (key == "zo_average") {
    cfg.zo.average_perturbations = parse_bool(key, value);
  } else if (key == "attack") {
    cfg.attack.kind = parse_attack(value);
  } else if (key == "noise_scale") {
    cfg.attack.noise_scale = parse_double(key, value);
  } else if (key == "eta") {
    cfg.eta = parse_double(key, value);
  } else if (key == "epochs") {
    cfg.epochs = static_cast<int>(parse_int(key, value));
  } else if (key == "batch") {
    cfg.batch = static_cast<int>(parse_int(key, value));
  } else if (key == "beta") {
    cfg.beta = parse_double(key, value);
  } else if (key == "dataset") {
    const std::string v = lowered(value);
    if (v == "synthetic") {
      cfg.dataset = DatasetKind::Synthetic;
    } else if (v == "idx") {
      cfg.dataset = DatasetKind::Idx;
    } else if (v == "csv") {
      cfg.dataset = DatasetKind::Csv;
    } else {
      throw ParseError("unknown dataset kind '" + value + "'");
    }
  } else if (key == "classes") {
    cfg.classes = static_cast<int>(parse_int(key, value));
  } else if (key == "features") {
    cfg.features = static_cast<int>(parse_int(key, value));
  } else if (key == "train_samples") {
    cfg.train_samples = static_cast<int>(parse_int(key, value));
  } else if (key == "test_samples") {
    cfg.test_samples = static_cast<int>(parse_int(key, value));
  } else if (key == "separation") {
    cfg.separation = parse_double(key, value);
  } else if (key == "idx_train_images") {
    cfg.idx_train_images = trimmed(value);
  } else if (key == "idx_train_labels") {
    cfg.idx_train_labels = trimmed(value);
  } else if (key == "idx_test_images") {
    cfg.idx_test_images = trimmed(value);
  } else if (key == "idx_test_labels") {
    cfg.idx_test_labels = trimmed(value);
  } else if (key == "csv_train") {
    cfg.csv_train = trimmed(value);
  } else if (key == "csv_test") {
    cfg.csv_test = trimmed(value);
  } else if (key == "seeds") {
    cfg.seeds = parse_seed_list(key, value);
  } else if (key == "output") {
    cfg.output = trimmed(value);
  } else {
    throw ParseError("unknown config key '" + key + "'");
  }
}

// Parses `key = value` lines; '#' starts a comment, blank lines are skipped.
inline ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trimmed(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    try {
      apply_config_key(cfg, line.substr(0, eq), detail::trimmed(line.substr(eq + 1)));
    } catch (const ParseError& e) {
      throw ParseError("config line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file '" + path + "'");
  return parse_config(in);
}

// BYZAGG_SEED replaces the seed list with a single seed; BYZAGG_THREADS caps
// worker parallelism (both optional).
inline void apply_environment(ExperimentConfig& cfg) {
  if (const char* s = std::getenv("BYZAGG_SEED")) {
    cfg.seeds = {static_cast<std::uint64_t>(detail::parse_int("BYZAGG_SEED", s))};
  }
}

inline int environment_thread_cap(int fallback) {
  if (const char* s = std::getenv("BYZAGG_THREADS")) {
    const int cap = static_cast<int>(detail::parse_int("BYZAGG_THREADS", s));
    if (cap >= 1) return cap;
  }
  return fallback;
}

}  // namespace byzagg

#endif  // BYZAGG_CONFIG_HPP_
