// Copyright 2026 The OracleBench Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <filesystem>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "oraclebench/active.hpp"
#include "oraclebench/classifier.hpp"
#include "oraclebench/oracle_io.hpp"
#include "oraclebench/scaling.hpp"
#include "oraclebench/shift.hpp"
#include "oraclebench/validate.hpp"

namespace oraclebench {

/// Config parse error: unknown key, wrong type, missing field. Maps to CLI
/// exit code 2.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Object reader that rejects unknown keys: every key must be consumed before
/// done() runs. Errors carry the JSON path for diagnostics.
class StrictObject {
 public:
  StrictObject(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError("config: expected an object at " + path_);
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const nlohmann::json& at(const std::string& key) {
    if (!j_.contains(key))
      throw ConfigError("config: missing required field '" + key + "' at " + path_);
    seen_.insert(key);
    return j_.at(key);
  }

  template <typename T>
  T get(const std::string& key) {
    try {
      return at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("config: bad value for '" + key + "' at " + path_ + ": " + e.what());
    }
  }

  template <typename T>
  T get_or(const std::string& key, T fallback) {
    if (!j_.contains(key)) return fallback;
    return get<T>(key);
  }

  void done() {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.contains(it.key()))
        throw ConfigError("config: unknown key '" + it.key() + "' at " + path_);
    }
  }

  std::string child_path(const std::string& key) const { return path_ + "." + key; }

 private:
  const nlohmann::json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline ClassPrior prior_from_config(const nlohmann::json& j, const std::string& path) {
  try {
    return ClassPrior(j.get<std::vector<double>>());
  } catch (const std::exception& e) {
    throw ConfigError("config: bad prior at " + path + ": " + e.what());
  }
}

/// Inline oracle spec ({"kind": ...}) or a reference to a saved oracle
/// ({"path": "oracle.json"}, resolved against base_dir).
inline std::unique_ptr<Oracle> oracle_from_config(const nlohmann::json& j,
                                                  const std::string& path,
                                                  const std::filesystem::path& base_dir) {
  StrictObject obj(j, path);
  if (obj.has("path")) {
    const std::string rel = obj.get<std::string>("path");
    obj.done();
    const std::filesystem::path full =
        std::filesystem::path(rel).is_absolute() ? std::filesystem::path(rel) : base_dir / rel;
    if (!std::filesystem::exists(full))
      throw ConfigError("config: oracle path does not exist: " + full.string());
    return load_oracle(full.string());
  }

  const std::string kind = obj.get<std::string>("kind");
  if (kind == "gaussian") {
    ClassPrior prior = prior_from_config(obj.at("prior"), obj.child_path("prior"));
    const auto means = obj.get<std::vector<std::vector<double>>>("means");
    const auto vars = obj.get<std::vector<std::vector<double>>>("vars");
    obj.done();
    if (means.size() != prior.size() || vars.size() != prior.size())
      throw ConfigError("config: means/vars count must match prior length at " + path);
    std::vector<GaussianOracle::ClassDensity> classes;
    for (std::size_t k = 0; k < means.size(); ++k) classes.push_back({means[k], vars[k]});
    return std::make_unique<GaussianOracle>(std::move(prior), std::move(classes));
  }

  if (kind == "gmm") {
    ClassPrior prior = prior_from_config(obj.at("prior"), obj.child_path("prior"));
    const nlohmann::json& classes_json = obj.at("classes");
    obj.done();
    if (!classes_json.is_array() || classes_json.size() != prior.size())
      throw ConfigError("config: gmm classes must be an array matching the prior at " + path);
    std::vector<GmmOracle::ClassMixture> classes;
    for (std::size_t k = 0; k < classes_json.size(); ++k) {
      GmmOracle::ClassMixture mix;
      for (std::size_t c = 0; c < classes_json[k].size(); ++c) {
        StrictObject comp(classes_json[k][c],
                          path + ".classes[" + std::to_string(k) + "][" + std::to_string(c) + "]");
        GmmOracle::Component out;
        out.weight = comp.get<double>("weight");
        out.mean = comp.get<std::vector<double>>("mean");
        out.var = comp.get<std::vector<double>>("var");
        comp.done();
        mix.push_back(std::move(out));
      }
      classes.push_back(std::move(mix));
    }
    return std::make_unique<GmmOracle>(std::move(prior), std::move(classes));
  }

  throw ConfigError("config: unknown oracle kind '" + kind + "' at " + path);
}

inline TrainSpec train_spec_from_config(const nlohmann::json& j, const std::string& path,
                                        TrainSpec spec = {}) {
  StrictObject obj(j, path);
  const std::string mode = obj.get_or<std::string>("label_mode", "hard");
  if (mode == "hard") {
    spec.label_mode = LabelMode::kHard;
  } else if (mode == "soft") {
    spec.label_mode = LabelMode::kSoft;
  } else {
    throw ConfigError("config: label_mode must be 'hard' or 'soft' at " + path);
  }
  const std::string source = obj.get_or<std::string>("hard_label_source", "");
  if (source == "argmax") {
    spec.hard_label_source = HardLabelSource::kArgmaxPosterior;
  } else if (source == "class") {
    spec.hard_label_source = HardLabelSource::kRawClass;
  } else if (!source.empty()) {
    throw ConfigError("config: hard_label_source must be 'argmax' or 'class' at " + path);
  }
  spec.learning_rate = obj.get_or<double>("learning_rate", spec.learning_rate);
  spec.epochs = obj.get_or<std::size_t>("epochs", spec.epochs);
  spec.batch_size = obj.get_or<std::size_t>("batch_size", spec.batch_size);
  spec.hidden = obj.get_or<std::vector<std::size_t>>("hidden", spec.hidden);
  try {
    spec.activation = activation_from_name(obj.get_or<std::string>("activation", "tanh"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError("config: " + std::string(e.what()) + " at " + path);
  }
  obj.done();
  return spec;
}

}  // namespace oraclebench
