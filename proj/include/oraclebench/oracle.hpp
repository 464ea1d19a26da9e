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

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "oraclebench/math.hpp"
#include "oraclebench/rng.hpp"

namespace oraclebench {

inline constexpr int kOracleFormatVersion = 1;

/// Class prior on the K-simplex.
struct ClassPrior {
  std::vector<double> probs;

  ClassPrior() = default;
  explicit ClassPrior(std::vector<double> p) : probs(std::move(p)) {
    double sum = 0.0;
    for (double v : probs) {
      require(v >= 0.0, "ClassPrior: negative entry");
      sum += v;
    }
    require(std::abs(sum - 1.0) <= 1e-12 * std::max<double>(1, probs.size()),
            "ClassPrior: probabilities must sum to 1");
  }

  static ClassPrior uniform(std::size_t k) {
    require(k > 0, "ClassPrior::uniform: k must be positive");
    return ClassPrior(std::vector<double>(k, 1.0 / static_cast<double>(k)));
  }

  std::size_t size() const { return probs.size(); }
  double operator[](std::size_t k) const { return probs[k]; }

  double entropy_nats() const {
    double h = 0.0;
    for (double p : probs)
      if (p > 0.0) h -= p * std::log(p);
    return h;
  }
};

/// One draw from an oracle world. `posterior` is the exact p(y|x) under the
/// generating oracle, attached by the inference layer.
struct LabeledSample {
  std::vector<double> x;
  std::size_t y = 0;
  std::optional<std::vector<double>> posterior;
};

/// A frozen class-conditional density p(x|y) with a prior: the "world".
/// Frozen oracles are immutable and safe for unlimited concurrent reads.
class Oracle {
 public:
  virtual ~Oracle() = default;
  virtual std::string kind() const = 0;
  virtual std::size_t num_classes() const = 0;
  virtual std::size_t dim() const = 0;
  virtual const ClassPrior& prior() const = 0;
  virtual bool frozen() const = 0;

  /// Exact log p(x | y=k).
  virtual double log_likelihood(std::span<const double> x, std::size_t k) const = 0;

  /// Draw x ~ p(.|k).
  virtual std::vector<double> sample(std::size_t k, RngStream& rng) const = 0;

  virtual nlohmann::json to_json() const = 0;

  std::vector<double> class_log_likelihoods(std::span<const double> x) const {
    std::vector<double> ll(num_classes());
    for (std::size_t k = 0; k < ll.size(); ++k) ll[k] = log_likelihood(x, k);
    return ll;
  }

 protected:
  void check_query(std::span<const double> x, std::size_t k) const {
    require(x.size() == dim(), "oracle: input dimension mismatch");
    require(k < num_classes(), "oracle: class index out of range");
  }
};

/// Analytic reference oracle: one diagonal Gaussian per class.
class GaussianOracle final : public Oracle {
 public:
  struct ClassDensity {
    std::vector<double> mean;
    std::vector<double> var;
  };

  GaussianOracle(ClassPrior prior, std::vector<ClassDensity> classes)
      : prior_(std::move(prior)), classes_(std::move(classes)) {
    require(!classes_.empty(), "GaussianOracle: at least one class required");
    require(prior_.size() == classes_.size(), "GaussianOracle: prior/class count mismatch");
    dim_ = classes_[0].mean.size();
    require(dim_ > 0, "GaussianOracle: zero-dimensional class");
    for (const auto& c : classes_) {
      require(c.mean.size() == dim_ && c.var.size() == dim_,
              "GaussianOracle: inconsistent class dimensions");
      for (double v : c.var) require(v > 0.0, "GaussianOracle: variances must be positive");
    }
  }

  std::string kind() const override { return "gaussian"; }
  std::size_t num_classes() const override { return classes_.size(); }
  std::size_t dim() const override { return dim_; }
  const ClassPrior& prior() const override { return prior_; }
  bool frozen() const override { return true; }
  const ClassDensity& class_density(std::size_t k) const { return classes_[k]; }

  double log_likelihood(std::span<const double> x, std::size_t k) const override {
    check_query(x, k);
    return diag_normal_logpdf(x, classes_[k].mean, classes_[k].var);
  }

  std::vector<double> sample(std::size_t k, RngStream& rng) const override {
    require(k < num_classes(), "oracle: class index out of range");
    std::vector<double> x(dim_);
    for (std::size_t d = 0; d < dim_; ++d)
      x[d] = classes_[k].mean[d] + std::sqrt(classes_[k].var[d]) * rng.normal();
    return x;
  }

  nlohmann::json to_json() const override {
    nlohmann::json j;
    j["format_version"] = kOracleFormatVersion;
    j["kind"] = kind();
    j["k"] = num_classes();
    j["d"] = dim();
    j["prior"] = prior_.probs;
    nlohmann::json cls = nlohmann::json::array();
    for (const auto& c : classes_) cls.push_back({{"mean", c.mean}, {"var", c.var}});
    j["classes"] = cls;
    return j;
  }

 private:
  ClassPrior prior_;
  std::vector<ClassDensity> classes_;
  std::size_t dim_ = 0;
};

/// Mixture-of-diagonal-Gaussians per class. Still exactly tractable; used to
/// construct worlds with designed ambiguity regions (for instance a pure
/// label-noise region next to a separable one).
class GmmOracle final : public Oracle {
 public:
  struct Component {
    double weight = 1.0;
    std::vector<double> mean;
    std::vector<double> var;
  };
  using ClassMixture = std::vector<Component>;

  GmmOracle(ClassPrior prior, std::vector<ClassMixture> classes)
      : prior_(std::move(prior)), classes_(std::move(classes)) {
    require(!classes_.empty(), "GmmOracle: at least one class required");
    require(prior_.size() == classes_.size(), "GmmOracle: prior/class count mismatch");
    require(!classes_[0].empty(), "GmmOracle: empty mixture");
    dim_ = classes_[0][0].mean.size();
    for (auto& mix : classes_) {
      require(!mix.empty(), "GmmOracle: empty mixture");
      double wsum = 0.0;
      for (auto& c : mix) {
        require(c.weight > 0.0, "GmmOracle: component weights must be positive");
        require(c.mean.size() == dim_ && c.var.size() == dim_,
                "GmmOracle: inconsistent component dimensions");
        for (double v : c.var) require(v > 0.0, "GmmOracle: variances must be positive");
        wsum += c.weight;
      }
      require(std::abs(wsum - 1.0) <= 1e-9, "GmmOracle: component weights must sum to 1");
    }
  }

  std::string kind() const override { return "gmm"; }
  std::size_t num_classes() const override { return classes_.size(); }
  std::size_t dim() const override { return dim_; }
  const ClassPrior& prior() const override { return prior_; }
  bool frozen() const override { return true; }
  const ClassMixture& class_mixture(std::size_t k) const { return classes_[k]; }

  double log_likelihood(std::span<const double> x, std::size_t k) const override {
    check_query(x, k);
    std::vector<double> terms;
    terms.reserve(classes_[k].size());
    for (const auto& c : classes_[k])
      terms.push_back(std::log(c.weight) + diag_normal_logpdf(x, c.mean, c.var));
    return log_sum_exp(terms);
  }

  std::vector<double> sample(std::size_t k, RngStream& rng) const override {
    require(k < num_classes(), "oracle: class index out of range");
    std::vector<double> weights;
    weights.reserve(classes_[k].size());
    for (const auto& c : classes_[k]) weights.push_back(c.weight);
    const auto& comp = classes_[k][rng.categorical(weights)];
    std::vector<double> x(dim_);
    for (std::size_t d = 0; d < dim_; ++d)
      x[d] = comp.mean[d] + std::sqrt(comp.var[d]) * rng.normal();
    return x;
  }

  nlohmann::json to_json() const override {
    nlohmann::json j;
    j["format_version"] = kOracleFormatVersion;
    j["kind"] = kind();
    j["k"] = num_classes();
    j["d"] = dim();
    j["prior"] = prior_.probs;
    nlohmann::json cls = nlohmann::json::array();
    for (const auto& mix : classes_) {
      nlohmann::json comps = nlohmann::json::array();
      for (const auto& c : mix)
        comps.push_back({{"weight", c.weight}, {"mean", c.mean}, {"var", c.var}});
      cls.push_back({{"components", comps}});
    }
    j["classes"] = cls;
    return j;
  }

 private:
  ClassPrior prior_;
  std::vector<ClassMixture> classes_;
  std::size_t dim_ = 0;
};

/// Uniform dequantization for level-quantized data mapped to [-1,1]: adds
/// noise in [0, 2/levels) so each quantization bin is filled before density
/// modeling. Continuous synthetic data skips this.
inline std::vector<double> dequantize(std::span<const double> x, int levels, RngStream& rng) {
  require(levels >= 2, "dequantize: levels must be >= 2");
  std::vector<double> out(x.begin(), x.end());
  const double bin = 2.0 / static_cast<double>(levels);
  for (auto& v : out) v += rng.uniform() * bin;
  return out;
}

}  // namespace oraclebench
