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

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "oraclebench/classifier.hpp"
#include "oraclebench/oracle.hpp"
#include "oraclebench/posterior.hpp"

namespace oraclebench {

using VectorSet = std::vector<std::vector<double>>;

namespace detail {

inline double euclidean(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) acc += (a[d] - b[d]) * (a[d] - b[d]);
  return std::sqrt(acc);
}

/// Distance from each query point to its nearest neighbor in `set`,
/// excluding exact self-indices when `exclude_self` (for within-set queries).
inline std::vector<double> nn_distances(const VectorSet& queries, const VectorSet& set,
                                        bool exclude_self = false, int jobs = 1) {
  std::vector<double> out(queries.size());
  parallel_for(queries.size(), jobs, [&](std::size_t i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < set.size(); ++j) {
      if (exclude_self && i == j) continue;
      best = std::min(best, euclidean(queries[i], set[j]));
    }
    out[i] = best;
  });
  return out;
}

/// Distance to the k-th nearest neighbor within one set (self excluded).
inline std::vector<double> knn_distances(const VectorSet& set, std::size_t k, int jobs = 1) {
  require(set.size() > k, "knn_distances: need more than k points");
  std::vector<double> out(set.size());
  parallel_for(set.size(), jobs, [&](std::size_t i) {
    std::vector<double> d;
    d.reserve(set.size() - 1);
    for (std::size_t j = 0; j < set.size(); ++j)
      if (i != j) d.push_back(euclidean(set[i], set[j]));
    std::nth_element(d.begin(), d.begin() + (k - 1), d.end());
    out[i] = d[k - 1];
  });
  return out;
}

inline double mean_pairwise_distance(const VectorSet& set, std::size_t cap = 1000) {
  require(set.size() >= 2, "mean_pairwise_distance: need >= 2 points");
  // deterministic stride subsample keeps the cost quadratic in `cap`
  std::vector<std::size_t> idx;
  const std::size_t stride = std::max<std::size_t>(1, set.size() / cap);
  for (std::size_t i = 0; i < set.size(); i += stride) idx.push_back(i);
  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t a = 0; a < idx.size(); ++a)
    for (std::size_t b = a + 1; b < idx.size(); ++b) {
      acc += euclidean(set[idx[a]], set[idx[b]]);
      ++count;
    }
  return acc / static_cast<double>(count);
}

inline double total_variance(const VectorSet& set) {
  require(!set.empty(), "total_variance: empty set");
  const std::size_t dim = set[0].size();
  std::vector<double> mean(dim, 0.0);
  for (const auto& x : set)
    for (std::size_t d = 0; d < dim; ++d) mean[d] += x[d];
  for (auto& m : mean) m /= static_cast<double>(set.size());
  double trace = 0.0;
  for (const auto& x : set)
    for (std::size_t d = 0; d < dim; ++d) trace += (x[d] - mean[d]) * (x[d] - mean[d]);
  return trace / static_cast<double>(set.size());
}

}  // namespace detail

struct MemorizationResult {
  double rate = 0.0;                // fraction of generated with NN distance < threshold
  double threshold = 0.0;
  std::vector<double> distances;    // generated-to-train NN distances, input order
};

/// Nearest-neighbor distances between generated samples and the training set,
/// thresholded into a memorization rate. Distances are Euclidean in raw input
/// space.
inline MemorizationResult memorization_check(const VectorSet& train, const VectorSet& generated,
                                             double threshold, int jobs = 1) {
  require(!train.empty() && !generated.empty(), "memorization_check: empty input set");
  MemorizationResult out;
  out.threshold = threshold;
  out.distances = detail::nn_distances(generated, train, false, jobs);
  std::size_t below = 0;
  for (double d : out.distances) below += d < threshold ? 1 : 0;
  out.rate = static_cast<double>(below) / static_cast<double>(generated.size());
  return out;
}

/// Default memorization threshold: 1st percentile of the training set's own
/// nearest-neighbor distances. An absolute threshold (the feature-space rule
/// of 10 units) stays available as an override on memorization_check.
inline double default_memorization_threshold(const VectorSet& train, int jobs = 1) {
  require(train.size() >= 2, "default_memorization_threshold: need >= 2 points");
  return percentile(detail::nn_distances(train, train, true, jobs), 1.0);
}

/// Fraction of real samples with a generated neighbor within an adaptive
/// threshold: the given percentile of real-to-real k-NN distances.
inline double coverage(const VectorSet& real, const VectorSet& generated, std::size_t k = 3,
                       double pct = 90.0, int jobs = 1) {
  require(real.size() >= k + 1 && generated.size() >= k + 1,
          "coverage: both sets need at least k+1 points");
  const double threshold = percentile(detail::knn_distances(real, k, jobs), pct);
  const std::vector<double> d = detail::nn_distances(real, generated, false, jobs);
  std::size_t covered = 0;
  for (double v : d) covered += v <= threshold ? 1 : 0;
  return static_cast<double>(covered) / static_cast<double>(real.size());
}

struct DiversityRatios {
  std::vector<double> variance_ratio;  // per class: trace(cov gen) / trace(cov real)
  std::vector<double> distance_ratio;  // per class: mean pairwise distance ratio
};

inline DiversityRatios variance_ratio(const std::vector<VectorSet>& real_by_class,
                                      const std::vector<VectorSet>& generated_by_class) {
  require(real_by_class.size() == generated_by_class.size(),
          "variance_ratio: class count mismatch");
  DiversityRatios out;
  for (std::size_t k = 0; k < real_by_class.size(); ++k) {
    out.variance_ratio.push_back(detail::total_variance(generated_by_class[k]) /
                                 detail::total_variance(real_by_class[k]));
    out.distance_ratio.push_back(detail::mean_pairwise_distance(generated_by_class[k]) /
                                 detail::mean_pairwise_distance(real_by_class[k]));
  }
  return out;
}

struct ArchitectureVariant {
  std::string name;
  TrainSpec train;
};

inline std::vector<ArchitectureVariant> default_variants() {
  std::vector<ArchitectureVariant> out;
  {
    ArchitectureVariant v{"mlp_64x64_tanh", {}};
    v.train.hidden = {64, 64};
    out.push_back(v);
  }
  {
    ArchitectureVariant v{"mlp_128_relu", {}};
    v.train.hidden = {128};
    v.train.activation = Activation::kRelu;
    out.push_back(v);
  }
  {
    ArchitectureVariant v{"mlp_32x32x32_tanh", {}};
    v.train.hidden = {32, 32, 32};
    out.push_back(v);
  }
  return out;
}

struct SelfValidationRow {
  std::string variant;
  double accuracy = 0.0;  // expected accuracy under the oracle posterior
  double gap_pp = 0.0;    // (bayes_acc - accuracy) * 100
};

struct SelfValidationResult {
  std::vector<SelfValidationRow> rows;
  BayesStats bayes;  // on the shared eval set
};

/// Trains each architecture variant on fresh oracle samples and reports the
/// gap to the Bayes bound on one shared eval set. Accuracy is the expected
/// accuracy under the exact posterior, so the gap cannot go negative.
inline SelfValidationResult self_validation(const Oracle& oracle, std::size_t n_train,
                                            std::span<const ArchitectureVariant> variants,
                                            std::size_t eval_size = 2000,
                                            std::uint64_t seed = 1000, int jobs = 1) {
  require(oracle.frozen(), "self_validation: oracle must be frozen");
  require(!variants.empty(), "self_validation: no variants");
  RngStream eval_rng(seed, fnv1a64("selfval-eval"));
  const std::vector<LabeledSample> eval_set = make_labeled_dataset(oracle, eval_size, eval_rng);

  SelfValidationResult result;
  result.bayes = bayes_stats_on(oracle, eval_set);
  result.rows.resize(variants.size());

  parallel_for(variants.size(), jobs, [&](std::size_t vi) {
    RngStream rng(seed, fnv1a64("selfval-train|" + variants[vi].name));
    const std::vector<LabeledSample> train_data = make_labeled_dataset(oracle, n_train, rng);
    TrainSpec spec = variants[vi].train;
    spec.seed = rng.substream(fnv1a64("train-seed")).next_u64();
    const SoftmaxClassifier model =
        train_classifier(train_data, oracle.dim(), oracle.num_classes(), spec);
    SelfValidationRow row;
    row.variant = variants[vi].name;
    row.accuracy = expected_accuracy(model, eval_set);
    row.gap_pp = (result.bayes.bayes_acc - row.accuracy) * 100.0;
    result.rows[vi] = std::move(row);
  });
  return result;
}

struct ValidationReport {
  double memorization_rate = 0.0;
  double memorization_threshold = 0.0;
  std::map<int, double> nn_distance_quantiles;  // percentile -> distance
  double coverage = 0.0;
  std::vector<double> variance_ratio_per_class;
  std::vector<double> distance_ratio_per_class;
  std::vector<SelfValidationRow> self_validation_rows;
  double self_validation_gap_pp = 0.0;  // worst variant gap
  double bayes_acc = 0.0;
  double bayes_acc_se = 0.0;
  double aleatoric_floor = 0.0;

  nlohmann::json to_json() const {
    nlohmann::json q = nlohmann::json::object();
    for (const auto& [pct, v] : nn_distance_quantiles) q[std::to_string(pct)] = v;
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : self_validation_rows)
      rows.push_back({{"variant", r.variant}, {"accuracy", r.accuracy}, {"gap_pp", r.gap_pp}});
    return nlohmann::json{{"memorization_rate", memorization_rate},
                          {"memorization_threshold", memorization_threshold},
                          {"nn_distance_quantiles", q},
                          {"coverage", coverage},
                          {"variance_ratio_per_class", variance_ratio_per_class},
                          {"distance_ratio_per_class", distance_ratio_per_class},
                          {"self_validation", rows},
                          {"self_validation_gap_pp", self_validation_gap_pp},
                          {"bayes_acc", bayes_acc},
                          {"bayes_acc_se", bayes_acc_se},
                          {"aleatoric_floor", aleatoric_floor}};
  }
};

}  // namespace oraclebench
