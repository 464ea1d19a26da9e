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

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "oraclebench/common.hpp"
#include "oraclebench/math.hpp"
#include "oraclebench/oracle.hpp"
#include "oraclebench/predictor.hpp"

namespace oraclebench {

// Classifier probabilities are floored at this value (then renormalized)
// before log/KL evaluation; saturated models emit exact zeros otherwise.
inline constexpr double kProbFloor = 1e-12;

struct PosteriorConfig {
  ClassPrior prior;
  double temperature = 1.0;

  explicit PosteriorConfig(ClassPrior p, double t = 1.0) : prior(std::move(p)), temperature(t) {
    require(std::isfinite(t) && t > 0.0, "PosteriorConfig: temperature must be positive");
  }
};

/// Exact Bayes posterior from per-class log-likelihoods, entirely in the log
/// domain: p_k proportional to exp(loglik_k / T) * prior_k.
inline std::vector<double> bayes_posterior(std::span<const double> logliks,
                                           const PosteriorConfig& cfg) {
  require(logliks.size() == cfg.prior.size(), "bayes_posterior: loglik/prior length mismatch");
  std::vector<double> scores(logliks.size());
  for (std::size_t k = 0; k < logliks.size(); ++k) {
    const double lp = cfg.prior[k] > 0.0 ? std::log(cfg.prior[k])
                                         : -std::numeric_limits<double>::infinity();
    scores[k] = logliks[k] / cfg.temperature + lp;
  }
  const double z = log_sum_exp(scores);  // throws domain_error when all -inf
  std::vector<double> probs(scores.size());
  for (std::size_t k = 0; k < scores.size(); ++k) probs[k] = std::exp(scores[k] - z);
  return probs;
}

inline std::vector<double> oracle_posterior(const Oracle& oracle, std::span<const double> x,
                                            double temperature = 1.0) {
  return bayes_posterior(oracle.class_log_likelihoods(x),
                         PosteriorConfig(oracle.prior(), temperature));
}

/// Shannon entropy in nats with the 0*ln(0) = 0 convention.
inline double entropy(std::span<const double> p) {
  double h = 0.0;
  for (double v : p)
    if (v > 0.0) h -= v * std::log(v);
  return h;
}

namespace detail {

inline std::vector<double> floor_and_renormalize(std::span<const double> q, bool* floored) {
  std::vector<double> out(q.begin(), q.end());
  bool fired = false;
  double sum = 0.0;
  for (auto& v : out) {
    if (v < kProbFloor) {
      v = kProbFloor;
      fired = true;
    }
    sum += v;
  }
  // untouched inputs pass through so that kl(p, p) is exactly zero
  if (fired)
    for (auto& v : out) v /= sum;
  if (floored) *floored = fired;
  return out;
}

}  // namespace detail

/// KL(p || q) in nats. q is floored at kProbFloor and renormalized first;
/// *floored reports whether the floor fired.
inline double kl_divergence(std::span<const double> p, std::span<const double> q,
                            bool* floored = nullptr) {
  require(p.size() == q.size(), "kl_divergence: length mismatch");
  const std::vector<double> qf = detail::floor_and_renormalize(q, floored);
  double kl = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k)
    if (p[k] > 0.0) kl += p[k] * (std::log(p[k]) - std::log(qf[k]));
  return kl;
}

/// Cross-entropy -sum p ln q in nats, with the same q flooring as
/// kl_divergence so that CE = H + KL holds to rounding.
inline double cross_entropy(std::span<const double> p, std::span<const double> q,
                            bool* floored = nullptr) {
  require(p.size() == q.size(), "cross_entropy: length mismatch");
  const std::vector<double> qf = detail::floor_and_renormalize(q, floored);
  double ce = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k)
    if (p[k] > 0.0) ce -= p[k] * std::log(qf[k]);
  return ce;
}

/// Total cross-entropy of a classifier against exact oracle posteriors, split
/// into its aleatoric (mean posterior entropy) and epistemic (mean KL) parts.
struct DecompositionReport {
  struct PerSample {
    double entropy = 0.0;
    double kl = 0.0;
  };

  std::size_t n = 0;
  double total_ce = 0.0;
  double aleatoric = 0.0;
  double epistemic = 0.0;
  double se_aleatoric = 0.0;
  double se_epistemic = 0.0;
  bool floor_fired = false;
  std::vector<PerSample> per_sample;

  nlohmann::json to_json() const {
    return nlohmann::json{{"n", n},
                          {"total_ce", total_ce},
                          {"aleatoric", aleatoric},
                          {"epistemic", epistemic},
                          {"se_aleatoric", se_aleatoric},
                          {"se_epistemic", se_epistemic}};
  }
};

/// Every sample must carry its exact oracle posterior. Per-sample terms are
/// computed independently (shard-parallel safe) and reduced in index order,
/// so results do not depend on `jobs`.
inline DecompositionReport decompose(std::span<const LabeledSample> eval_set,
                                     const Predictor& classifier, int jobs = 1) {
  require(!eval_set.empty(), "decompose: empty eval set");
  for (const auto& s : eval_set)
    require(s.posterior.has_value(), "decompose: sample missing oracle posterior");

  DecompositionReport report;
  report.n = eval_set.size();
  report.per_sample.resize(eval_set.size());
  std::vector<char> floored(eval_set.size(), 0);

  parallel_for(eval_set.size(), jobs, [&](std::size_t i) {
    const auto& s = eval_set[i];
    const std::vector<double> q = classifier.predict_proba(s.x);
    bool fired = false;
    report.per_sample[i].entropy = entropy(*s.posterior);
    report.per_sample[i].kl = kl_divergence(*s.posterior, q, &fired);
    floored[i] = fired ? 1 : 0;
  });

  std::vector<double> hs(report.n), kls(report.n);
  for (std::size_t i = 0; i < report.n; ++i) {
    hs[i] = report.per_sample[i].entropy;
    kls[i] = report.per_sample[i].kl;
    report.floor_fired |= floored[i] != 0;
  }
  const MeanStd h = mean_std(hs);
  const MeanStd k = mean_std(kls);
  report.aleatoric = h.mean;
  report.epistemic = k.mean;
  report.se_aleatoric = h.se;
  report.se_epistemic = k.se;
  report.total_ce = report.aleatoric + report.epistemic;
  return report;
}

/// Joint draw (y, x) from the oracle mixture, with the exact posterior
/// attached when requested.
inline LabeledSample draw_labeled(const Oracle& oracle, RngStream& rng,
                                  bool attach_posterior = true, double temperature = 1.0) {
  LabeledSample s;
  s.y = rng.categorical(oracle.prior().probs);
  s.x = oracle.sample(s.y, rng);
  if (attach_posterior) s.posterior = oracle_posterior(oracle, s.x, temperature);
  return s;
}

inline std::vector<LabeledSample> make_labeled_dataset(const Oracle& oracle, std::size_t n,
                                                       RngStream& rng,
                                                       bool attach_posteriors = true,
                                                       double temperature = 1.0) {
  std::vector<LabeledSample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    out.push_back(draw_labeled(oracle, rng, attach_posteriors, temperature));
  return out;
}

struct BayesStats {
  double bayes_acc = 0.0;       // E[max_k p(k|x)] under the oracle mixture
  double bayes_err = 0.0;       // 1 - bayes_acc
  double aleatoric_floor = 0.0; // E[H(p(.|x))] in nats
  double se_acc = 0.0;
  double se_floor = 0.0;
  std::size_t n = 0;
};

inline BayesStats bayes_accuracy(const Oracle& oracle, std::size_t mc_samples, RngStream& rng) {
  require(oracle.frozen(), "bayes_accuracy: oracle must be frozen");
  require(mc_samples > 0, "bayes_accuracy: mc_samples must be positive");
  std::vector<double> max_p(mc_samples), ent(mc_samples);
  for (std::size_t i = 0; i < mc_samples; ++i) {
    const std::size_t y = rng.categorical(oracle.prior().probs);
    const std::vector<double> x = oracle.sample(y, rng);
    const std::vector<double> post = oracle_posterior(oracle, x);
    double m = 0.0;
    for (double p : post) m = std::max(m, p);
    max_p[i] = m;
    ent[i] = entropy(post);
  }
  const MeanStd acc = mean_std(max_p);
  const MeanStd flo = mean_std(ent);
  BayesStats out;
  out.bayes_acc = acc.mean;
  out.bayes_err = 1.0 - acc.mean;
  out.aleatoric_floor = flo.mean;
  out.se_acc = acc.se;
  out.se_floor = flo.se;
  out.n = mc_samples;
  return out;
}

/// Same statistics evaluated on a fixed sample set instead of fresh draws.
inline BayesStats bayes_stats_on(const Oracle& oracle, std::span<const LabeledSample> samples) {
  require(!samples.empty(), "bayes_stats_on: empty sample set");
  std::vector<double> max_p(samples.size()), ent(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const std::vector<double> post = samples[i].posterior.has_value()
                                         ? *samples[i].posterior
                                         : oracle_posterior(oracle, samples[i].x);
    double m = 0.0;
    for (double p : post) m = std::max(m, p);
    max_p[i] = m;
    ent[i] = entropy(post);
  }
  const MeanStd acc = mean_std(max_p);
  const MeanStd flo = mean_std(ent);
  BayesStats out;
  out.bayes_acc = acc.mean;
  out.bayes_err = 1.0 - acc.mean;
  out.aleatoric_floor = flo.mean;
  out.se_acc = acc.se;
  out.se_floor = flo.se;
  out.n = samples.size();
  return out;
}

struct MutualInformation {
  double mi_bits = 0.0;
  double nmi = 0.0;  // I(X;Y) / H(prior)
  double se_bits = 0.0;
  std::size_t n = 0;
};

/// I(X;Y) = H(prior) - E_x[H(p(y|x))], Monte-Carlo over the oracle mixture.
inline MutualInformation mutual_information(const Oracle& oracle, std::size_t mc_samples,
                                            RngStream& rng) {
  require(oracle.frozen(), "mutual_information: oracle must be frozen");
  const BayesStats stats = bayes_accuracy(oracle, mc_samples, rng);
  const double h_prior = oracle.prior().entropy_nats();
  MutualInformation mi;
  const double nats = h_prior - stats.aleatoric_floor;
  mi.mi_bits = nats / std::numbers::ln2;
  mi.nmi = h_prior > 0.0 ? nats / h_prior : 0.0;
  mi.se_bits = stats.se_floor / std::numbers::ln2;
  mi.n = mc_samples;
  return mi;
}

}  // namespace oraclebench
