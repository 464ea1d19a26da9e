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
#include <span>
#include <string>
#include <vector>

#include "oraclebench/classifier.hpp"
#include "oraclebench/oracle.hpp"
#include "oraclebench/posterior.hpp"
#include "oraclebench/powerlaw.hpp"

namespace oraclebench {

/// KL of a label distribution against the uniform baseline over K classes,
/// in nats: sum_k pi_k ln(pi_k * K).
inline double label_marginal_kl(const ClassPrior& pi_hat, std::size_t k) {
  require(pi_hat.size() == k, "label_marginal_kl: prior length != K");
  double kl = 0.0;
  for (double p : pi_hat.probs)
    if (p > 0.0) kl += p * std::log(p * static_cast<double>(k));
  return kl;
}

/// Training-distribution perturbation: a target class prior (label shift) and
/// additive Gaussian noise std in raw [-1,1] units (covariate shift).
struct ShiftConfig {
  std::string label;
  ClassPrior pi;
  double sigma = 0.0;
  std::size_t n_train = 5000;
};

struct ShiftedTrainset {
  std::vector<LabeledSample> samples;  // y = generating class; no posteriors
  std::vector<std::size_t> counts;
  ClassPrior pi_hat;  // realized class frequencies
};

/// Class counts ~ Multinomial(n_train, pi); per-class samples generated from
/// the oracle; for sigma > 0 each x gets clip(x + eps, -1, 1) noise applied
/// after selection. sigma == 0 passes samples through bitwise.
inline ShiftedTrainset build_shifted_trainset(const Oracle& oracle, const ShiftConfig& cfg,
                                              RngStream& rng) {
  require(cfg.sigma >= 0.0, "build_shifted_trainset: sigma must be >= 0");
  require(cfg.pi.size() == oracle.num_classes(), "build_shifted_trainset: prior length != K");
  require(cfg.n_train > 0, "build_shifted_trainset: n_train must be positive");

  const std::size_t k = oracle.num_classes();
  ShiftedTrainset out;
  out.counts.assign(k, 0);
  for (std::size_t i = 0; i < cfg.n_train; ++i) ++out.counts[rng.categorical(cfg.pi.probs)];

  out.samples.reserve(cfg.n_train);
  for (std::size_t cls = 0; cls < k; ++cls) {
    for (std::size_t i = 0; i < out.counts[cls]; ++i) {
      LabeledSample s;
      s.y = cls;
      s.x = oracle.sample(cls, rng);
      if (cfg.sigma > 0.0) {
        for (auto& v : s.x)
          v = std::clamp(v + cfg.sigma * rng.normal(), -1.0, 1.0);
      }
      out.samples.push_back(std::move(s));
    }
  }

  std::vector<double> freq(k);
  for (std::size_t cls = 0; cls < k; ++cls)
    freq[cls] = static_cast<double>(out.counts[cls]) / static_cast<double>(cfg.n_train);
  out.pi_hat = ClassPrior(freq);
  return out;
}

struct McKl {
  double value = 0.0;
  double se = 0.0;
  bool intractable = false;  // set for sigma > 0: noised density has no exact form
  std::size_t n = 0;
};

namespace detail {

// log of the sigma-convolved class density, ignoring the [-1,1] clip.
// Gaussian/GMM oracles get the exact variance-inflated form; other oracles
// fall back to a Monte-Carlo kernel average.
inline double convolved_class_logpdf(const Oracle& oracle, std::span<const double> x,
                                     std::size_t k, double sigma, RngStream& rng,
                                     std::size_t kernel_draws = 64) {
  if (sigma == 0.0) return oracle.log_likelihood(x, k);
  const double s2 = sigma * sigma;
  if (const auto* g = dynamic_cast<const GaussianOracle*>(&oracle)) {
    const auto& c = g->class_density(k);
    std::vector<double> var(c.var);
    for (auto& v : var) v += s2;
    return diag_normal_logpdf(x, c.mean, var);
  }
  if (const auto* g = dynamic_cast<const GmmOracle*>(&oracle)) {
    std::vector<double> terms;
    const auto& comps = g->class_mixture(k);
    terms.reserve(comps.size());
    for (const auto& comp : comps) {
      std::vector<double> var(comp.var);
      for (auto& v : var) v += s2;
      terms.push_back(std::log(comp.weight) + diag_normal_logpdf(x, comp.mean, var));
    }
    return log_sum_exp(terms);
  }
  // plug-in: average the density over noise kernel draws
  std::vector<double> terms(kernel_draws);
  std::vector<double> shifted(x.size());
  for (std::size_t m = 0; m < kernel_draws; ++m) {
    for (std::size_t d = 0; d < x.size(); ++d) shifted[d] = x[d] - sigma * rng.normal();
    terms[m] = oracle.log_likelihood(shifted, k);
  }
  return log_sum_exp(terms) - std::log(static_cast<double>(kernel_draws));
}

}  // namespace detail

/// Full-distribution KL of the shifted training distribution against the
/// oracle baseline (oracle prior, no noise).
///
/// sigma == 0: exact by the chain rule -- conditionals cancel, leaving
/// KL(pi_shift || pi_base) in closed form (se = 0).
/// sigma > 0: Monte-Carlo plug-in against the sigma-convolved conditionals
/// with the intractable flag set; the [-1,1] clip is not modeled.
inline McKl mc_distribution_kl(const Oracle& oracle, const ShiftConfig& shifted,
                               std::size_t n_mc, RngStream& rng) {
  require(shifted.pi.size() == oracle.num_classes(), "mc_distribution_kl: prior length != K");
  const ClassPrior& base = oracle.prior();
  McKl out;

  if (shifted.sigma == 0.0) {
    double kl = 0.0;
    for (std::size_t k = 0; k < base.size(); ++k) {
      if (shifted.pi[k] > 0.0) {
        require(base[k] > 0.0, "mc_distribution_kl: shifted prior outside baseline support");
        kl += shifted.pi[k] * std::log(shifted.pi[k] / base[k]);
      }
    }
    out.value = kl;
    out.se = 0.0;
    out.intractable = false;
    out.n = 0;
    return out;
  }

  require(n_mc > 1, "mc_distribution_kl: n_mc must be > 1");
  const std::size_t k = oracle.num_classes();
  std::vector<double> ratios(n_mc);
  for (std::size_t i = 0; i < n_mc; ++i) {
    const std::size_t y = rng.categorical(shifted.pi.probs);
    std::vector<double> x = oracle.sample(y, rng);
    for (auto& v : x) v = std::clamp(v + shifted.sigma * rng.normal(), -1.0, 1.0);

    std::vector<double> shift_terms(k), base_terms(k);
    for (std::size_t c = 0; c < k; ++c) {
      const double lp_shift = shifted.pi[c] > 0.0
                                  ? std::log(shifted.pi[c])
                                  : -std::numeric_limits<double>::infinity();
      const double lp_base = base[c] > 0.0 ? std::log(base[c])
                                           : -std::numeric_limits<double>::infinity();
      shift_terms[c] = lp_shift + detail::convolved_class_logpdf(oracle, x, c, shifted.sigma, rng);
      base_terms[c] = lp_base + oracle.log_likelihood(x, c);
    }
    ratios[i] = log_sum_exp(shift_terms) - log_sum_exp(base_terms);
  }
  const MeanStd ms = mean_std(ratios);
  out.value = ms.mean;
  out.se = ms.se;
  out.intractable = true;
  out.n = n_mc;
  return out;
}

struct ShiftProtocol {
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  std::size_t eval_size = 2000;
  std::uint64_t eval_seed = 1000;
  std::size_t n_mc = 10000;
  TrainSpec train;
};

struct ShiftCellRow {
  std::string label;
  std::vector<double> pi;
  double sigma = 0.0;
  std::uint64_t seed = 0;
  double kl_y_target = 0.0;
  double kl_y_empirical = 0.0;
  double test_acc = 0.0;
  double delta_acc_pp = 0.0;   // percentage points vs the baseline config mean
  double expected_acc = 0.0;   // mean posterior mass on the predicted class
};

struct ShiftSummaryRow {
  std::string label;
  std::vector<double> pi;
  double sigma = 0.0;
  double kl_y_target = 0.0;
  double kl_y_emp_mean = 0.0;
  double kl_y_emp_std = 0.0;
  double kl_mc = 0.0;
  double kl_mc_se = 0.0;
  bool kl_mc_intractable = false;
  double test_acc_mean = 0.0;
  double test_acc_std = 0.0;
  double delta_acc_pp = 0.0;
};

struct ShiftSuiteResult {
  std::vector<ShiftCellRow> rows;         // canonical order: config outer, seed inner
  std::vector<ShiftSummaryRow> summary;   // one row per config
  OlsFit regression;                      // delta_acc_pp on kl_mc over summary rows
  BayesStats bayes;                       // Bayes stats on the baseline test set
};

inline std::uint64_t shift_cell_stream(const ShiftConfig& cfg, std::uint64_t seed) {
  std::string key = "shift";
  for (double p : cfg.pi.probs) key += "|" + format_double(p);
  key += "|" + format_double(cfg.sigma) + "|" + std::to_string(cfg.n_train) + "|" +
         std::to_string(seed);
  return fnv1a64(key);
}

/// configs[0] is the baseline; every model is evaluated on the same held-out
/// baseline test set. Cell RNG streams derive from config *content*, so two
/// identical configs reproduce identical rows.
inline ShiftSuiteResult run_shift_suite(const Oracle& oracle,
                                        std::span<const ShiftConfig> configs,
                                        const ShiftProtocol& protocol, int jobs = 1) {
  require(!configs.empty(), "run_shift_suite: no configs");
  require(!protocol.seeds.empty(), "run_shift_suite: no seeds");

  RngStream eval_rng(protocol.eval_seed, fnv1a64("shift-eval"));
  const std::vector<LabeledSample> test_set =
      make_labeled_dataset(oracle, protocol.eval_size, eval_rng);

  ShiftSuiteResult result;
  result.bayes = bayes_stats_on(oracle, test_set);

  const std::size_t n_cells = configs.size() * protocol.seeds.size();
  result.rows.resize(n_cells);

  parallel_for(n_cells, jobs, [&](std::size_t cell) {
    const std::size_t ci = cell / protocol.seeds.size();
    const std::size_t si = cell % protocol.seeds.size();
    const ShiftConfig& cfg = configs[ci];
    const std::uint64_t seed = protocol.seeds[si];

    RngStream rng(seed, shift_cell_stream(cfg, seed));
    ShiftedTrainset ts = build_shifted_trainset(oracle, cfg, rng);

    TrainSpec spec = protocol.train;
    spec.seed = rng.substream(fnv1a64("train-seed")).next_u64();
    SoftmaxClassifier model =
        train_classifier(ts.samples, oracle.dim(), oracle.num_classes(), spec);

    ShiftCellRow row;
    row.label = cfg.label;
    row.pi = cfg.pi.probs;
    row.sigma = cfg.sigma;
    row.seed = seed;
    row.kl_y_target = label_marginal_kl(cfg.pi, oracle.num_classes());
    row.kl_y_empirical = label_marginal_kl(ts.pi_hat, oracle.num_classes());
    row.test_acc = hard_accuracy(model, test_set);
    row.expected_acc = expected_accuracy(model, test_set);
    result.rows[cell] = std::move(row);
  });

  // summaries + deltas vs the baseline config (configs[0]) mean accuracy
  const std::size_t s = protocol.seeds.size();
  std::vector<double> base_accs(s);
  for (std::size_t si = 0; si < s; ++si) base_accs[si] = result.rows[si].test_acc;
  const double baseline_mean = mean_std(base_accs).mean;

  for (std::size_t ci = 0; ci < configs.size(); ++ci) {
    const ShiftConfig& cfg = configs[ci];
    std::vector<double> accs(s), kls(s);
    for (std::size_t si = 0; si < s; ++si) {
      accs[si] = result.rows[ci * s + si].test_acc;
      kls[si] = result.rows[ci * s + si].kl_y_empirical;
      result.rows[ci * s + si].delta_acc_pp =
          (result.rows[ci * s + si].test_acc - baseline_mean) * 100.0;
    }
    const MeanStd acc = mean_std(accs);
    const MeanStd kly = mean_std(kls);

    RngStream mc_rng(protocol.eval_seed, shift_cell_stream(cfg, fnv1a64("mc-kl")));
    const McKl mc = mc_distribution_kl(oracle, cfg, protocol.n_mc, mc_rng);

    ShiftSummaryRow row;
    row.label = cfg.label;
    row.pi = cfg.pi.probs;
    row.sigma = cfg.sigma;
    row.kl_y_target = label_marginal_kl(cfg.pi, oracle.num_classes());
    row.kl_y_emp_mean = kly.mean;
    row.kl_y_emp_std = kly.stddev;
    row.kl_mc = mc.value;
    row.kl_mc_se = mc.se;
    row.kl_mc_intractable = mc.intractable;
    row.test_acc_mean = acc.mean;
    row.test_acc_std = acc.stddev;
    row.delta_acc_pp = (acc.mean - baseline_mean) * 100.0;
    result.summary.push_back(std::move(row));
  }

  std::vector<double> xs, ys;
  for (const auto& row : result.summary) {
    xs.push_back(row.kl_mc);
    ys.push_back(row.delta_acc_pp);
  }
  if (xs.size() >= 2) result.regression = ols(xs, ys);
  return result;
}

}  // namespace oraclebench
