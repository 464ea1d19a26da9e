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
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "oraclebench/classifier.hpp"
#include "oraclebench/oracle.hpp"
#include "oraclebench/posterior.hpp"

namespace oraclebench {

enum class Strategy { kRandom, kMaxEntropy, kMaxEpistemic };

inline std::string strategy_name(Strategy s) {
  switch (s) {
    case Strategy::kRandom: return "random";
    case Strategy::kMaxEntropy: return "max_entropy";
    case Strategy::kMaxEpistemic: return "max_epistemic";
  }
  return "?";
}

inline Strategy strategy_from_name(const std::string& s) {
  if (s == "random") return Strategy::kRandom;
  if (s == "max_entropy") return Strategy::kMaxEntropy;
  if (s == "max_epistemic") return Strategy::kMaxEpistemic;
  throw std::invalid_argument("unknown strategy '" + s + "'");
}

/// Pool of candidates with hidden oracle posteriors plus the labeled set.
struct ALState {
  std::vector<LabeledSample> pool;  // posteriors attached (hidden from the learner)
  std::vector<char> labeled;        // mask, same length as pool

  explicit ALState(std::vector<LabeledSample> p)
      : pool(std::move(p)), labeled(pool.size(), 0) {}

  std::size_t num_labeled() const {
    std::size_t n = 0;
    for (char c : labeled) n += c != 0;
    return n;
  }

  std::vector<std::size_t> unlabeled_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < pool.size(); ++i)
      if (!labeled[i]) out.push_back(i);
    return out;
  }
};

/// Select n unlabeled pool indices. Entropy scores by H(q(.|x)); epistemic
/// scores by KL(p(.|x) || q(.|x)) with the exact oracle posterior. Ties break
/// toward the lower pool index; random draws uniformly without replacement.
inline std::vector<std::size_t> acquire(const ALState& state, const Predictor& classifier,
                                        Strategy strategy, std::size_t n, RngStream& rng) {
  const std::vector<std::size_t> candidates = state.unlabeled_indices();
  require(!candidates.empty(), "acquire: pool exhausted");
  require(n <= candidates.size(), "acquire: batch exceeds unlabeled pool size");

  if (strategy == Strategy::kRandom) {
    const std::vector<std::size_t> picks = rng.sample_without_replacement(candidates.size(), n);
    std::vector<std::size_t> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = candidates[picks[i]];
    std::sort(out.begin(), out.end());
    return out;
  }

  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(candidates.size());
  for (std::size_t idx : candidates) {
    const LabeledSample& s = state.pool[idx];
    const std::vector<double> q = classifier.predict_proba(s.x);
    double score = 0.0;
    if (strategy == Strategy::kMaxEntropy) {
      score = entropy(q);
    } else {
      require(s.posterior.has_value(), "acquire: pool sample missing oracle posterior");
      score = kl_divergence(*s.posterior, q);
    }
    scored.emplace_back(score, idx);
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<std::size_t> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = scored[i].second;
  std::sort(out.begin(), out.end());
  return out;
}

struct ALConfig {
  std::size_t pool_size = 1200;
  std::size_t init_labeled = 40;
  std::size_t batch = 40;
  std::size_t rounds = 10;
  std::vector<Strategy> strategies = {Strategy::kRandom, Strategy::kMaxEntropy,
                                      Strategy::kMaxEpistemic};
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  std::size_t eval_size = 1000;
  std::uint64_t eval_seed = 1000;
  double target_accuracy = 0.0;  // 0 disables the efficiency metric
  TrainSpec train;
};

struct ALRoundRow {
  std::string strategy;
  std::uint64_t seed = 0;
  std::size_t round = 0;  // 0 = before the first acquisition
  std::size_t labels_used = 0;
  double test_accuracy = 0.0;
  double mean_epistemic = 0.0;
  double expected_acc = 0.0;
};

struct ALAcquisition {
  std::string strategy;
  std::uint64_t seed = 0;
  std::size_t round = 0;  // acquisition made after training round `round`
  std::size_t pool_index = 0;
};

struct ALEfficiencyRow {
  std::string strategy;
  std::uint64_t seed = 0;
  bool reached = false;
  double labels_to_target = 0.0;  // linear interpolation between rounds
};

struct ALResult {
  std::vector<ALRoundRow> rows;  // strategy outer, seed middle, round inner
  std::vector<ALAcquisition> acquisitions;
  std::vector<ALEfficiencyRow> efficiency;
  std::vector<std::vector<LabeledSample>> pools;  // per seed, shared across strategies
  BayesStats bayes;                               // on the shared test set
};

/// Pool-based loop: retrain from scratch each round (round index folded into
/// the training seed), acquire a batch, repeat. Pools, initial labels, and the
/// test set are shared across strategies so acquisition is the only variable.
/// Training uses the queried sampled labels (posteriors stay hidden).
inline ALResult run_active_learning(const Oracle& oracle, const ALConfig& cfg, int jobs = 1) {
  require(oracle.frozen(), "run_active_learning: oracle must be frozen");
  require(cfg.init_labeled >= 1 && cfg.batch >= 1, "run_active_learning: bad config");
  require(cfg.init_labeled + cfg.batch * cfg.rounds <= cfg.pool_size,
          "run_active_learning: budget exceeds pool size");
  require(!cfg.strategies.empty() && !cfg.seeds.empty(), "run_active_learning: empty plan");

  RngStream eval_rng(cfg.eval_seed, fnv1a64("al-eval"));
  const std::vector<LabeledSample> test_set =
      make_labeled_dataset(oracle, cfg.eval_size, eval_rng);

  ALResult result;
  result.bayes = bayes_stats_on(oracle, test_set);
  result.pools.resize(cfg.seeds.size());
  for (std::size_t si = 0; si < cfg.seeds.size(); ++si) {
    RngStream pool_rng(cfg.seeds[si], fnv1a64("al-pool"));
    result.pools[si] = make_labeled_dataset(oracle, cfg.pool_size, pool_rng);
  }

  const std::size_t n_cells = cfg.strategies.size() * cfg.seeds.size();
  std::vector<std::vector<ALRoundRow>> cell_rows(n_cells);
  std::vector<std::vector<ALAcquisition>> cell_acqs(n_cells);
  std::vector<ALEfficiencyRow> cell_eff(n_cells);

  parallel_for(n_cells, jobs, [&](std::size_t cell) {
    const std::size_t sti = cell / cfg.seeds.size();
    const std::size_t si = cell % cfg.seeds.size();
    const Strategy strategy = cfg.strategies[sti];
    const std::uint64_t seed = cfg.seeds[si];

    ALState state(result.pools[si]);
    RngStream init_rng(seed, fnv1a64("al-init"));
    for (std::size_t idx : init_rng.sample_without_replacement(cfg.pool_size, cfg.init_labeled))
      state.labeled[idx] = 1;

    RngStream acquire_rng(seed, fnv1a64("al-acquire-" + strategy_name(strategy)));

    for (std::size_t round = 0; round <= cfg.rounds; ++round) {
      // labeled training data in pool-index order; queried labels only
      std::vector<LabeledSample> train_data;
      train_data.reserve(state.num_labeled());
      for (std::size_t i = 0; i < state.pool.size(); ++i) {
        if (!state.labeled[i]) continue;
        LabeledSample s = state.pool[i];
        s.posterior.reset();
        train_data.push_back(std::move(s));
      }

      TrainSpec spec = cfg.train;
      spec.seed = fnv1a64("al-train|" + std::to_string(seed) + "|" + std::to_string(round));
      SoftmaxClassifier model =
          train_classifier(train_data, oracle.dim(), oracle.num_classes(), spec);

      ALRoundRow row;
      row.strategy = strategy_name(strategy);
      row.seed = seed;
      row.round = round;
      row.labels_used = train_data.size();
      row.test_accuracy = hard_accuracy(model, test_set);
      row.mean_epistemic = decompose(test_set, model).epistemic;
      row.expected_acc = expected_accuracy(model, test_set);
      cell_rows[cell].push_back(row);

      if (round < cfg.rounds) {
        const std::vector<std::size_t> picked =
            acquire(state, model, strategy, cfg.batch, acquire_rng);
        for (std::size_t idx : picked) {
          state.labeled[idx] = 1;
          cell_acqs[cell].push_back({strategy_name(strategy), seed, round, idx});
        }
      }
    }

    ALEfficiencyRow eff;
    eff.strategy = strategy_name(strategy);
    eff.seed = seed;
    if (cfg.target_accuracy > 0.0) {
      const auto& rows = cell_rows[cell];
      for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].test_accuracy >= cfg.target_accuracy) {
          eff.reached = true;
          if (r == 0) {
            eff.labels_to_target = static_cast<double>(rows[0].labels_used);
          } else {
            const double a0 = rows[r - 1].test_accuracy, a1 = rows[r].test_accuracy;
            const double l0 = static_cast<double>(rows[r - 1].labels_used);
            const double l1 = static_cast<double>(rows[r].labels_used);
            const double t = a1 > a0 ? (cfg.target_accuracy - a0) / (a1 - a0) : 1.0;
            eff.labels_to_target = l0 + t * (l1 - l0);
          }
          break;
        }
      }
      if (!eff.reached)
        eff.labels_to_target = std::numeric_limits<double>::quiet_NaN();
    }
    cell_eff[cell] = std::move(eff);
  });

  for (std::size_t cell = 0; cell < n_cells; ++cell) {
    result.rows.insert(result.rows.end(), cell_rows[cell].begin(), cell_rows[cell].end());
    result.acquisitions.insert(result.acquisitions.end(), cell_acqs[cell].begin(),
                               cell_acqs[cell].end());
    if (cfg.target_accuracy > 0.0) result.efficiency.push_back(cell_eff[cell]);
  }
  return result;
}

}  // namespace oraclebench
