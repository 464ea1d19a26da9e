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

#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <set>

#include "oraclebench/active.hpp"
#include "support/test_util.hpp"
#include "support/worlds.hpp"

using namespace oraclebench;

namespace {

class FixedPredictor : public Predictor {
 public:
  FixedPredictor(std::size_t k, std::vector<double> probs)
      : k_(k), probs_(std::move(probs)) {}
  std::size_t num_classes() const override { return k_; }
  std::vector<double> predict_proba(std::span<const double>) const override { return probs_; }

 private:
  std::size_t k_;
  std::vector<double> probs_;
};

class TruthPredictor : public Predictor {
 public:
  explicit TruthPredictor(const Oracle& oracle) : oracle_(oracle) {}
  std::size_t num_classes() const override { return oracle_.num_classes(); }
  std::vector<double> predict_proba(std::span<const double> x) const override {
    return oracle_posterior(oracle_, x);
  }

 private:
  const Oracle& oracle_;
};

}  // namespace

TEST_CASE("acquire random draws without replacement from the unlabeled pool",
          "[experiments][active]") {
  GaussianOracle oracle(ClassPrior::uniform(2), {{{-0.3}, {0.05}}, {{0.3}, {0.05}}});
  RngStream rng(1, 0);
  ALState state(make_labeled_dataset(oracle, 20, rng));
  state.labeled[3] = 1;
  state.labeled[7] = 1;
  FixedPredictor q(2, {0.5, 0.5});
  RngStream acq(2, 0);
  const auto picked = acquire(state, q, Strategy::kRandom, 5, acq);
  CHECK(picked.size() == 5);
  std::set<std::size_t> uniq(picked.begin(), picked.end());
  CHECK(uniq.size() == 5);
  CHECK_FALSE(uniq.contains(3));
  CHECK_FALSE(uniq.contains(7));
  CHECK_THROWS_AS(acquire(state, q, Strategy::kRandom, 19, acq), std::invalid_argument);
}

TEST_CASE("perfect classifier degenerates max_epistemic to index order",
          "[experiments][active]") {
  GaussianOracle oracle(ClassPrior::uniform(2), {{{-0.3}, {0.05}}, {{0.3}, {0.05}}});
  RngStream rng(3, 0);
  ALState state(make_labeled_dataset(oracle, 12, rng));
  TruthPredictor truth(oracle);
  RngStream acq(4, 0);
  const auto picked = acquire(state, truth, Strategy::kMaxEpistemic, 4, acq);
  CHECK(picked == std::vector<std::size_t>{0, 1, 2, 3});
}

TEST_CASE("one-hot truth with a uniform model is selected by both scores",
          "[experiments][active]") {
  std::vector<LabeledSample> pool(3);
  pool[0].x = {0.0};
  pool[0].posterior = std::vector<double>{0.5, 0.5};  // ambiguous, modeled
  pool[1].x = {1.0};
  pool[1].posterior = std::vector<double>{1.0, 0.0};  // informative
  pool[2].x = {2.0};
  pool[2].posterior = std::vector<double>{0.6, 0.4};
  ALState state(pool);
  FixedPredictor uniform_q(2, {0.5, 0.5});
  RngStream acq(5, 0);

  // epistemic score for sample 1 is KL(one-hot || uniform) = ln 2, entropy ln 2
  auto by_epi = acquire(state, uniform_q, Strategy::kMaxEpistemic, 1, acq);
  CHECK(by_epi == std::vector<std::size_t>{1});
  // all entropy scores equal ln2 -> tie-break by index
  auto by_ent = acquire(state, uniform_q, Strategy::kMaxEntropy, 1, acq);
  CHECK(by_ent == std::vector<std::size_t>{0});
}

TEST_CASE("ambiguous but perfectly modeled samples attract entropy, not epistemic",
          "[experiments][active]") {
  std::vector<LabeledSample> pool(2);
  pool[0].x = {0.0};
  pool[0].posterior = std::vector<double>{0.5, 0.5};  // p uniform, q = p
  pool[1].x = {1.0};
  pool[1].posterior = std::vector<double>{0.95, 0.05};  // slightly mismodeled
  ALState state(pool);
  FixedPredictor q(2, {0.5, 0.5});
  RngStream acq(6, 0);
  CHECK(acquire(state, q, Strategy::kMaxEntropy, 1, acq) == std::vector<std::size_t>{0});
  CHECK(acquire(state, q, Strategy::kMaxEpistemic, 1, acq) == std::vector<std::size_t>{1});
}

TEST_CASE("max_epistemic acquisition is top-n correct", "[experiments][active]") {
  GaussianOracle oracle(ClassPrior::uniform(2), {{{-0.2}, {0.05}}, {{0.2}, {0.05}}});
  RngStream rng(7, 0);
  ALState state(make_labeled_dataset(oracle, 50, rng));
  FixedPredictor q(2, {0.7, 0.3});
  RngStream acq(8, 0);
  const auto picked = acquire(state, q, Strategy::kMaxEpistemic, 10, acq);
  std::set<std::size_t> chosen(picked.begin(), picked.end());
  std::vector<double> scores(50);
  for (std::size_t i = 0; i < 50; ++i)
    scores[i] = kl_divergence(*state.pool[i].posterior, std::vector<double>{0.7, 0.3});
  double min_chosen = 1e300, max_rest = -1e300;
  for (std::size_t i = 0; i < 50; ++i) {
    if (chosen.contains(i))
      min_chosen = std::min(min_chosen, scores[i]);
    else
      max_rest = std::max(max_rest, scores[i]);
  }
  CHECK(min_chosen >= max_rest);
}

TEST_CASE("exhausting the pool converges every strategy to the same set",
          "[experiments][active]") {
  auto oracle = testworlds::two_region_world();
  ALConfig cfg;
  cfg.pool_size = 60;
  cfg.init_labeled = 20;
  cfg.batch = 20;
  cfg.rounds = 2;  // 20 + 40 = full pool
  cfg.seeds = {5};
  cfg.eval_size = 200;
  cfg.train.epochs = 15;
  cfg.train.hidden = {8};
  cfg.train.batch_size = 32;
  const ALResult res = run_active_learning(oracle, cfg);

  // final round rows: identical training set (the whole pool) -> identical accuracy
  std::vector<double> final_accs;
  for (const auto& row : res.rows)
    if (row.round == cfg.rounds) {
      CHECK(row.labels_used == cfg.pool_size);
      final_accs.push_back(row.test_accuracy);
    }
  REQUIRE(final_accs.size() == 3);
  CHECK(final_accs[0] == final_accs[1]);
  CHECK(final_accs[1] == final_accs[2]);
}

TEST_CASE("epistemic acquisition avoids the pure-noise region", "[experiments][active]") {
  auto oracle = testworlds::two_region_world();
  ALConfig cfg;
  cfg.pool_size = 400;
  cfg.init_labeled = 32;
  cfg.batch = 32;
  cfg.rounds = 4;
  cfg.seeds = {1, 2, 3};
  cfg.eval_size = 600;
  cfg.train.epochs = 120;
  cfg.train.hidden = {32, 32};
  cfg.train.batch_size = 16;
  cfg.train.learning_rate = 2e-3;
  const ALResult res = run_active_learning(oracle, cfg);

  auto noise_fraction = [&](const std::string& strategy) {
    std::size_t noise = 0, total = 0;
    for (const auto& a : res.acquisitions) {
      if (a.strategy != strategy) continue;
      const auto& pool = res.pools[a.seed - 1];
      noise += testworlds::in_noise_region(pool[a.pool_index]) ? 1 : 0;
      ++total;
    }
    return static_cast<double>(noise) / static_cast<double>(total);
  };
  const double f_entropy = noise_fraction("max_entropy");
  const double f_epistemic = noise_fraction("max_epistemic");
  CHECK(f_epistemic < f_entropy);  // strictly fewer noise-region queries

  // random learning curves are non-decreasing after smoothing over seeds
  const std::size_t rounds = cfg.rounds + 1;
  std::vector<double> random_mean(rounds, 0.0);
  for (const auto& row : res.rows)
    if (row.strategy == "random") random_mean[row.round] += row.test_accuracy / 3.0;
  for (std::size_t r = 1; r < rounds; ++r)
    CHECK(random_mean[r] >= random_mean[r - 1] - 0.02);
}
