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
#include <limits>

#include "oraclebench/posterior.hpp"
#include "support/test_util.hpp"

using namespace oraclebench;

namespace {

// Fixed predictor for decomposition tests.
class TablePredictor : public Predictor {
 public:
  explicit TablePredictor(std::vector<std::vector<double>> rows) : rows_(std::move(rows)) {}
  std::size_t num_classes() const override { return rows_[0].size(); }
  std::vector<double> predict_proba(std::span<const double> x) const override {
    return rows_[static_cast<std::size_t>(x[0])];
  }

 private:
  std::vector<std::vector<double>> rows_;
};

class ConstPredictor : public Predictor {
 public:
  explicit ConstPredictor(std::vector<double> probs) : probs_(std::move(probs)) {}
  std::size_t num_classes() const override { return probs_.size(); }
  std::vector<double> predict_proba(std::span<const double>) const override { return probs_; }

 private:
  std::vector<double> probs_;
};

class OracleTruthPredictor : public Predictor {
 public:
  explicit OracleTruthPredictor(const Oracle& oracle) : oracle_(oracle) {}
  std::size_t num_classes() const override { return oracle_.num_classes(); }
  std::vector<double> predict_proba(std::span<const double> x) const override {
    return oracle_posterior(oracle_, x);
  }

 private:
  const Oracle& oracle_;
};

std::vector<double> random_simplex(std::size_t k, RngStream& rng) {
  std::vector<double> v(k);
  double sum = 0.0;
  for (auto& x : v) {
    x = -std::log(rng.uniform_open());
    sum += x;
  }
  for (auto& x : v) x /= sum;
  return v;
}

GaussianOracle two_class_unit_gaussians(double separation) {
  return GaussianOracle(ClassPrior::uniform(2),
                        {{{-separation}, {1.0}}, {{separation}, {1.0}}});
}

}  // namespace

TEST_CASE("bayes posterior hand fixtures", "[inference]") {
  PosteriorConfig uniform3(ClassPrior::uniform(3));
  auto p = bayes_posterior(std::vector<double>{-4.0, -4.0, -4.0}, uniform3);
  for (double v : p) CHECK(v == Catch::Approx(1.0 / 3.0).margin(1e-12));

  // weights (2,1,1)/4
  auto q = bayes_posterior(std::vector<double>{std::log(2.0), 0.0, 0.0}, uniform3);
  CHECK(q[0] == Catch::Approx(0.5).margin(1e-12));
  CHECK(q[1] == Catch::Approx(0.25).margin(1e-12));
  CHECK(q[2] == Catch::Approx(0.25).margin(1e-12));

  // equal likelihoods: posterior falls back to the prior
  PosteriorConfig skew(ClassPrior({0.7, 0.2, 0.1}));
  auto r = bayes_posterior(std::vector<double>{1.3, 1.3, 1.3}, skew);
  CHECK(r[0] == Catch::Approx(0.7).margin(1e-12));
  CHECK(r[1] == Catch::Approx(0.2).margin(1e-12));
  CHECK(r[2] == Catch::Approx(0.1).margin(1e-12));
}

TEST_CASE("bayes posterior temperature asymptote", "[inference]") {
  PosteriorConfig hot(ClassPrior::uniform(3), 1e9);
  auto p = bayes_posterior(std::vector<double>{250.0, -31.0, 4.5}, hot);
  for (double v : p) CHECK(std::abs(v - 1.0 / 3.0) < 1e-6);

  // smoothing flattens monotonically (T=500 sits between T=1 and T=1e9)
  PosteriorConfig warm(ClassPrior::uniform(3), 500.0);
  auto w = bayes_posterior(std::vector<double>{250.0, -31.0, 4.5}, warm);
  PosteriorConfig cold(ClassPrior::uniform(3), 1.0);
  auto c = bayes_posterior(std::vector<double>{250.0, -31.0, 4.5}, cold);
  CHECK(w[0] < c[0]);
  CHECK(w[0] > 1.0 / 3.0);
}

TEST_CASE("bayes posterior errors", "[inference]") {
  const double ninf = -std::numeric_limits<double>::infinity();
  PosteriorConfig uniform2(ClassPrior::uniform(2));
  CHECK_THROWS_AS(bayes_posterior(std::vector<double>{ninf, ninf}, uniform2),
                  std::domain_error);
  CHECK_THROWS_AS(PosteriorConfig(ClassPrior::uniform(2), 0.0), std::invalid_argument);
  CHECK_THROWS_AS(PosteriorConfig(ClassPrior::uniform(2), -2.0), std::invalid_argument);
}

TEST_CASE("posterior invariance under loglik shifts", "[inference]") {
  RngStream rng(41, 0);
  PosteriorConfig cfg(ClassPrior({0.2, 0.5, 0.3}));
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> ll{rng.normal() * 5, rng.normal() * 5, rng.normal() * 5};
    const double c = rng.normal() * 50;
    std::vector<double> shifted = ll;
    for (auto& v : shifted) v += c;
    auto a = bayes_posterior(ll, cfg);
    auto b = bayes_posterior(shifted, cfg);
    for (std::size_t k = 0; k < 3; ++k) CHECK(std::abs(a[k] - b[k]) < 1e-12);
  }
}

TEST_CASE("entropy fixtures", "[inference]") {
  CHECK(entropy(std::vector<double>{1.0 / 3, 1.0 / 3, 1.0 / 3}) ==
        Catch::Approx(std::log(3.0)).margin(1e-12));
  CHECK(entropy(std::vector<double>{1.0, 0.0, 0.0}) == 0.0);
  // 0.5 ln 2 + 0.5 ln 4
  CHECK(entropy(std::vector<double>{0.5, 0.25, 0.25}) ==
        Catch::Approx(0.5 * std::log(2.0) + 0.5 * std::log(4.0)).margin(1e-12));
  CHECK(entropy(std::vector<double>{0.5, 0.25, 0.25}) == Catch::Approx(1.0397208).margin(1e-7));
}

TEST_CASE("kl fixtures", "[inference]") {
  CHECK(kl_divergence(std::vector<double>{0.3, 0.7}, std::vector<double>{0.3, 0.7}) ==
        Catch::Approx(0.0).margin(1e-12));
  CHECK(kl_divergence(std::vector<double>{1.0, 0.0}, std::vector<double>{0.5, 0.5}) ==
        Catch::Approx(std::log(2.0)).margin(1e-9));
  // 0.5 ln(2/3) + 0.5 ln 2
  CHECK(kl_divergence(std::vector<double>{0.5, 0.5}, std::vector<double>{0.75, 0.25}) ==
        Catch::Approx(0.1438410).margin(1e-7));
}

TEST_CASE("kl flooring flags and stays finite on zero q", "[inference]") {
  bool floored = false;
  const double kl = kl_divergence(std::vector<double>{0.5, 0.5},
                                  std::vector<double>{1.0, 0.0}, &floored);
  CHECK(floored);
  CHECK(std::isfinite(kl));
  CHECK(kl > 10.0);  // ~0.5*ln(1/1e-12)

  floored = true;
  kl_divergence(std::vector<double>{0.5, 0.5}, std::vector<double>{0.5, 0.5}, &floored);
  CHECK_FALSE(floored);
}

TEST_CASE("decomposition identity over random simplex pairs", "[inference]") {
  RngStream rng(99, 1);
  for (int rep = 0; rep < 10000; ++rep) {
    auto p = random_simplex(4, rng);
    auto q = random_simplex(4, rng);
    const double ce = cross_entropy(p, q);
    const double h = entropy(p);
    const double kl = kl_divergence(p, q);
    CHECK(std::abs(ce - (h + kl)) < 1e-10 * std::max(1.0, std::abs(ce)));
  }
}

TEST_CASE("gibbs inequality on random pairs", "[inference]") {
  RngStream rng(77, 2);
  for (int rep = 0; rep < 10000; ++rep) {
    auto p = random_simplex(3, rng);
    auto q = random_simplex(3, rng);
    const double kl = kl_divergence(p, q);
    CHECK(kl >= 0.0);
    if (kl < 1e-12) {
      for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(p[i] - q[i]) < 1e-5);
    }
  }
  CHECK(kl_divergence(std::vector<double>{0.2, 0.8}, std::vector<double>{0.2, 0.8}) < 1e-15);
}

TEST_CASE("decompose: perfect classifier has zero epistemic error", "[inference]") {
  auto oracle = two_class_unit_gaussians(1.0);
  RngStream rng(12, 0);
  auto eval = make_labeled_dataset(oracle, 500, rng);
  OracleTruthPredictor perfect(oracle);
  auto report = decompose(eval, perfect);
  CHECK(report.epistemic == Catch::Approx(0.0).margin(1e-12));
  CHECK(report.total_ce == Catch::Approx(report.aleatoric).margin(1e-12));
  CHECK(report.aleatoric > 0.0);
}

TEST_CASE("decompose: one-hot posteriors give zero aleatoric error", "[inference]") {
  std::vector<LabeledSample> eval(4);
  for (std::size_t i = 0; i < eval.size(); ++i) {
    eval[i].x = {static_cast<double>(i)};
    eval[i].y = i % 2;
    std::vector<double> onehot(2, 0.0);
    onehot[i % 2] = 1.0;
    eval[i].posterior = onehot;
  }
  TablePredictor q({{0.8, 0.2}, {0.3, 0.7}, {0.6, 0.4}, {0.5, 0.5}});
  auto report = decompose(eval, q);
  CHECK(report.aleatoric == 0.0);
  CHECK(report.total_ce == Catch::Approx(report.epistemic).margin(1e-15));
}

TEST_CASE("decompose matches independent per-sample computation", "[inference]") {
  const std::vector<std::vector<double>> ps{{0.5, 0.5},
                                            {0.9, 0.1},
                                            {0.25, 0.75},
                                            {1.0, 0.0},
                                            {0.6, 0.4}};
  const std::vector<std::vector<double>> qs{{0.5, 0.5},
                                            {0.7, 0.3},
                                            {0.1, 0.9},
                                            {0.99, 0.01},
                                            {0.4, 0.6}};
  std::vector<LabeledSample> eval(ps.size());
  for (std::size_t i = 0; i < ps.size(); ++i) {
    eval[i].x = {static_cast<double>(i)};
    eval[i].posterior = ps[i];
  }
  TablePredictor q(qs);
  auto report = decompose(eval, q);

  // brute-force scalar reference
  double want_total = 0.0, want_h = 0.0, want_kl = 0.0;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    for (std::size_t k = 0; k < 2; ++k) {
      if (ps[i][k] > 0.0) {
        want_total -= ps[i][k] * std::log(qs[i][k]);
        want_h -= ps[i][k] * std::log(ps[i][k]);
        want_kl += ps[i][k] * std::log(ps[i][k] / qs[i][k]);
      }
    }
  }
  want_total /= ps.size();
  want_h /= ps.size();
  want_kl /= ps.size();
  CHECK(std::abs(report.total_ce - want_total) < 1e-12);
  CHECK(std::abs(report.aleatoric - want_h) < 1e-12);
  CHECK(std::abs(report.epistemic - want_kl) < 1e-12);
}

TEST_CASE("decompose requires posteriors", "[inference]") {
  std::vector<LabeledSample> eval(1);
  eval[0].x = {0.0};
  TablePredictor q({{0.5, 0.5}});
  CHECK_THROWS_AS(decompose(eval, q), std::invalid_argument);
}

TEST_CASE("decompose is invariant to sharding", "[inference]") {
  auto oracle = two_class_unit_gaussians(0.8);
  RngStream rng(31, 5);
  auto eval = make_labeled_dataset(oracle, 333, rng);
  ConstPredictor q({0.6, 0.4});
  auto seq = decompose(eval, q, 1);
  auto par = decompose(eval, q, 4);
  CHECK(seq.total_ce == par.total_ce);  // bitwise: ordered reduction
  CHECK(seq.aleatoric == par.aleatoric);
  CHECK(seq.epistemic == par.epistemic);
}

TEST_CASE("aleatoric term is classifier independent", "[inference]") {
  auto oracle = two_class_unit_gaussians(0.6);
  RngStream rng(55, 3);
  auto eval = make_labeled_dataset(oracle, 400, rng);
  ConstPredictor q1({0.6, 0.4});
  ConstPredictor q2({0.1, 0.9});
  auto r1 = decompose(eval, q1);
  auto r2 = decompose(eval, q2);
  CHECK(r1.aleatoric == r2.aleatoric);  // exact equality on the same eval set
}

TEST_CASE("bayes accuracy in the separable limit", "[inference]") {
  auto oracle = two_class_unit_gaussians(10.0);
  RngStream rng(61, 0);
  auto stats = bayes_accuracy(oracle, 100000, rng);
  CHECK(stats.bayes_err < 1e-6);
  CHECK(stats.aleatoric_floor < 1e-6);
}

TEST_CASE("bayes accuracy with identical components", "[inference]") {
  GaussianOracle oracle(ClassPrior({0.6, 0.4}), {{{0.0}, {1.0}}, {{0.0}, {1.0}}});
  RngStream rng(62, 0);
  auto stats = bayes_accuracy(oracle, 20000, rng);
  CHECK(stats.bayes_acc == Catch::Approx(0.6).margin(1e-9));
  CHECK(stats.aleatoric_floor ==
        Catch::Approx(-(0.6 * std::log(0.6) + 0.4 * std::log(0.4))).margin(1e-9));
}

TEST_CASE("two-class gaussian closed forms", "[inference]") {
  // N(-1,1) vs N(+1,1): p(class1|x) = sigmoid(2x); bayes_err = Phi(-1)
  auto oracle = two_class_unit_gaussians(1.0);
  for (int i = 0; i <= 100; ++i) {
    const double x = -5.0 + 0.1 * i;
    auto post = oracle_posterior(oracle, std::vector<double>{x});
    const double want = 1.0 / (1.0 + std::exp(-2.0 * x));
    CHECK(std::abs(post[1] - want) < 1e-9);
  }

  RngStream rng(63, 0);
  auto stats = bayes_accuracy(oracle, 100000, rng);
  const double phi_m1 = 0.5 * std::erfc(1.0 / std::sqrt(2.0));
  CHECK(std::abs(stats.bayes_err - phi_m1) < 3.0 * stats.se_acc);

  // cross-check the floor against 1D quadrature of the mixture conditional entropy
  auto integrand = [&](double x) {
    const double mix = 0.5 * std::exp(-0.5 * (x + 1) * (x + 1)) / std::sqrt(2 * M_PI) +
                       0.5 * std::exp(-0.5 * (x - 1) * (x - 1)) / std::sqrt(2 * M_PI);
    const double p1 = 1.0 / (1.0 + std::exp(-2.0 * x));
    double h = 0.0;
    if (p1 > 0 && p1 < 1) h = -(p1 * std::log(p1) + (1 - p1) * std::log(1 - p1));
    return mix * h;
  };
  const double floor_quad = testutil::trapezoid(integrand, -9.0, 9.0, 4000);
  CHECK(std::abs(stats.aleatoric_floor - floor_quad) < 3.0 * stats.se_floor);
}

TEST_CASE("mutual information limits", "[inference]") {
  GaussianOracle same(ClassPrior::uniform(3),
                      {{{0.0}, {1.0}}, {{0.0}, {1.0}}, {{0.0}, {1.0}}});
  RngStream rng(64, 0);
  auto mi0 = mutual_information(same, 5000, rng);
  CHECK(std::abs(mi0.mi_bits) < 1e-9);
  CHECK(std::abs(mi0.nmi) < 1e-9);

  GaussianOracle sep(ClassPrior::uniform(3),
                     {{{-50.0}, {1.0}}, {{0.0}, {1.0}}, {{50.0}, {1.0}}});
  auto mi1 = mutual_information(sep, 5000, rng);
  CHECK(mi1.mi_bits == Catch::Approx(std::log2(3.0)).margin(1e-6));
  CHECK(mi1.nmi == Catch::Approx(1.0).margin(1e-6));

  // N(-1,1) vs N(+1,1): MI matches quadrature within MC error
  auto overlap = two_class_unit_gaussians(1.0);
  auto mi2 = mutual_information(overlap, 100000, rng);
  auto integrand = [&](double x) {
    const double mix = 0.5 * std::exp(-0.5 * (x + 1) * (x + 1)) / std::sqrt(2 * M_PI) +
                       0.5 * std::exp(-0.5 * (x - 1) * (x - 1)) / std::sqrt(2 * M_PI);
    const double p1 = 1.0 / (1.0 + std::exp(-2.0 * x));
    double h = 0.0;
    if (p1 > 0 && p1 < 1) h = -(p1 * std::log(p1) + (1 - p1) * std::log(1 - p1));
    return mix * h;
  };
  const double cond_h = testutil::trapezoid(integrand, -9.0, 9.0, 4000);
  const double want_bits = (std::log(2.0) - cond_h) / std::log(2.0);
  CHECK(std::abs(mi2.mi_bits - want_bits) < 3.0 * mi2.se_bits);
}

TEST_CASE("decomposition report serializes its summary fields", "[inference]") {
  auto oracle = two_class_unit_gaussians(0.7);
  RngStream rng(65, 0);
  auto eval = make_labeled_dataset(oracle, 100, rng);
  OracleTruthPredictor perfect(oracle);
  auto j = decompose(eval, perfect).to_json();
  CHECK(j.at("n").get<std::size_t>() == 100);
  for (const char* key : {"total_ce", "aleatoric", "epistemic", "se_aleatoric", "se_epistemic"})
    CHECK(j.contains(key));
}
