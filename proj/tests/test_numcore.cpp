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

#include "oraclebench/autodiff.hpp"
#include "oraclebench/math.hpp"
#include "oraclebench/optim.hpp"
#include "oraclebench/rng.hpp"
#include "oraclebench/tensor.hpp"
#include "support/test_util.hpp"

using namespace oraclebench;

TEST_CASE("log_sum_exp basic values", "[numcore]") {
  CHECK(log_sum_exp(std::vector<double>{0, 0, 0}) == Catch::Approx(std::log(3.0)).epsilon(1e-12));
  CHECK(log_sum_exp(std::vector<double>{-3.25}) == Catch::Approx(-3.25).margin(0));
  // max-shift identity: lse(1000,1000) = 1000 + lse(0,0)
  CHECK(log_sum_exp(std::vector<double>{1000, 1000}) ==
        Catch::Approx(1000.0 + std::log(2.0)).margin(1e-9));
}

TEST_CASE("log_sum_exp error and -inf handling", "[numcore]") {
  const double ninf = -std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(log_sum_exp(std::vector<double>{}), std::domain_error);
  CHECK_THROWS_AS(log_sum_exp(std::vector<double>{ninf, ninf}), std::domain_error);
  CHECK(log_sum_exp(std::vector<double>{0.0, ninf}) == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("log_sum_exp shift invariance", "[numcore]") {
  RngStream rng(7, 1);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> v(5);
    for (auto& x : v) x = rng.normal() * 10.0;
    const double c = rng.normal() * 100.0;
    std::vector<double> shifted = v;
    for (auto& x : shifted) x += c;
    CHECK(std::abs(log_sum_exp(shifted) - (log_sum_exp(v) + c)) < 1e-12 * std::max(1.0, std::abs(c)));
  }
}

TEST_CASE("softmax lies on the simplex", "[numcore]") {
  RngStream rng(11, 0);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> v(4);
    for (auto& x : v) x = rng.normal() * 50.0;
    auto p = softmax(v);
    double s = 0.0;
    for (double x : p) {
      CHECK(x >= 0.0);
      CHECK(x <= 1.0);
      s += x;
    }
    CHECK(std::abs(s - 1.0) < 1e-12);
  }
}

TEST_CASE("rng replay is bitwise identical", "[numcore]") {
  RngStream a(123, 45);
  RngStream b(123, 45);
  for (int i = 0; i < 1000; ++i) {
    REQUIRE(a.next_u64() == b.next_u64());
  }
  RngStream c(123, 45), d(123, 45);
  for (int i = 0; i < 1000; ++i) {
    double x = c.normal(), y = d.normal();
    REQUIRE(std::memcmp(&x, &y, sizeof(double)) == 0);
  }
}

TEST_CASE("distinct streams differ", "[numcore]") {
  RngStream a(123, 0);
  RngStream b(123, 1);
  int same = 0;
  for (int i = 0; i < 64; ++i)
    if (a.next_u64() == b.next_u64()) ++same;
  CHECK(same == 0);
}

TEST_CASE("rng uniform moments", "[numcore]") {
  RngStream rng(5, 9);
  double s = 0, s2 = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    double u = rng.uniform();
    s += u;
    s2 += u * u;
  }
  CHECK(s / n == Catch::Approx(0.5).margin(0.005));
  CHECK(s2 / n - (s / n) * (s / n) == Catch::Approx(1.0 / 12.0).margin(0.002));
}

TEST_CASE("tensor rejects bad shapes and non-finite data", "[numcore]") {
  CHECK_THROWS_AS(Tensor({2, 2}, {1, 2, 3}), std::invalid_argument);
  CHECK_THROWS_AS(Tensor({2}, {1.0, std::numeric_limits<double>::quiet_NaN()}),
                  std::runtime_error);
}

TEST_CASE("graph ops hard-fail on non-finite results", "[numcore]") {
  Graph g;
  auto x = g.leaf(Tensor({1, 1}, {-1.0}));
  CHECK_THROWS_AS(g.log(x), std::runtime_error);
  auto big = g.leaf(Tensor({1, 1}, {1e308}));
  CHECK_THROWS_AS(g.exp(big), std::runtime_error);
}

TEST_CASE("backward product rule", "[numcore]") {
  Graph g;
  auto x = g.leaf(Tensor({1, 1}, {3.0}), true);
  auto y = g.leaf(Tensor({1, 1}, {2.0}), true);
  auto root = g.sum(g.mul(x, y));
  g.backward(root);
  CHECK(g.adjoint(x)[0] == Catch::Approx(2.0).margin(0));
  CHECK(g.adjoint(y)[0] == Catch::Approx(3.0).margin(0));
}

TEST_CASE("backward requires scalar root", "[numcore]") {
  Graph g;
  auto x = g.leaf(Tensor({1, 2}, {1.0, 2.0}));
  CHECK_THROWS_AS(g.backward(x), std::invalid_argument);
}

TEST_CASE("sum of softmax has zero gradient", "[numcore]") {
  Graph g;
  auto v = g.leaf(Tensor({1, 4}, {0.3, -1.2, 2.0, 0.0}), true);
  auto lp = log_softmax_rows(g, v);
  auto root = g.sum(g.exp(lp));
  CHECK(g.value(root)[0] == Catch::Approx(1.0).margin(1e-12));
  g.backward(root);
  for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(g.adjoint(v)[i]) < 1e-12);
}

namespace {

// Builds a three-layer composition mixing the op set, driven by a seed;
// returns the scalar root. Inputs are kept away from the relu kink.
double random_graph_value(const std::vector<double>& flat, std::uint64_t seed, Graph* out_g,
                          Graph::NodeId* out_leaf) {
  Graph local;
  Graph& g = out_g ? *out_g : local;
  RngStream rng(seed, 77);
  Tensor x({2, 3}, std::vector<double>(flat.begin(), flat.begin() + 6));
  auto in = g.leaf(x, true);
  if (out_leaf) *out_leaf = in;

  Tensor w1v({3, 4}), b1v({4});
  for (auto& v : w1v.data()) v = rng.normal() * 0.7;
  for (auto& v : b1v.data()) v = rng.normal() * 0.2;
  auto h1 = g.tanh(linear(g, in, g.leaf(w1v), g.leaf(b1v)));

  auto branch = static_cast<int>(rng.next_u64() % 3);
  Graph::NodeId h2;
  if (branch == 0) {
    h2 = g.softplus(h1);
  } else if (branch == 1) {
    h2 = g.mul(h1, g.exp(scale_by(g, h1, 0.5)));
  } else {
    auto shiftv = Tensor::full({4}, 2.5);
    auto scalev = Tensor::full({4}, 1.0);
    h2 = g.log(g.affine_broadcast(g.softplus(h1), g.leaf(scalev), g.leaf(shiftv)));
  }

  Tensor w2v({4, 2});
  for (auto& v : w2v.data()) v = rng.normal() * 0.5;
  auto h3 = g.matmul(h2, g.leaf(w2v));
  auto root = (rng.next_u64() % 2) ? g.mean(g.relu(h3)) : g.sum(g.tanh(h3));
  return g.value(root)[0];
}

}  // namespace

TEST_CASE("autodiff matches central finite differences on random graphs", "[numcore]") {
  RngStream rng(2024, 3);
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> flat(6);
    // keep relu inputs clear of the kink
    for (auto& v : flat) {
      v = rng.normal();
      if (std::abs(v) < 1e-2) v += v < 0 ? -0.05 : 0.05;
    }
    const std::uint64_t seed = 9000 + rep;

    Graph g;
    Graph::NodeId leaf_id = -1;
    random_graph_value(flat, seed, &g, &leaf_id);
    Graph::NodeId root = static_cast<Graph::NodeId>(g.size()) - 1;
    g.backward(root);

    auto f = [&](std::vector<double> xs) { return random_graph_value(xs, seed, nullptr, nullptr); };
    for (std::size_t i = 0; i < flat.size(); ++i) {
      const double fd = testutil::central_diff(f, flat, i, 1e-5);
      const double ad = g.adjoint(leaf_id)[i];
      const double err = std::abs(ad - fd) / std::max(1.0, std::abs(fd));
      worst = std::max(worst, err);
    }
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("adam converges on a quadratic", "[numcore]") {
  Tensor w({2}, {5.0, -3.0});
  Adam opt(0.05);
  for (int i = 0; i < 2000; ++i) {
    Tensor grad({2}, {2.0 * (w[0] - 1.0), 2.0 * (w[1] + 2.0)});
    std::vector<Tensor*> ps{&w};
    std::vector<const Tensor*> gs{&grad};
    opt.step(ps, gs);
  }
  CHECK(w[0] == Catch::Approx(1.0).margin(1e-3));
  CHECK(w[1] == Catch::Approx(-2.0).margin(1e-3));
}

TEST_CASE("percentile and mean_std helpers", "[numcore]") {
  std::vector<double> v{4, 1, 3, 2};
  CHECK(percentile(v, 0) == Catch::Approx(1.0));
  CHECK(percentile(v, 100) == Catch::Approx(4.0));
  CHECK(percentile(v, 50) == Catch::Approx(2.5));
  auto ms = mean_std(std::vector<double>{1, 2, 3, 4});
  CHECK(ms.mean == Catch::Approx(2.5));
  CHECK(ms.stddev == Catch::Approx(std::sqrt(1.25)));
}
