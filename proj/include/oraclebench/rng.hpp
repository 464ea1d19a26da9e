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
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "oraclebench/common.hpp"

namespace oraclebench {

/// Counter-based deterministic RNG. Output i of stream (seed, stream_id) is a
/// fixed mixing function of (seed, stream_id, i), so replay never depends on
/// scheduling and distinct stream ids never share state. Scheme id:
/// kRngSchemeId.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id)
      : seed_(seed), stream_(stream_id) {
    base_ = mix(mix(seed + 0x9e3779b97f4a7c15ULL) ^
                mix(stream_id + 0xbf58476d1ce4e5b9ULL));
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_; }

  std::uint64_t next_u64() { return mix(base_ + (++counter_) * 0x9e3779b97f4a7c15ULL); }

  /// Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform in (0, 1]; safe under log().
  double uniform_open() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; the second draw of each pair is cached.
  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    const double u1 = uniform_open();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    cached_ = r * std::sin(theta);
    have_cached_ = true;
    return r * std::cos(theta);
  }

  std::vector<double> normal_vec(std::size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) x = normal();
    return v;
  }

  /// Index draw from an unnormalized nonnegative weight vector.
  std::size_t categorical(std::span<const double> weights) {
    require(!weights.empty(), "categorical: empty weight vector");
    double total = 0.0;
    for (double w : weights) {
      require(w >= 0.0, "categorical: negative weight");
      total += w;
    }
    require(total > 0.0, "categorical: weights sum to zero");
    double u = uniform() * total;
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < weights.size(); ++k) {
      acc += weights[k];
      if (u < acc) return k;
    }
    return weights.size() - 1;
  }

  /// n distinct indices drawn uniformly from [0, pool), in draw order.
  std::vector<std::size_t> sample_without_replacement(std::size_t pool, std::size_t n) {
    require(n <= pool, "sample_without_replacement: n exceeds pool size");
    std::vector<std::size_t> idx(pool);
    for (std::size_t i = 0; i < pool; ++i) idx[i] = i;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t j = i + static_cast<std::size_t>(next_u64() % (pool - i));
      std::swap(idx[i], idx[j]);
    }
    idx.resize(n);
    return idx;
  }

  /// Derived stream, statistically independent of the parent.
  RngStream substream(std::uint64_t id) const { return RngStream(base_, id); }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_ = 0;
  std::uint64_t stream_ = 0;
  std::uint64_t base_ = 0;
  std::uint64_t counter_ = 0;
  double cached_ = 0.0;
  bool have_cached_ = false;
};

}  // namespace oraclebench
