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
#include <numbers>
#include <span>
#include <vector>

#include "oraclebench/common.hpp"

namespace oraclebench {

inline constexpr double kLn2Pi = 1.8378770664093453;  // ln(2*pi)

/// log sum exp with max shift; entries may be -inf but not all of them.
inline double log_sum_exp(std::span<const double> v) {
  require_domain(!v.empty(), "log_sum_exp: empty input");
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) {
    require_domain(!(std::isnan(x)) && x < std::numeric_limits<double>::infinity(),
                   "log_sum_exp: entries must be finite or -inf");
    m = std::max(m, x);
  }
  require_domain(std::isfinite(m), "log_sum_exp: all entries are -inf");
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

inline double log_sum_exp(const std::vector<double>& v) {
  return log_sum_exp(std::span<const double>(v));
}

/// Stable softmax; output sums to 1 and lies in [0,1] entrywise.
inline std::vector<double> softmax(std::span<const double> v) {
  require_domain(!v.empty(), "softmax: empty input");
  const double z = log_sum_exp(v);
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::exp(v[i] - z);
  return out;
}

/// ln(1 + e^x) without overflow.
inline double log1pexp(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// Diagonal-normal log density.
inline double diag_normal_logpdf(std::span<const double> x, std::span<const double> mean,
                                 std::span<const double> var) {
  require(x.size() == mean.size() && x.size() == var.size(),
          "diag_normal_logpdf: dimension mismatch");
  double ll = 0.0;
  for (std::size_t d = 0; d < x.size(); ++d) {
    const double diff = x[d] - mean[d];
    ll += -0.5 * (diff * diff / var[d] + std::log(var[d]) + kLn2Pi);
  }
  return ll;
}

inline double std_normal_logpdf(double z) { return -0.5 * (z * z + kLn2Pi); }

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;  // population std over the values
  double se = 0.0;      // standard error of the mean
  std::size_t n = 0;
};

inline MeanStd mean_std(std::span<const double> v) {
  MeanStd r;
  r.n = v.size();
  if (v.empty()) return r;
  double s = 0.0;
  for (double x : v) s += x;
  r.mean = s / static_cast<double>(v.size());
  double q = 0.0;
  for (double x : v) q += (x - r.mean) * (x - r.mean);
  r.stddev = std::sqrt(q / static_cast<double>(v.size()));
  r.se = v.size() > 1 ? std::sqrt(q / static_cast<double>(v.size() - 1)) /
                            std::sqrt(static_cast<double>(v.size()))
                      : 0.0;
  return r;
}

inline double percentile(std::vector<double> v, double p) {
  require(!v.empty(), "percentile: empty input");
  require(p >= 0.0 && p <= 100.0, "percentile: p out of range");
  std::sort(v.begin(), v.end());
  const double pos = p / 100.0 * static_cast<double>(v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] * (1.0 - frac) + v[hi] * frac;
}

}  // namespace oraclebench
