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
#include <span>
#include <utility>
#include <vector>

#include "oraclebench/common.hpp"

namespace oraclebench {

struct OlsFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;  // defined as 0 for a zero-variance response
  double stderr_slope = 0.0;
  std::size_t n = 0;
};

inline OlsFit ols(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size() && x.size() >= 2, "ols: need >= 2 paired points");
  OlsFit fit;
  fit.n = x.size();
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  require(sxx > 0.0, "ols: regressor has zero variance");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ssr = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double resid = y[i] - (fit.slope * x[i] + fit.intercept);
    ssr += resid * resid;
  }
  fit.r2 = syy > 0.0 ? 1.0 - ssr / syy : 0.0;
  if (x.size() > 2) fit.stderr_slope = std::sqrt(ssr / (n - 2.0) / sxx);
  return fit;
}

/// value ~ c * N^(-alpha), fitted by OLS of ln(value) on ln(N).
struct PowerLawFit {
  double alpha = 0.0;
  double c = 0.0;
  double r2 = 0.0;
  double stderr_alpha = 0.0;
  std::size_t n_points = 0;
};

inline PowerLawFit fit_power_law(std::span<const std::pair<double, double>> points) {
  require(points.size() >= 3, "fit_power_law: need >= 3 points");
  std::vector<double> lx(points.size()), ly(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    require(points[i].first > 0.0, "fit_power_law: N must be positive");
    require(points[i].second > 0.0,
            "fit_power_law: values must be strictly positive (floor or exclude first)");
    lx[i] = std::log(points[i].first);
    ly[i] = std::log(points[i].second);
  }
  const OlsFit f = ols(lx, ly);
  PowerLawFit out;
  out.alpha = -f.slope;
  out.c = std::exp(f.intercept);
  out.r2 = f.r2;
  out.stderr_alpha = f.stderr_slope;
  out.n_points = points.size();
  return out;
}

}  // namespace oraclebench
