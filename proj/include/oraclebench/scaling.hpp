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

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "oraclebench/classifier.hpp"
#include "oraclebench/oracle.hpp"
#include "oraclebench/posterior.hpp"
#include "oraclebench/powerlaw.hpp"

namespace oraclebench {

inline constexpr double kEpistemicFitFloor = 1e-8;  // saturated cells are excluded, not floored

struct ScalingGrid {
  std::vector<std::size_t> sizes;  // strictly increasing, each >= 2*K
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  std::string variant = "mlp_64x64_tanh";
  std::size_t eval_size = 2000;
  std::uint64_t eval_seed = 1000;
  TrainSpec train;

  // scaling cells train on the generating class labels (posterior draws),
  // so more data always moves q toward the true posterior
  ScalingGrid() { train.hard_label_source = HardLabelSource::kRawClass; }
};

struct ScalingRow {
  std::string variant;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  double total_ce = 0.0;
  double aleatoric = 0.0;
  double epistemic = 0.0;
  double accuracy = 0.0;
  double ece = 0.0;
  double expected_acc = 0.0;  // for Bayes-bound audits; not a CSV column
  bool failed = false;
  std::string error;
};

struct ScalingResult {
  std::vector<ScalingRow> rows;  // canonical order: size outer, seed inner
  PowerLawFit fit;
  bool fit_valid = false;
  std::vector<std::pair<double, double>> fit_points;
  std::vector<std::pair<std::size_t, std::uint64_t>> excluded;  // epistemic < floor
  BayesStats bayes;  // on the shared eval set
};

/// Alternative classifier source for a grid cell (the default trains an MLP
/// per grid.train). Used to inject reference predictors in tests.
using TrainerFn = std::function<std::unique_ptr<Predictor>(
    std::span<const LabeledSample>, const TrainSpec&, std::uint64_t seed)>;

inline void validate_grid(const ScalingGrid& grid, std::size_t num_classes) {
  require(!grid.sizes.empty(), "ScalingGrid: empty size list");
  require(!grid.seeds.empty(), "ScalingGrid: empty seed list");
  for (std::size_t i = 0; i < grid.sizes.size(); ++i) {
    require(grid.sizes[i] >= 2 * num_classes, "ScalingGrid: sizes must be >= 2*K");
    if (i > 0) require(grid.sizes[i] > grid.sizes[i - 1], "ScalingGrid: sizes must increase");
  }
}

/// For each (N, seed): train on N fresh oracle draws and decompose the error
/// on one fixed eval set shared across every cell, which makes the aleatoric
/// column constant by construction. The per-seed epistemic series feeds the
/// power-law fit.
inline ScalingResult run_scaling(const Oracle& oracle, const ScalingGrid& grid, int jobs = 1,
                                 TrainerFn trainer = {}) {
  require(oracle.frozen(), "run_scaling: oracle must be frozen");
  validate_grid(grid, oracle.num_classes());

  RngStream eval_rng(grid.eval_seed, fnv1a64("scaling-eval"));
  const std::vector<LabeledSample> eval_set =
      make_labeled_dataset(oracle, grid.eval_size, eval_rng);

  ScalingResult result;
  result.bayes = bayes_stats_on(oracle, eval_set);
  const std::size_t n_cells = grid.sizes.size() * grid.seeds.size();
  result.rows.resize(n_cells);

  parallel_for(n_cells, jobs, [&](std::size_t cell) {
    const std::size_t ni = cell / grid.seeds.size();
    const std::size_t si = cell % grid.seeds.size();
    const std::size_t n = grid.sizes[ni];
    const std::uint64_t seed = grid.seeds[si];

    ScalingRow row;
    row.variant = grid.variant;
    row.n = n;
    row.seed = seed;
    try {
      RngStream rng(seed, fnv1a64("scaling|" + grid.variant + "|" + std::to_string(n) + "|" +
                                  std::to_string(seed)));
      const std::vector<LabeledSample> train_data = make_labeled_dataset(oracle, n, rng);

      TrainSpec spec = grid.train;
      spec.seed = rng.substream(fnv1a64("train-seed")).next_u64();
      std::unique_ptr<Predictor> model;
      if (trainer) {
        model = trainer(train_data, spec, spec.seed);
      } else {
        model = std::make_unique<SoftmaxClassifier>(
            train_classifier(train_data, oracle.dim(), oracle.num_classes(), spec));
      }

      const DecompositionReport report = decompose(eval_set, *model);
      row.total_ce = report.total_ce;
      row.aleatoric = report.aleatoric;
      row.epistemic = report.epistemic;
      row.accuracy = hard_accuracy(*model, eval_set);
      row.ece = expected_calibration_error(*model, eval_set);
      row.expected_acc = expected_accuracy(*model, eval_set);
    } catch (const std::exception& e) {
      row.failed = true;
      row.error = e.what();
    }
    result.rows[cell] = std::move(row);
  });

  for (const auto& row : result.rows) {
    if (row.failed) continue;
    if (row.epistemic < kEpistemicFitFloor) {
      result.excluded.emplace_back(row.n, row.seed);
    } else {
      result.fit_points.emplace_back(static_cast<double>(row.n), row.epistemic);
    }
  }
  if (result.fit_points.size() >= 3) {
    result.fit = fit_power_law(result.fit_points);
    result.fit_valid = true;
  }
  return result;
}

}  // namespace oraclebench
