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

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "oraclebench/config.hpp"
#include "oraclebench/csv.hpp"
#include "oraclebench/flow.hpp"
#include "oraclebench/manifest.hpp"
#include "oraclebench/svg.hpp"

namespace oraclebench {

namespace detail {

inline double wall_ms_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
      .count();
}

struct RunContext {
  std::filesystem::path out_dir;
  std::filesystem::path config_dir;
  nlohmann::json config;
  std::string command;
  int jobs = 1;
  std::uint64_t seed_offset = 0;
  RunManifest manifest;

  std::vector<std::uint64_t> seeds(StrictObject& obj) {
    auto s = obj.get_or<std::vector<std::uint64_t>>("seeds", {1, 2, 3});
    if (s.empty()) throw ConfigError("config: seeds must be non-empty");
    for (auto& v : s) v += seed_offset;
    manifest.seeds = s;
    return s;
  }

  void write(const std::string& name, const std::string& content) {
    write_file_atomic(out_dir / name, content);
  }

  void finish(double total_ms) {
    manifest.command = command;
    manifest.cfg_hash = config_hash(config);
    manifest.total_wall_ms = total_ms;
    write("manifest.json", manifest.to_json().dump(2) + "\n");
  }
};

// ---- scaling / softlabels ----

inline void emit_scaling_artifacts(RunContext& ctx, const std::vector<ScalingResult>& results,
                                   const std::vector<std::string>& variant_names,
                                   const std::string& csv_name, const std::string& svg_title) {
  CsvWriter csv({"variant", "n", "seed", "total_ce", "aleatoric", "epistemic", "accuracy",
                 "ece"});
  for (const auto& res : results)
    for (const auto& row : res.rows) {
      if (row.failed) continue;
      csv.row({row.variant, row.n, row.seed, row.total_ce, row.aleatoric, row.epistemic,
               row.accuracy, row.ece});
    }
  ctx.write(csv_name, csv.str());

  nlohmann::json fits = nlohmann::json::object();
  for (std::size_t vi = 0; vi < results.size(); ++vi) {
    const ScalingResult& res = results[vi];
    nlohmann::json f;
    f["valid"] = res.fit_valid;
    if (res.fit_valid) {
      f["alpha"] = res.fit.alpha;
      f["c"] = res.fit.c;
      f["r2"] = res.fit.r2;
      f["stderr_alpha"] = res.fit.stderr_alpha;
      f["points_used"] = res.fit.n_points;
    }
    nlohmann::json excluded = nlohmann::json::array();
    for (const auto& [n, seed] : res.excluded)
      excluded.push_back({{"n", n}, {"seed", seed}});
    f["excluded"] = excluded;
    f["aleatoric_floor"] = res.rows.empty() ? 0.0 : res.rows[0].aleatoric;
    f["bayes_acc"] = res.bayes.bayes_acc;
    fits[variant_names[vi]] = f;
  }
  ctx.write("fit.json", fits.dump(2) + "\n");

  PlotSpec plot;
  plot.title = svg_title;
  plot.x_label = "training set size N";
  plot.y_label = "epistemic KL (nats)";
  plot.log_x = true;
  plot.log_y = true;
  bool any_points = false;
  for (std::size_t vi = 0; vi < results.size(); ++vi) {
    PlotSeries series;
    series.name = variant_names[vi];
    series.draw_line = false;
    for (const auto& row : results[vi].rows)
      if (!row.failed && row.epistemic > 0.0)
        series.points.emplace_back(static_cast<double>(row.n), row.epistemic);
    any_points |= !series.points.empty();
    plot.series.push_back(std::move(series));
  }
  if (results.size() == 1 && results[0].fit_valid) {
    // ln y = ln c - alpha ln N  ->  log10 y = log10 c - alpha log10 N
    plot.fit_intercept_slope = {std::log10(results[0].fit.c), -results[0].fit.alpha};
    plot.annotation = format_alpha_annotation(results[0].fit.alpha);
  }
  if (any_points) ctx.write("loglog.svg", emit_svg(plot));
}

inline int run_scaling_command(RunContext& ctx) {
  StrictObject obj(ctx.config, "$");
  auto oracle = oracle_from_config(obj.at("oracle"), "$.oracle", ctx.config_dir);
  ScalingGrid grid;
  grid.sizes = obj.get<std::vector<std::size_t>>("sizes");
  grid.seeds = ctx.seeds(obj);
  grid.variant = obj.get_or<std::string>("variant", grid.variant);
  grid.eval_size = obj.get_or<std::size_t>("eval_size", grid.eval_size);
  grid.eval_seed = obj.get_or<std::uint64_t>("eval_seed", grid.eval_seed);
  if (obj.has("train"))
    grid.train = train_spec_from_config(obj.at("train"), "$.train", grid.train);
  obj.done();

  const auto t0 = std::chrono::steady_clock::now();
  const ScalingResult res = run_scaling(*oracle, grid, ctx.jobs);
  bool any_failed = false;
  for (const auto& row : res.rows) {
    ManifestCell cell;
    cell.id = grid.variant + "|" + std::to_string(row.n) + "|" + std::to_string(row.seed);
    cell.status = row.failed ? "failed: " + row.error : "ok";
    any_failed |= row.failed;
    ctx.manifest.cells.push_back(cell);
  }
  emit_scaling_artifacts(ctx, {res}, {grid.variant}, "scaling.csv", "epistemic scaling");
  ctx.finish(detail::wall_ms_since(t0));
  if (any_failed) {
    for (const auto& cell : ctx.manifest.cells)
      if (cell.status != "ok") std::cerr << "cell " << cell.id << " " << cell.status << "\n";
    return 1;
  }
  return 0;
}

inline int run_softlabels_command(RunContext& ctx) {
  StrictObject obj(ctx.config, "$");
  auto oracle = oracle_from_config(obj.at("oracle"), "$.oracle", ctx.config_dir);
  ScalingGrid grid;
  grid.sizes = obj.get<std::vector<std::size_t>>("sizes");
  grid.seeds = ctx.seeds(obj);
  grid.eval_size = obj.get_or<std::size_t>("eval_size", grid.eval_size);
  grid.eval_seed = obj.get_or<std::uint64_t>("eval_seed", grid.eval_seed);
  if (obj.has("train"))
    grid.train = train_spec_from_config(obj.at("train"), "$.train", grid.train);
  obj.done();

  const auto t0 = std::chrono::steady_clock::now();
  std::vector<ScalingResult> results;
  std::vector<std::string> names;
  for (LabelMode mode : {LabelMode::kSoft, LabelMode::kHard}) {
    ScalingGrid g = grid;
    g.train.label_mode = mode;
    // the hard arm of the comparison uses argmax relabeling
    g.train.hard_label_source = HardLabelSource::kArgmaxPosterior;
    g.variant = mode == LabelMode::kSoft ? "soft" : "hard";
    names.push_back(g.variant);
    results.push_back(run_scaling(*oracle, g, ctx.jobs));
  }
  bool any_failed = false;
  for (const auto& res : results)
    for (const auto& row : res.rows) {
      ManifestCell cell;
      cell.id = row.variant + "|" + std::to_string(row.n) + "|" + std::to_string(row.seed);
      cell.status = row.failed ? "failed: " + row.error : "ok";
      any_failed |= row.failed;
      ctx.manifest.cells.push_back(cell);
    }
  emit_scaling_artifacts(ctx, results, names, "softlabels.csv", "soft vs hard labels");
  ctx.finish(detail::wall_ms_since(t0));
  return any_failed ? 1 : 0;
}

// ---- shift ----

inline int run_shift_command(RunContext& ctx) {
  StrictObject obj(ctx.config, "$");
  auto oracle = oracle_from_config(obj.at("oracle"), "$.oracle", ctx.config_dir);

  std::vector<ShiftConfig> configs;
  const nlohmann::json& cfg_list = obj.at("configs");
  if (!cfg_list.is_array() || cfg_list.empty())
    throw ConfigError("config: 'configs' must be a non-empty array");
  for (std::size_t i = 0; i < cfg_list.size(); ++i) {
    StrictObject c(cfg_list[i], "$.configs[" + std::to_string(i) + "]");
    ShiftConfig sc;
    sc.label = c.get<std::string>("label");
    sc.pi = prior_from_config(c.at("pi"), c.child_path("pi"));
    sc.sigma = c.get_or<double>("sigma", 0.0);
    sc.n_train = c.get_or<std::size_t>("n_train", 5000);
    c.done();
    configs.push_back(std::move(sc));
  }

  ShiftProtocol protocol;
  protocol.seeds = ctx.seeds(obj);
  protocol.eval_size = obj.get_or<std::size_t>("eval_size", protocol.eval_size);
  protocol.eval_seed = obj.get_or<std::uint64_t>("eval_seed", protocol.eval_seed);
  protocol.n_mc = obj.get_or<std::size_t>("n_mc", protocol.n_mc);
  if (obj.has("train")) protocol.train = train_spec_from_config(obj.at("train"), "$.train");
  obj.done();

  const auto t0 = std::chrono::steady_clock::now();
  const ShiftSuiteResult res = run_shift_suite(*oracle, configs, protocol, ctx.jobs);

  CsvWriter cell_csv({"label", "sigma", "seed", "kl_y_target", "kl_y_empirical", "test_acc",
                      "delta_acc_pp"});
  for (const auto& row : res.rows) {
    cell_csv.row({row.label, row.sigma, row.seed, row.kl_y_target, row.kl_y_empirical,
                  row.test_acc, row.delta_acc_pp});
    ctx.manifest.cells.push_back({row.label + "|" + std::to_string(row.seed), "ok", 0.0});
  }
  ctx.write("shift.csv", cell_csv.str());

  CsvWriter summary_csv({"label", "sigma", "kl_y_target", "kl_y_emp_mean", "kl_y_emp_std",
                         "kl_mc", "kl_mc_se", "kl_mc_intractable", "test_acc_mean",
                         "test_acc_std", "delta_acc_pp"});
  for (const auto& row : res.summary) {
    summary_csv.row({row.label, row.sigma, row.kl_y_target, row.kl_y_emp_mean,
                     row.kl_y_emp_std, row.kl_mc, row.kl_mc_se, row.kl_mc_intractable,
                     row.test_acc_mean, row.test_acc_std, row.delta_acc_pp});
  }
  ctx.write("shift_summary.csv", summary_csv.str());

  nlohmann::json reg{{"slope", res.regression.slope},
                     {"intercept", res.regression.intercept},
                     {"r2", res.regression.r2},
                     {"n", res.regression.n}};
  ctx.write("shift_regression.json", reg.dump(2) + "\n");

  PlotSpec plot;
  plot.title = "accuracy drop vs full-distribution KL";
  plot.x_label = "KL (nats)";
  plot.y_label = "delta accuracy (pp)";
  PlotSeries prior_pts{"prior shift", {}, false};
  PlotSeries noise_pts{"covariate noise", {}, false};
  for (const auto& row : res.summary) {
    (row.sigma == 0.0 ? prior_pts : noise_pts).points.emplace_back(row.kl_mc, row.delta_acc_pp);
  }
  plot.series.push_back(std::move(prior_pts));
  plot.series.push_back(std::move(noise_pts));
  ctx.write("shift.svg", emit_svg(plot));

  ctx.finish(detail::wall_ms_since(t0));
  return 0;
}

// ---- active learning ----

inline int run_active_command(RunContext& ctx) {
  StrictObject obj(ctx.config, "$");
  auto oracle = oracle_from_config(obj.at("oracle"), "$.oracle", ctx.config_dir);
  ALConfig cfg;
  cfg.pool_size = obj.get_or<std::size_t>("pool_size", cfg.pool_size);
  cfg.init_labeled = obj.get_or<std::size_t>("init_labeled", cfg.init_labeled);
  cfg.batch = obj.get_or<std::size_t>("batch", cfg.batch);
  cfg.rounds = obj.get_or<std::size_t>("rounds", cfg.rounds);
  cfg.seeds = ctx.seeds(obj);
  cfg.eval_size = obj.get_or<std::size_t>("eval_size", cfg.eval_size);
  cfg.eval_seed = obj.get_or<std::uint64_t>("eval_seed", cfg.eval_seed);
  cfg.target_accuracy = obj.get_or<double>("target_accuracy", 0.0);
  if (obj.has("strategies")) {
    cfg.strategies.clear();
    for (const auto& name : obj.get<std::vector<std::string>>("strategies")) {
      try {
        cfg.strategies.push_back(strategy_from_name(name));
      } catch (const std::invalid_argument& e) {
        throw ConfigError("config: " + std::string(e.what()));
      }
    }
  }
  if (obj.has("train")) cfg.train = train_spec_from_config(obj.at("train"), "$.train");
  obj.done();

  const auto t0 = std::chrono::steady_clock::now();
  const ALResult res = run_active_learning(*oracle, cfg, ctx.jobs);

  CsvWriter csv({"strategy", "seed", "round", "labels", "test_accuracy", "mean_epistemic"});
  for (const auto& row : res.rows)
    csv.row({row.strategy, row.seed, row.round, row.labels_used, row.test_accuracy,
             row.mean_epistemic});
  ctx.write("active.csv", csv.str());

  CsvWriter acq_csv({"strategy", "seed", "round", "pool_index"});
  for (const auto& a : res.acquisitions)
    acq_csv.row({a.strategy, a.seed, a.round, a.pool_index});
  ctx.write("acquisitions.csv", acq_csv.str());

  if (cfg.target_accuracy > 0.0) {
    CsvWriter eff_csv({"strategy", "seed", "reached", "labels_to_target"});
    for (const auto& e : res.efficiency)
      eff_csv.row({e.strategy, e.seed, e.reached, e.labels_to_target});
    ctx.write("efficiency.csv", eff_csv.str());
  }

  PlotSpec plot;
  plot.title = "active learning curves";
  plot.x_label = "labels used";
  plot.y_label = "test accuracy";
  for (const auto& strat : cfg.strategies) {
    PlotSeries series;
    series.name = strategy_name(strat);
    // mean over seeds at each round
    for (std::size_t r = 0; r <= cfg.rounds; ++r) {
      double acc = 0.0, labels = 0.0;
      std::size_t count = 0;
      for (const auto& row : res.rows) {
        if (row.strategy != strategy_name(strat) || row.round != r) continue;
        acc += row.test_accuracy;
        labels += static_cast<double>(row.labels_used);
        ++count;
      }
      if (count > 0)
        series.points.emplace_back(labels / static_cast<double>(count),
                                   acc / static_cast<double>(count));
    }
    plot.series.push_back(std::move(series));
  }
  ctx.write("active.svg", emit_svg(plot));

  for (const auto& strat : cfg.strategies)
    for (const auto seed : cfg.seeds)
      ctx.manifest.cells.push_back(
          {strategy_name(strat) + "|" + std::to_string(seed), "ok", 0.0});
  ctx.finish(detail::wall_ms_since(t0));
  return 0;
}

// ---- train-oracle ----

inline int run_train_oracle_command(RunContext& ctx) {
  StrictObject obj(ctx.config, "$");
  auto source = oracle_from_config(obj.at("source"), "$.source", ctx.config_dir);
  const std::size_t n_per_class = obj.get<std::size_t>("n_per_class");
  const auto seeds = ctx.seeds(obj);
  const std::uint64_t seed = seeds[0];
  const int dequantize_levels = obj.get_or<int>("dequantize_levels", 0);

  FlowConfig fc;
  if (obj.has("flow")) {
    StrictObject f(obj.at("flow"), "$.flow");
    fc.coupling_layers = f.get_or<std::size_t>("coupling_layers", fc.coupling_layers);
    fc.hidden = f.get_or<std::size_t>("hidden", fc.hidden);
    fc.s_max = f.get_or<double>("s_max", fc.s_max);
    f.done();
  }
  FlowTrainConfig tc;
  if (obj.has("train")) {
    StrictObject t(obj.at("train"), "$.train");
    tc.learning_rate = t.get_or<double>("learning_rate", tc.learning_rate);
    tc.epochs = t.get_or<std::size_t>("epochs", tc.epochs);
    tc.batch_size = t.get_or<std::size_t>("batch_size", tc.batch_size);
    tc.shuffle = t.get_or<bool>("shuffle", tc.shuffle);
    t.done();
  }
  const std::string save_as = obj.get_or<std::string>("save_as", "oracle.json");
  obj.done();

  const auto t0 = std::chrono::steady_clock::now();
  FlowOracle flow(source->prior(), source->dim(), fc, seed);
  std::vector<NllTrace> traces(source->num_classes());
  for (std::size_t k = 0; k < source->num_classes(); ++k) {
    const auto cell_start = std::chrono::steady_clock::now();
    RngStream data_rng(seed, fnv1a64("train-oracle-data-" + std::to_string(k)));
    std::vector<std::vector<double>> data;
    data.reserve(n_per_class);
    for (std::size_t i = 0; i < n_per_class; ++i) {
      std::vector<double> x = source->sample(k, data_rng);
      if (dequantize_levels >= 2) x = dequantize(x, dequantize_levels, data_rng);
      data.push_back(std::move(x));
    }
    FlowTrainConfig class_tc = tc;
    class_tc.seed = seed + k;
    ManifestCell cell;
    cell.id = "class-" + std::to_string(k);
    try {
      traces[k] = flow.train_class_mle(k, data, class_tc);
      cell.status = "ok";
    } catch (const std::exception& e) {
      cell.status = std::string("failed: ") + e.what();
      cell.wall_ms = detail::wall_ms_since(cell_start);
      ctx.manifest.cells.push_back(cell);
      ctx.finish(detail::wall_ms_since(t0));
      std::cerr << "cell " << cell.id << " " << cell.status << "\n";
      return 1;
    }
    cell.wall_ms = detail::wall_ms_since(cell_start);
    ctx.manifest.cells.push_back(cell);
  }
  flow.freeze();
  ctx.write(save_as, flow.to_json().dump() + "\n");

  CsvWriter csv({"class", "epoch", "nll"});
  for (std::size_t k = 0; k < traces.size(); ++k)
    for (std::size_t e = 0; e < traces[k].per_epoch.size(); ++e)
      csv.row({k, e, traces[k].per_epoch[e]});
  ctx.write("nll_trace.csv", csv.str());

  PlotSpec plot;
  plot.title = "flow training NLL";
  plot.x_label = "epoch";
  plot.y_label = "mean NLL (nats)";
  for (std::size_t k = 0; k < traces.size(); ++k) {
    PlotSeries series;
    series.name = "class " + std::to_string(k);
    for (std::size_t e = 0; e < traces[k].per_epoch.size(); ++e)
      series.points.emplace_back(static_cast<double>(e), traces[k].per_epoch[e]);
    plot.series.push_back(std::move(series));
  }
  ctx.write("loss.svg", emit_svg(plot));
  ctx.finish(detail::wall_ms_since(t0));
  return 0;
}

// ---- validate ----

inline int run_validate_command(RunContext& ctx) {
  StrictObject obj(ctx.config, "$");
  auto oracle = oracle_from_config(obj.at("oracle"), "$.oracle", ctx.config_dir);
  std::unique_ptr<Oracle> reference;
  if (obj.has("reference"))
    reference = oracle_from_config(obj.at("reference"), "$.reference", ctx.config_dir);
  const Oracle& real_world = reference ? *reference : *oracle;

  const std::size_t n_samples = obj.get_or<std::size_t>("n_samples", 1000);
  const std::size_t n_train = obj.get_or<std::size_t>("n_train", 4000);
  const std::size_t eval_size = obj.get_or<std::size_t>("eval_size", 2000);
  const std::size_t coverage_k = obj.get_or<std::size_t>("coverage_k", 3);
  const double coverage_pct = obj.get_or<double>("coverage_percentile", 90.0);
  const bool abs_threshold = obj.has("memorization_threshold");
  const double threshold_override =
      abs_threshold ? obj.get<double>("memorization_threshold") : 0.0;
  const auto seeds = ctx.seeds(obj);
  obj.done();

  const auto t0 = std::chrono::steady_clock::now();
  const std::uint64_t seed = seeds[0];

  // per-class real and generated sets
  std::vector<VectorSet> real_by_class(oracle->num_classes());
  std::vector<VectorSet> gen_by_class(oracle->num_classes());
  VectorSet real_all, gen_all;
  RngStream real_rng(seed, fnv1a64("validate-real"));
  RngStream gen_rng(seed, fnv1a64("validate-gen"));
  for (std::size_t k = 0; k < oracle->num_classes(); ++k) {
    for (std::size_t i = 0; i < n_samples; ++i) {
      real_by_class[k].push_back(real_world.sample(k, real_rng));
      gen_by_class[k].push_back(oracle->sample(k, gen_rng));
      real_all.push_back(real_by_class[k].back());
      gen_all.push_back(gen_by_class[k].back());
    }
  }

  ValidationReport report;
  const double threshold =
      abs_threshold ? threshold_override : default_memorization_threshold(real_all, ctx.jobs);
  const MemorizationResult mem = memorization_check(real_all, gen_all, threshold, ctx.jobs);
  report.memorization_rate = mem.rate;
  report.memorization_threshold = threshold;
  for (int pct : {10, 25, 50, 75, 90})
    report.nn_distance_quantiles[pct] = percentile(mem.distances, pct);
  report.coverage = coverage(real_all, gen_all, coverage_k, coverage_pct, ctx.jobs);
  const DiversityRatios ratios = variance_ratio(real_by_class, gen_by_class);
  report.variance_ratio_per_class = ratios.variance_ratio;
  report.distance_ratio_per_class = ratios.distance_ratio;

  const SelfValidationResult sv =
      self_validation(*oracle, n_train, default_variants(), eval_size, seed, ctx.jobs);
  report.self_validation_rows = sv.rows;
  for (const auto& row : sv.rows)
    report.self_validation_gap_pp = std::max(report.self_validation_gap_pp, row.gap_pp);
  report.bayes_acc = sv.bayes.bayes_acc;
  report.bayes_acc_se = sv.bayes.se_acc;
  report.aleatoric_floor = sv.bayes.aleatoric_floor;

  ctx.write("validation_report.json", report.to_json().dump(2) + "\n");

  // NN distance histogram (memorization figure analog)
  const double d_max = *std::max_element(mem.distances.begin(), mem.distances.end());
  const int n_bins = 30;
  std::vector<std::size_t> counts(n_bins, 0);
  for (double d : mem.distances) {
    int b = d_max > 0 ? std::min(n_bins - 1, static_cast<int>(d / d_max * n_bins)) : 0;
    ++counts[b];
  }
  CsvWriter hist_csv({"distance", "count"});
  PlotSpec plot;
  plot.title = "generated-to-train NN distances";
  plot.x_label = "distance";
  plot.y_label = "count";
  for (int b = 0; b < n_bins; ++b) {
    const double center = d_max * (b + 0.5) / n_bins;
    hist_csv.row({center, counts[b]});
    plot.bars.emplace_back(center, static_cast<double>(counts[b]));
  }
  plot.vline = threshold;
  ctx.write("nn_hist.csv", hist_csv.str());
  ctx.write("nn_hist.svg", emit_svg(plot));

  ctx.manifest.cells.push_back({"validate", "ok", detail::wall_ms_since(t0)});
  ctx.finish(detail::wall_ms_since(t0));
  return 0;
}

}  // namespace detail

/// CLI entry point, callable in-process. Exit codes: 0 success, 1 runtime
/// failure (failing cell reported on stderr), 2 malformed config.
inline int cli_main(std::vector<std::string> args) {
  CLI::App app{"oraclebench: oracle-world benchmark toolkit"};
  app.require_subcommand(1);

  std::string config_path, out_override;
  int jobs = 1;
  std::uint64_t seed_offset = 0;

  const std::vector<std::string> commands = {"train-oracle", "validate", "scaling",
                                             "shift",        "active",   "softlabels"};
  for (const auto& name : commands) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "experiment config (JSON)")->required();
    sub->add_option("--out", out_override, "output directory");
    sub->add_option("--jobs", jobs, "worker count for independent cells");
    sub->add_option("--seed-offset", seed_offset, "added to every configured seed");
  }

  std::vector<const char*> argv;
  argv.push_back("oraclebench");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  const std::string command = app.get_subcommands().front()->get_name();

  detail::RunContext ctx;
  ctx.command = command;
  ctx.jobs = std::max(1, jobs);
  ctx.seed_offset = seed_offset;

  std::ifstream in(config_path);
  if (!in.good()) {
    std::cerr << "config: cannot open '" << config_path << "'\n";
    return 2;
  }
  try {
    in >> ctx.config;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config: malformed JSON in '" << config_path << "': " << e.what() << "\n";
    return 2;
  }
  ctx.config_dir = std::filesystem::absolute(config_path).parent_path();

  // output root: --out flag > config "out" > ORACLEBENCH_OUT env > ./oraclebench_out
  std::filesystem::path out_dir;
  if (!out_override.empty()) {
    out_dir = out_override;
  } else if (ctx.config.is_object() && ctx.config.contains("out")) {
    out_dir = ctx.config_dir / ctx.config["out"].get<std::string>();
    ctx.config.erase("out");
  } else if (const char* env = std::getenv("ORACLEBENCH_OUT")) {
    out_dir = std::filesystem::path(env) / command;
  } else {
    out_dir = std::filesystem::path("oraclebench_out") / command;
  }
  std::filesystem::create_directories(out_dir);
  ctx.out_dir = out_dir;

  try {
    if (command == "scaling") return detail::run_scaling_command(ctx);
    if (command == "softlabels") return detail::run_softlabels_command(ctx);
    if (command == "shift") return detail::run_shift_command(ctx);
    if (command == "active") return detail::run_active_command(ctx);
    if (command == "train-oracle") return detail::run_train_oracle_command(ctx);
    if (command == "validate") return detail::run_validate_command(ctx);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "runtime failure: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace oraclebench
