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

#include <fstream>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "oraclebench/flow.hpp"
#include "oraclebench/oracle.hpp"

namespace oraclebench {

inline std::unique_ptr<Oracle> oracle_from_json(const nlohmann::json& j) {
  require(j.at("format_version").get<int>() == kOracleFormatVersion,
          "oracle_from_json: unsupported format_version");
  const std::string kind = j.at("kind").get<std::string>();
  ClassPrior prior(j.at("prior").get<std::vector<double>>());
  const auto k = j.at("k").get<std::size_t>();
  const auto d = j.at("d").get<std::size_t>();
  require(prior.size() == k, "oracle_from_json: prior length != k");

  if (kind == "gaussian") {
    std::vector<GaussianOracle::ClassDensity> classes;
    for (const auto& c : j.at("classes"))
      classes.push_back({c.at("mean").get<std::vector<double>>(),
                         c.at("var").get<std::vector<double>>()});
    auto oracle = std::make_unique<GaussianOracle>(std::move(prior), std::move(classes));
    require(oracle->dim() == d, "oracle_from_json: dim mismatch");
    return oracle;
  }

  if (kind == "gmm") {
    std::vector<GmmOracle::ClassMixture> classes;
    for (const auto& c : j.at("classes")) {
      GmmOracle::ClassMixture mix;
      for (const auto& comp : c.at("components"))
        mix.push_back({comp.at("weight").get<double>(),
                       comp.at("mean").get<std::vector<double>>(),
                       comp.at("var").get<std::vector<double>>()});
      classes.push_back(std::move(mix));
    }
    auto oracle = std::make_unique<GmmOracle>(std::move(prior), std::move(classes));
    require(oracle->dim() == d, "oracle_from_json: dim mismatch");
    return oracle;
  }

  if (kind == "flow") {
    FlowConfig cfg;
    const auto& jc = j.at("config");
    cfg.coupling_layers = jc.at("coupling_layers").get<std::size_t>();
    cfg.hidden = jc.at("hidden").get<std::size_t>();
    cfg.s_max = jc.at("s_max").get<double>();
    auto oracle = std::make_unique<FlowOracle>(std::move(prior), d, cfg, /*init_seed=*/0);
    const auto& classes = j.at("classes");
    require(classes.size() == k, "oracle_from_json: class count mismatch");
    for (std::size_t ki = 0; ki < k; ++ki) {
      ClassFlow& flow = oracle->class_flow(ki);
      const auto& layers = classes[ki].at("layers");
      std::size_t coupling_idx = 0;
      for (const auto& layer : layers) {
        const std::string type = layer.at("type").get<std::string>();
        if (type == "affine") {
          require(flow.has_affine(), "oracle_from_json: unexpected affine layer");
          flow.affine().log_scale_raw() = FlowOracle::tensor_from_json(layer.at("log_scale_raw"));
          flow.affine().shift() = FlowOracle::tensor_from_json(layer.at("shift"));
        } else if (type == "coupling") {
          require(coupling_idx < flow.couplings().size(),
                  "oracle_from_json: too many coupling layers");
          CouplingLayer& cl = flow.couplings()[coupling_idx++];
          require(cl.mask_offset() == layer.at("mask_offset").get<int>(),
                  "oracle_from_json: mask offset mismatch");
          auto load_net = [](detail::ConditionerNet& n, const nlohmann::json& jn) {
            n.w1 = FlowOracle::tensor_from_json(jn.at("w1"));
            n.b1 = FlowOracle::tensor_from_json(jn.at("b1"));
            n.w2 = FlowOracle::tensor_from_json(jn.at("w2"));
            n.b2 = FlowOracle::tensor_from_json(jn.at("b2"));
          };
          load_net(cl.scale_net(), layer.at("scale_net"));
          load_net(cl.shift_net(), layer.at("shift_net"));
        } else {
          require(false, "oracle_from_json: unknown layer type");
        }
      }
      require(coupling_idx == flow.couplings().size(),
              "oracle_from_json: coupling layer count mismatch");
    }
    if (j.at("frozen").get<bool>()) oracle->freeze();
    return oracle;
  }

  throw std::invalid_argument("oracle_from_json: unknown oracle kind '" + kind + "'");
}

inline void save_oracle(const Oracle& oracle, const std::string& path) {
  std::ofstream out(path);
  require(out.good(), "save_oracle: cannot open output file");
  out << oracle.to_json().dump(2) << "\n";
}

inline std::unique_ptr<Oracle> load_oracle(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "load_oracle: cannot open input file");
  nlohmann::json j;
  in >> j;
  return oracle_from_json(j);
}

}  // namespace oraclebench
