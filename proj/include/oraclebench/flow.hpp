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
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "oraclebench/autodiff.hpp"
#include "oraclebench/optim.hpp"
#include "oraclebench/oracle.hpp"

namespace oraclebench {

struct FlowConfig {
  std::size_t coupling_layers = 6;
  std::size_t hidden = 64;
  double s_max = 5.0;  // log-scale clamp: s = s_max * tanh(raw / s_max)
};

struct FlowTrainConfig {
  double learning_rate = 1e-3;
  std::size_t epochs = 100;
  std::size_t batch_size = 128;
  std::uint64_t seed = 0;
  bool shuffle = true;
};

namespace detail {

inline double clamp_log_scale(double raw, double s_max) {
  return s_max * std::tanh(raw / s_max);
}

// 2-layer tanh conditioner: D -> hidden -> D.
struct ConditionerNet {
  Tensor w1, b1, w2, b2;

  ConditionerNet() = default;
  ConditionerNet(std::size_t dim, std::size_t hidden, RngStream& rng) {
    w1 = Tensor({dim, hidden});
    const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
    for (auto& v : w1.data()) v = rng.normal() * scale;
    b1 = Tensor({hidden});
    // zero head: the layer starts as the identity map
    w2 = Tensor({hidden, dim});
    b2 = Tensor({dim});
  }

  std::vector<double> apply(std::span<const double> x) const {
    const std::size_t dim = w1.shape()[0], hidden = w1.shape()[1];
    std::vector<double> h(hidden);
    for (std::size_t j = 0; j < hidden; ++j) {
      double acc = b1[j];
      for (std::size_t d = 0; d < dim; ++d) acc += x[d] * w1.at(d, j);
      h[j] = std::tanh(acc);
    }
    std::vector<double> out(dim);
    for (std::size_t d = 0; d < dim; ++d) {
      double acc = b2[d];
      for (std::size_t j = 0; j < hidden; ++j) acc += h[j] * w2.at(j, d);
      out[d] = acc;
    }
    return out;
  }
};

}  // namespace detail

/// Affine coupling layer with a fixed alternating binary mask. Dims with
/// mask 1 pass through and feed the conditioners; dims with mask 0 get
/// z = x * exp(s) + t where |s| <= s_max.
class CouplingLayer {
 public:
  CouplingLayer() = default;
  CouplingLayer(std::size_t dim, std::size_t hidden, int mask_offset, double s_max,
                RngStream& rng)
      : dim_(dim), mask_offset_(mask_offset), s_max_(s_max),
        scale_net_(dim, hidden, rng), shift_net_(dim, hidden, rng) {
    require(dim >= 2, "CouplingLayer: alternating masks need dim >= 2");
  }

  std::size_t dim() const { return dim_; }
  int mask_offset() const { return mask_offset_; }
  double s_max() const { return s_max_; }
  bool pass_through(std::size_t d) const {
    return (d + static_cast<std::size_t>(mask_offset_)) % 2 == 0;
  }

  /// x -> z; adds the analytic log|det J| to *log_det.
  std::vector<double> forward(std::span<const double> x, double* log_det) const {
    std::vector<double> masked(dim_, 0.0);
    for (std::size_t d = 0; d < dim_; ++d)
      if (pass_through(d)) masked[d] = x[d];
    const std::vector<double> s_raw = scale_net_.apply(masked);
    const std::vector<double> t = shift_net_.apply(masked);
    std::vector<double> z(dim_);
    for (std::size_t d = 0; d < dim_; ++d) {
      if (pass_through(d)) {
        z[d] = x[d];
      } else {
        const double s = detail::clamp_log_scale(s_raw[d], s_max_);
        z[d] = x[d] * std::exp(s) + t[d];
        if (log_det) *log_det += s;
      }
    }
    return z;
  }

  std::vector<double> inverse(std::span<const double> z) const {
    std::vector<double> masked(dim_, 0.0);
    for (std::size_t d = 0; d < dim_; ++d)
      if (pass_through(d)) masked[d] = z[d];
    const std::vector<double> s_raw = scale_net_.apply(masked);
    const std::vector<double> t = shift_net_.apply(masked);
    std::vector<double> x(dim_);
    for (std::size_t d = 0; d < dim_; ++d) {
      if (pass_through(d)) {
        x[d] = z[d];
      } else {
        const double s = detail::clamp_log_scale(s_raw[d], s_max_);
        x[d] = (z[d] - t[d]) * std::exp(-s);
      }
    }
    return x;
  }

  detail::ConditionerNet& scale_net() { return scale_net_; }
  detail::ConditionerNet& shift_net() { return shift_net_; }
  const detail::ConditionerNet& scale_net() const { return scale_net_; }
  const detail::ConditionerNet& shift_net() const { return shift_net_; }

 private:
  std::size_t dim_ = 0;
  int mask_offset_ = 0;
  double s_max_ = 5.0;
  detail::ConditionerNet scale_net_, shift_net_;
};

/// Constant per-dimension affine map z = x * exp(s) + t with clamped log
/// scale. Coupling masks need dim >= 2, so one-dimensional flows consist of
/// this layer alone; it is also the closed-form fixture for change-of-variable
/// checks.
class AffineLayer {
 public:
  AffineLayer() = default;
  AffineLayer(std::size_t dim, double s_max) : s_max_(s_max) {
    log_scale_raw_ = Tensor({dim});
    shift_ = Tensor({dim});
  }

  std::size_t dim() const { return log_scale_raw_.size(); }
  double s_max() const { return s_max_; }

  double log_scale(std::size_t d) const {
    return detail::clamp_log_scale(log_scale_raw_[d], s_max_);
  }

  std::vector<double> forward(std::span<const double> x, double* log_det) const {
    std::vector<double> z(x.size());
    for (std::size_t d = 0; d < x.size(); ++d) {
      const double s = log_scale(d);
      z[d] = x[d] * std::exp(s) + shift_[d];
      if (log_det) *log_det += s;
    }
    return z;
  }

  std::vector<double> inverse(std::span<const double> z) const {
    std::vector<double> x(z.size());
    for (std::size_t d = 0; d < z.size(); ++d)
      x[d] = (z[d] - shift_[d]) * std::exp(-log_scale(d));
    return x;
  }

  Tensor& log_scale_raw() { return log_scale_raw_; }
  Tensor& shift() { return shift_; }
  const Tensor& log_scale_raw() const { return log_scale_raw_; }
  const Tensor& shift() const { return shift_; }

 private:
  double s_max_ = 5.0;
  Tensor log_scale_raw_, shift_;
};

/// One class-conditional flow: a stack of invertible layers over a standard
/// normal base. dim >= 2 uses coupling layers with alternating masks; dim == 1
/// degenerates to a single affine layer.
class ClassFlow {
 public:
  ClassFlow() = default;

  ClassFlow(std::size_t dim, const FlowConfig& cfg, RngStream& rng) : dim_(dim) {
    if (dim == 1) {
      affine_ = AffineLayer(1, cfg.s_max);
      has_affine_ = true;
    } else {
      for (std::size_t i = 0; i < cfg.coupling_layers; ++i)
        couplings_.emplace_back(dim, cfg.hidden, static_cast<int>(i % 2), cfg.s_max, rng);
    }
  }

  std::size_t dim() const { return dim_; }
  bool has_affine() const { return has_affine_; }
  const std::vector<CouplingLayer>& couplings() const { return couplings_; }
  std::vector<CouplingLayer>& couplings() { return couplings_; }
  const AffineLayer& affine() const { return affine_; }
  AffineLayer& affine() { return affine_; }

  /// x -> (z, log|det J|).
  std::pair<std::vector<double>, double> forward(std::span<const double> x) const {
    double log_det = 0.0;
    std::vector<double> cur(x.begin(), x.end());
    if (has_affine_) cur = affine_.forward(cur, &log_det);
    for (const auto& layer : couplings_) cur = layer.forward(cur, &log_det);
    return {std::move(cur), log_det};
  }

  std::vector<double> inverse(std::span<const double> z) const {
    std::vector<double> cur(z.begin(), z.end());
    for (auto it = couplings_.rbegin(); it != couplings_.rend(); ++it)
      cur = it->inverse(cur);
    if (has_affine_) cur = affine_.inverse(cur);
    return cur;
  }

  double log_likelihood(std::span<const double> x) const {
    auto [z, log_det] = forward(x);
    double ll = log_det;
    for (double v : z) ll += std_normal_logpdf(v);
    return ll;
  }

  std::vector<Tensor*> parameters() {
    std::vector<Tensor*> ps;
    if (has_affine_) {
      ps.push_back(&affine_.log_scale_raw());
      ps.push_back(&affine_.shift());
    }
    for (auto& layer : couplings_) {
      for (auto* net : {&layer.scale_net(), &layer.shift_net()}) {
        ps.push_back(&net->w1);
        ps.push_back(&net->b1);
        ps.push_back(&net->w2);
        ps.push_back(&net->b2);
      }
    }
    return ps;
  }

 private:
  std::size_t dim_ = 0;
  bool has_affine_ = false;
  AffineLayer affine_;
  std::vector<CouplingLayer> couplings_;
};

namespace detail {

// Batched tape version of the flow forward pass used for MLE training.
// Returns the scalar mean NLL node; `leaves` receives the trainable leaf ids
// in ClassFlow::parameters() order.
inline Graph::NodeId flow_nll_graph(Graph& g, ClassFlow& flow, const Tensor& batch,
                                    std::vector<Graph::NodeId>& leaves) {
  const std::size_t dim = flow.dim();
  const std::size_t rows = batch.rows();
  Graph::NodeId x = g.leaf(batch);
  Graph::NodeId zeros_row = g.leaf(Tensor({dim}));
  Graph::NodeId ones_col = g.leaf(Tensor::full({dim, 1}, 1.0));
  Graph::NodeId log_det_rows = -1;  // [rows,1] accumulated analytic log-det

  if (flow.has_affine()) {
    AffineLayer& aff = flow.affine();
    Graph::NodeId raw = g.leaf(aff.log_scale_raw(), true);
    Graph::NodeId shift = g.leaf(aff.shift(), true);
    leaves.push_back(raw);
    leaves.push_back(shift);
    Graph::NodeId s = scale_by(g, g.tanh(scale_by(g, raw, 1.0 / aff.s_max())), aff.s_max());
    // z = x * exp(s) + shift, log-det row contribution = sum(s)
    Graph::NodeId es = g.exp(s);
    x = g.affine_broadcast(x, es, shift);
    Graph::NodeId s_mat = g.affine_broadcast(g.leaf(Tensor::full({rows, dim}, 1.0)), s, zeros_row);
    Graph::NodeId s_rows = g.matmul(s_mat, ones_col);
    log_det_rows = log_det_rows < 0 ? s_rows : g.add(log_det_rows, s_rows);
  }

  for (auto& layer : flow.couplings()) {
    Tensor mask({dim}), inv_mask({dim});
    for (std::size_t d = 0; d < dim; ++d) {
      mask[d] = layer.pass_through(d) ? 1.0 : 0.0;
      inv_mask[d] = 1.0 - mask[d];
    }
    Graph::NodeId mask_leaf = g.leaf(mask);
    Graph::NodeId inv_mask_leaf = g.leaf(inv_mask);
    Graph::NodeId xm = g.affine_broadcast(x, mask_leaf, zeros_row);

    auto conditioner = [&](detail::ConditionerNet& net) {
      Graph::NodeId w1 = g.leaf(net.w1, true);
      Graph::NodeId b1 = g.leaf(net.b1, true);
      Graph::NodeId w2 = g.leaf(net.w2, true);
      Graph::NodeId b2 = g.leaf(net.b2, true);
      leaves.insert(leaves.end(), {w1, b1, w2, b2});
      Graph::NodeId h = g.tanh(linear(g, xm, w1, b1));
      return linear(g, h, w2, b2);
    };

    Graph::NodeId s_raw = conditioner(layer.scale_net());
    Graph::NodeId t_raw = conditioner(layer.shift_net());
    const double s_max = layer.s_max();
    Graph::NodeId s_clamped = scale_by(g, g.tanh(scale_by(g, s_raw, 1.0 / s_max)), s_max);
    Graph::NodeId s_masked = g.affine_broadcast(s_clamped, inv_mask_leaf, zeros_row);
    Graph::NodeId t_masked = g.affine_broadcast(t_raw, inv_mask_leaf, zeros_row);
    // pass dims keep s=0, t=0, so z = x*exp(s)+t covers both halves at once
    x = g.add(g.mul(x, g.exp(s_masked)), t_masked);
    Graph::NodeId s_rows = g.matmul(s_masked, ones_col);
    log_det_rows = log_det_rows < 0 ? s_rows : g.add(log_det_rows, s_rows);
  }

  // base log-density rows: -0.5*sum(z^2) - dim/2 * ln(2*pi)
  Graph::NodeId zsq = scale_by(g, g.mul(x, x), -0.5);
  Graph::NodeId base_rows = g.matmul(zsq, ones_col);
  Graph::NodeId ll_rows = log_det_rows < 0 ? base_rows : g.add(base_rows, log_det_rows);
  Graph::NodeId mean_ll = g.mean(ll_rows);
  Graph::NodeId shifted = g.add(mean_ll, g.leaf(Tensor::scalar(
                                              -0.5 * static_cast<double>(dim) * kLn2Pi)));
  return scale_by(g, shifted, -1.0);
}

}  // namespace detail

/// Per-epoch mean negative log-likelihood trace from MLE training.
struct NllTrace {
  std::vector<double> per_epoch;
  double initial = 0.0;
  double final_value = 0.0;
};

/// Trainable per-class coupling flow oracle over a standard-normal base.
/// Train each class with train_class_mle, then freeze(); sampling and
/// serialization require the frozen state.
class FlowOracle final : public Oracle {
 public:
  FlowOracle(ClassPrior prior, std::size_t dim, const FlowConfig& cfg, std::uint64_t init_seed)
      : prior_(std::move(prior)), dim_(dim), cfg_(cfg) {
    require(dim_ > 0, "FlowOracle: dim must be positive");
    for (std::size_t k = 0; k < prior_.size(); ++k) {
      RngStream rng(init_seed, fnv1a64("flow-init-" + std::to_string(k)));
      flows_.emplace_back(dim_, cfg_, rng);
    }
  }

  std::string kind() const override { return "flow"; }
  std::size_t num_classes() const override { return flows_.size(); }
  std::size_t dim() const override { return dim_; }
  const ClassPrior& prior() const override { return prior_; }
  bool frozen() const override { return frozen_; }
  const FlowConfig& config() const { return cfg_; }

  ClassFlow& class_flow(std::size_t k) {
    require(k < flows_.size(), "FlowOracle: class index out of range");
    return flows_[k];
  }
  const ClassFlow& class_flow(std::size_t k) const { return flows_[k]; }

  double log_likelihood(std::span<const double> x, std::size_t k) const override {
    check_query(x, k);
    return flows_[k].log_likelihood(x);
  }

  std::vector<double> sample(std::size_t k, RngStream& rng) const override {
    require(k < num_classes(), "oracle: class index out of range");
    require(frozen_, "FlowOracle::sample: oracle must be frozen first");
    return flows_[k].inverse(rng.normal_vec(dim_));
  }

  void freeze() { frozen_ = true; }

  /// Maximum-likelihood training of one class flow. Returns the NLL trace;
  /// throws std::runtime_error with optimizer diagnostics if the loss goes
  /// non-finite.
  NllTrace train_class_mle(std::size_t k, const std::vector<std::vector<double>>& data,
                           const FlowTrainConfig& tc) {
    require(!frozen_, "FlowOracle::train_class_mle: oracle is frozen");
    require(k < flows_.size(), "FlowOracle: class index out of range");
    require(!data.empty(), "train_class_mle: empty training data");
    require(tc.batch_size >= 1 && tc.epochs >= 1, "train_class_mle: bad config");
    for (const auto& row : data)
      require(row.size() == dim_, "train_class_mle: sample dimension mismatch");

    ClassFlow& flow = flows_[k];
    Adam opt(tc.learning_rate);
    RngStream rng(tc.seed, fnv1a64("flow-train-" + std::to_string(k)));

    NllTrace trace;
    trace.initial = mean_nll(flow, data);

    std::vector<std::size_t> order(data.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (std::size_t epoch = 0; epoch < tc.epochs; ++epoch) {
      if (tc.shuffle) {
        for (std::size_t i = 0; i + 1 < order.size(); ++i) {
          std::size_t j = i + static_cast<std::size_t>(rng.next_u64() % (order.size() - i));
          std::swap(order[i], order[j]);
        }
      }
      double epoch_nll = 0.0;
      for (std::size_t start = 0; start < order.size(); start += tc.batch_size) {
        const std::size_t size = std::min(tc.batch_size, order.size() - start);
        Tensor batch({size, dim_});
        for (std::size_t r = 0; r < size; ++r)
          for (std::size_t d = 0; d < dim_; ++d) batch.at(r, d) = data[order[start + r]][d];

        Graph g;
        std::vector<Graph::NodeId> leaves;
        Graph::NodeId nll;
        try {
          nll = detail::flow_nll_graph(g, flow, batch, leaves);
          g.backward(nll);
        } catch (const std::runtime_error& e) {
          throw std::runtime_error(std::string("flow training diverged (") + e.what() +
                                   "); learning_rate=" + format_double(tc.learning_rate) +
                                   " s_max=" + format_double(cfg_.s_max));
        }
        epoch_nll += g.value(nll)[0] * static_cast<double>(size);

        std::vector<Tensor*> params = flow.parameters();
        require(params.size() == leaves.size(), "flow training: leaf/parameter mismatch");
        std::vector<const Tensor*> grads;
        grads.reserve(leaves.size());
        for (Graph::NodeId id : leaves) grads.push_back(&g.adjoint(id));
        opt.step(params, grads);
      }
      trace.per_epoch.push_back(epoch_nll / static_cast<double>(data.size()));
    }
    trace.final_value = mean_nll(flow, data);
    return trace;
  }

  nlohmann::json to_json() const override {
    nlohmann::json j;
    j["format_version"] = kOracleFormatVersion;
    j["kind"] = kind();
    j["k"] = num_classes();
    j["d"] = dim();
    j["prior"] = prior_.probs;
    j["frozen"] = frozen_;
    j["config"] = {{"coupling_layers", cfg_.coupling_layers},
                   {"hidden", cfg_.hidden},
                   {"s_max", cfg_.s_max}};
    nlohmann::json cls = nlohmann::json::array();
    for (const auto& flow : flows_) {
      nlohmann::json layers = nlohmann::json::array();
      if (flow.has_affine()) {
        const auto& aff = flow.affine();
        layers.push_back({{"type", "affine"},
                          {"log_scale_raw", tensor_to_json(aff.log_scale_raw())},
                          {"shift", tensor_to_json(aff.shift())}});
      }
      for (const auto& layer : flow.couplings()) {
        auto net_json = [](const detail::ConditionerNet& n) {
          return nlohmann::json{{"w1", tensor_to_json(n.w1)},
                                {"b1", tensor_to_json(n.b1)},
                                {"w2", tensor_to_json(n.w2)},
                                {"b2", tensor_to_json(n.b2)}};
        };
        layers.push_back({{"type", "coupling"},
                          {"mask_offset", layer.mask_offset()},
                          {"scale_net", net_json(layer.scale_net())},
                          {"shift_net", net_json(layer.shift_net())}});
      }
      cls.push_back({{"layers", layers}});
    }
    j["classes"] = cls;
    return j;
  }

  static nlohmann::json tensor_to_json(const Tensor& t) {
    nlohmann::json j;
    j["shape"] = t.shape();
    j["data"] = std::vector<double>(t.data().begin(), t.data().end());
    return j;
  }

  static Tensor tensor_from_json(const nlohmann::json& j) {
    return Tensor(j.at("shape").get<std::vector<std::size_t>>(),
                  j.at("data").get<std::vector<double>>());
  }

 private:
  static double mean_nll(const ClassFlow& flow, const std::vector<std::vector<double>>& data) {
    double acc = 0.0;
    for (const auto& x : data) acc -= flow.log_likelihood(x);
    return acc / static_cast<double>(data.size());
  }

  ClassPrior prior_;
  std::size_t dim_;
  FlowConfig cfg_;
  std::vector<ClassFlow> flows_;
  bool frozen_ = false;
};

}  // namespace oraclebench
