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
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "oraclebench/autodiff.hpp"
#include "oraclebench/optim.hpp"
#include "oraclebench/oracle.hpp"
#include "oraclebench/posterior.hpp"
#include "oraclebench/predictor.hpp"

namespace oraclebench {

enum class Activation { kTanh, kRelu };

inline std::string activation_name(Activation a) {
  return a == Activation::kTanh ? "tanh" : "relu";
}

inline Activation activation_from_name(const std::string& s) {
  if (s == "tanh") return Activation::kTanh;
  if (s == "relu") return Activation::kRelu;
  throw std::invalid_argument("unknown activation '" + s + "'");
}

enum class LabelMode { kHard, kSoft };

/// Hard-label source: the posterior argmax (the relabeling used in the
/// soft-vs-hard study) or the raw generating class (a draw from the
/// posterior, which keeps cross-entropy a proper scoring rule).
enum class HardLabelSource { kArgmaxPosterior, kRawClass };

struct TrainSpec {
  LabelMode label_mode = LabelMode::kHard;
  HardLabelSource hard_label_source = HardLabelSource::kArgmaxPosterior;
  double learning_rate = 1e-3;
  bool cosine_decay = false;  // anneal the step size to zero over the epochs
  std::size_t epochs = 40;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;
  std::vector<std::size_t> hidden = {64, 64};
  Activation activation = Activation::kTanh;
};

/// Training label: argmax of the oracle posterior, ties broken toward the
/// lowest class index; samples without a posterior fall back to the raw class.
inline std::size_t hard_label(const LabeledSample& s) {
  if (!s.posterior.has_value()) return s.y;
  const auto& p = *s.posterior;
  std::size_t best = 0;
  for (std::size_t k = 1; k < p.size(); ++k)
    if (p[k] > p[best]) best = k;
  return best;
}

/// MLP over raw input vectors with a softmax head.
class SoftmaxClassifier : public Predictor {
 public:
  struct Layer {
    Tensor w, b;
  };

  SoftmaxClassifier() = default;

  SoftmaxClassifier(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                    std::size_t num_classes, Activation activation, RngStream& rng)
      : activation_(activation), input_dim_(input_dim), num_classes_(num_classes) {
    std::size_t in = input_dim;
    for (std::size_t width : hidden) {
      layers_.push_back(make_layer(in, width, rng));
      in = width;
    }
    layers_.push_back(make_layer(in, num_classes, rng));
  }

  std::size_t num_classes() const override { return num_classes_; }
  std::size_t input_dim() const { return input_dim_; }
  Activation activation() const { return activation_; }
  std::vector<Layer>& layers() { return layers_; }
  const std::vector<Layer>& layers() const { return layers_; }

  std::vector<double> predict_logits(std::span<const double> x) const {
    require(x.size() == input_dim_, "SoftmaxClassifier: input dimension mismatch");
    std::vector<double> cur(x.begin(), x.end());
    for (std::size_t li = 0; li < layers_.size(); ++li) {
      const Layer& layer = layers_[li];
      const std::size_t in = layer.w.shape()[0], out = layer.w.shape()[1];
      std::vector<double> next(out);
      for (std::size_t j = 0; j < out; ++j) {
        double acc = layer.b[j];
        for (std::size_t i = 0; i < in; ++i) acc += cur[i] * layer.w.at(i, j);
        next[j] = acc;
      }
      if (li + 1 < layers_.size()) {
        for (auto& v : next)
          v = activation_ == Activation::kTanh ? std::tanh(v) : std::max(v, 0.0);
      }
      cur = std::move(next);
    }
    return cur;
  }

  std::vector<double> predict_proba(std::span<const double> x) const override {
    return softmax(predict_logits(x));
  }

  std::vector<Tensor*> parameters() {
    std::vector<Tensor*> ps;
    for (auto& layer : layers_) {
      ps.push_back(&layer.w);
      ps.push_back(&layer.b);
    }
    return ps;
  }

  /// Tape forward over a batch; returns the logits node and appends the
  /// trainable leaves in parameters() order.
  Graph::NodeId logits_graph(Graph& g, const Tensor& batch,
                             std::vector<Graph::NodeId>& leaves) {
    Graph::NodeId cur = g.leaf(batch);
    for (std::size_t li = 0; li < layers_.size(); ++li) {
      Graph::NodeId w = g.leaf(layers_[li].w, true);
      Graph::NodeId b = g.leaf(layers_[li].b, true);
      leaves.push_back(w);
      leaves.push_back(b);
      cur = linear(g, cur, w, b);
      if (li + 1 < layers_.size())
        cur = activation_ == Activation::kTanh ? g.tanh(cur) : g.relu(cur);
    }
    return cur;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["format_version"] = kOracleFormatVersion;
    j["kind"] = "mlp";
    j["d"] = input_dim_;
    j["k"] = num_classes_;
    j["activation"] = activation_name(activation_);
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& layer : layers_)
      layers.push_back({{"w", tensor_json(layer.w)}, {"b", tensor_json(layer.b)}});
    j["layers"] = layers;
    return j;
  }

  static SoftmaxClassifier from_json(const nlohmann::json& j) {
    require(j.at("format_version").get<int>() == kOracleFormatVersion,
            "SoftmaxClassifier: unsupported format_version");
    require(j.at("kind").get<std::string>() == "mlp", "SoftmaxClassifier: wrong kind");
    SoftmaxClassifier c;
    c.input_dim_ = j.at("d").get<std::size_t>();
    c.num_classes_ = j.at("k").get<std::size_t>();
    c.activation_ = activation_from_name(j.at("activation").get<std::string>());
    for (const auto& layer : j.at("layers"))
      c.layers_.push_back(Layer{tensor_from(layer.at("w")), tensor_from(layer.at("b"))});
    return c;
  }

 private:
  static Layer make_layer(std::size_t in, std::size_t out, RngStream& rng) {
    Layer layer{Tensor({in, out}), Tensor({out})};
    const double scale = 1.0 / std::sqrt(static_cast<double>(in));
    for (auto& v : layer.w.data()) v = rng.normal() * scale;
    return layer;
  }

  static nlohmann::json tensor_json(const Tensor& t) {
    return nlohmann::json{{"shape", t.shape()},
                          {"data", std::vector<double>(t.data().begin(), t.data().end())}};
  }

  static Tensor tensor_from(const nlohmann::json& j) {
    return Tensor(j.at("shape").get<std::vector<std::size_t>>(),
                  j.at("data").get<std::vector<double>>());
  }

  Activation activation_ = Activation::kTanh;
  std::size_t input_dim_ = 0;
  std::size_t num_classes_ = 0;
  std::vector<Layer> layers_;
};

struct TrainResult {
  std::vector<double> per_epoch_loss;
};

/// Minimizes mean cross-entropy against hard (argmax) or soft (full posterior)
/// targets. Deterministic given spec.seed.
inline TrainResult train(SoftmaxClassifier& classifier, std::span<const LabeledSample> data,
                         const TrainSpec& spec) {
  require(!data.empty(), "train: empty training data");
  require(spec.epochs >= 1 && spec.batch_size >= 1, "train: bad spec");
  const std::size_t k = classifier.num_classes();
  for (const auto& s : data) {
    require(s.x.size() == classifier.input_dim(), "train: sample dimension mismatch");
    if (spec.label_mode == LabelMode::kSoft)
      require(s.posterior.has_value(), "train: soft mode requires posteriors");
  }

  std::vector<std::vector<double>> targets(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (spec.label_mode == LabelMode::kSoft) {
      targets[i] = *data[i].posterior;
    } else {
      targets[i].assign(k, 0.0);
      const std::size_t label = spec.hard_label_source == HardLabelSource::kRawClass
                                    ? data[i].y
                                    : hard_label(data[i]);
      targets[i][label] = 1.0;
    }
  }

  Adam opt(spec.learning_rate);
  RngStream rng(spec.seed, fnv1a64("classifier-train"));
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  TrainResult result;
  const std::size_t dim = classifier.input_dim();
  for (std::size_t epoch = 0; epoch < spec.epochs; ++epoch) {
    if (spec.cosine_decay) {
      const double t = static_cast<double>(epoch) / static_cast<double>(spec.epochs);
      opt.set_learning_rate(spec.learning_rate * 0.5 * (1.0 + std::cos(std::numbers::pi * t)));
    }
    for (std::size_t i = 0; i + 1 < order.size(); ++i) {
      std::size_t j = i + static_cast<std::size_t>(rng.next_u64() % (order.size() - i));
      std::swap(order[i], order[j]);
    }
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += spec.batch_size) {
      const std::size_t size = std::min(spec.batch_size, order.size() - start);
      Tensor batch({size, dim});
      Tensor target({size, k});
      for (std::size_t r = 0; r < size; ++r) {
        const std::size_t src = order[start + r];
        for (std::size_t d = 0; d < dim; ++d) batch.at(r, d) = data[src].x[d];
        for (std::size_t c = 0; c < k; ++c) target.at(r, c) = targets[src][c];
      }
      Graph g;
      std::vector<Graph::NodeId> leaves;
      Graph::NodeId loss;
      try {
        Graph::NodeId logits = classifier.logits_graph(g, batch, leaves);
        loss = softmax_cross_entropy(g, logits, target);
        g.backward(loss);
      } catch (const std::runtime_error& e) {
        throw std::runtime_error(std::string("classifier training diverged (") + e.what() +
                                 "); learning_rate=" + format_double(spec.learning_rate));
      }
      epoch_loss += g.value(loss)[0] * static_cast<double>(size);
      std::vector<Tensor*> params = classifier.parameters();
      std::vector<const Tensor*> grads;
      grads.reserve(leaves.size());
      for (Graph::NodeId id : leaves) grads.push_back(&g.adjoint(id));
      opt.step(params, grads);
    }
    result.per_epoch_loss.push_back(epoch_loss / static_cast<double>(data.size()));
  }
  return result;
}

/// Construct-and-train in one step; determinism depends only on (data, spec).
inline SoftmaxClassifier train_classifier(std::span<const LabeledSample> data,
                                          std::size_t input_dim, std::size_t num_classes,
                                          const TrainSpec& spec, TrainResult* trace = nullptr) {
  RngStream init(spec.seed, fnv1a64("classifier-init"));
  SoftmaxClassifier c(input_dim, spec.hidden, num_classes, spec.activation, init);
  TrainResult r = train(c, data, spec);
  if (trace) *trace = std::move(r);
  return c;
}

/// Fraction of samples whose argmax prediction matches the sampled label.
inline double hard_accuracy(const Predictor& classifier, std::span<const LabeledSample> eval) {
  require(!eval.empty(), "hard_accuracy: empty eval set");
  std::size_t correct = 0;
  for (const auto& s : eval) {
    const std::vector<double> q = classifier.predict_proba(s.x);
    std::size_t pred = 0;
    for (std::size_t k = 1; k < q.size(); ++k)
      if (q[k] > q[pred]) pred = k;
    if (pred == s.y) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(eval.size());
}

/// Expected accuracy under the exact posterior: mean of p(argmax q | x).
/// Pointwise bounded by the Bayes accuracy on the same inputs.
inline double expected_accuracy(const Predictor& classifier,
                                std::span<const LabeledSample> eval) {
  require(!eval.empty(), "expected_accuracy: empty eval set");
  double acc = 0.0;
  for (const auto& s : eval) {
    require(s.posterior.has_value(), "expected_accuracy: sample missing posterior");
    const std::vector<double> q = classifier.predict_proba(s.x);
    std::size_t pred = 0;
    for (std::size_t k = 1; k < q.size(); ++k)
      if (q[k] > q[pred]) pred = k;
    acc += (*s.posterior)[pred];
  }
  return acc / static_cast<double>(eval.size());
}

/// ECE over (confidence, correctness) pairs with equal-width bins; empty bins
/// contribute zero. Pairs are sorted before accumulation so the result is
/// bitwise invariant to sample order.
inline double ece_binned(std::span<const double> confidence, std::span<const char> correct,
                         int bins = 15) {
  require(confidence.size() == correct.size() && !confidence.empty(), "ece_binned: bad input");
  require(bins >= 1, "ece_binned: bins must be positive");
  std::vector<std::pair<double, char>> pairs(confidence.size());
  for (std::size_t i = 0; i < confidence.size(); ++i)
    pairs[i] = {confidence[i], correct[i]};
  std::sort(pairs.begin(), pairs.end());
  std::vector<double> conf_sum(bins, 0.0), acc_sum(bins, 0.0);
  std::vector<std::size_t> count(bins, 0);
  for (const auto& [conf, ok] : pairs) {
    int b = std::min(static_cast<int>(conf * bins), bins - 1);
    b = std::max(b, 0);
    conf_sum[b] += conf;
    acc_sum[b] += ok ? 1.0 : 0.0;
    ++count[b];
  }
  double ece = 0.0;
  const double n = static_cast<double>(confidence.size());
  for (int b = 0; b < bins; ++b) {
    if (count[b] == 0) continue;
    const double nb = static_cast<double>(count[b]);
    ece += nb / n * std::abs(acc_sum[b] / nb - conf_sum[b] / nb);
  }
  return ece;
}

/// Expected calibration error of a classifier on a labeled eval set.
inline double expected_calibration_error(const Predictor& classifier,
                                         std::span<const LabeledSample> eval, int bins = 15) {
  require(!eval.empty(), "expected_calibration_error: empty eval set");
  std::vector<double> conf(eval.size());
  std::vector<char> correct(eval.size());
  for (std::size_t i = 0; i < eval.size(); ++i) {
    const std::vector<double> q = classifier.predict_proba(eval[i].x);
    std::size_t pred = 0;
    for (std::size_t k = 1; k < q.size(); ++k)
      if (q[k] > q[pred]) pred = k;
    conf[i] = q[pred];
    correct[i] = pred == eval[i].y ? 1 : 0;
  }
  return ece_binned(conf, correct, bins);
}

/// Predictor wrapper exposing the exact oracle posterior ("perfect
/// classifier" injection for experiments).
class OraclePredictor : public Predictor {
 public:
  explicit OraclePredictor(const Oracle& oracle, double temperature = 1.0)
      : oracle_(oracle), temperature_(temperature) {}
  std::size_t num_classes() const override { return oracle_.num_classes(); }
  std::vector<double> predict_proba(std::span<const double> x) const override {
    return oracle_posterior(oracle_, x, temperature_);
  }

 private:
  const Oracle& oracle_;
  double temperature_;
};

}  // namespace oraclebench
