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
#include <deque>
#include <vector>

#include "oraclebench/math.hpp"
#include "oraclebench/tensor.hpp"

namespace oraclebench {

// Reverse-mode tape over a fixed operator set: matmul, add, sub, mul (same
// shape), tanh, relu, exp, log, sum, mean, softplus, affine_broadcast. All
// values are computed eagerly; parents always precede children so the tape is
// a DAG by construction. One Graph belongs to one training step.
class Graph {
 public:
  enum class Op {
    kLeaf,
    kMatmul,
    kAdd,
    kSub,
    kMul,
    kTanh,
    kRelu,
    kExp,
    kLog,
    kSum,
    kMean,
    kSoftplus,
    kAffineBroadcast,
  };

  using NodeId = int;

  NodeId leaf(Tensor value, bool trainable = false) {
    nodes_.push_back(Node{Op::kLeaf, -1, -1, -1, std::move(value), Tensor{}, trainable});
    return last();
  }

  NodeId matmul(NodeId a, NodeId b) {
    return push(Op::kMatmul, matmul_value(val(a), val(b)), a, b);
  }

  NodeId add(NodeId a, NodeId b) { return elementwise2(Op::kAdd, a, b); }
  NodeId sub(NodeId a, NodeId b) { return elementwise2(Op::kSub, a, b); }
  NodeId mul(NodeId a, NodeId b) { return elementwise2(Op::kMul, a, b); }

  NodeId tanh(NodeId a) {
    Tensor out = val(a);
    for (auto& v : out.data()) v = std::tanh(v);
    return push(Op::kTanh, std::move(out), a);
  }

  NodeId relu(NodeId a) {
    Tensor out = val(a);
    for (auto& v : out.data()) v = v > 0.0 ? v : 0.0;
    return push(Op::kRelu, std::move(out), a);
  }

  NodeId exp(NodeId a) {
    Tensor out = val(a);
    for (auto& v : out.data()) v = std::exp(v);
    return push(Op::kExp, std::move(out), a);
  }

  NodeId log(NodeId a) {
    Tensor out = val(a);
    for (auto& v : out.data()) v = std::log(v);
    return push(Op::kLog, std::move(out), a);
  }

  NodeId softplus(NodeId a) {
    Tensor out = val(a);
    for (auto& v : out.data()) v = log1pexp(v);
    return push(Op::kSoftplus, std::move(out), a);
  }

  NodeId sum(NodeId a) {
    double s = 0.0;
    for (double v : val(a).data()) s += v;
    return push(Op::kSum, Tensor::scalar(s), a);
  }

  NodeId mean(NodeId a) {
    double s = 0.0;
    for (double v : val(a).data()) s += v;
    return push(Op::kMean, Tensor::scalar(s / static_cast<double>(val(a).size())), a);
  }

  /// Per-dimension affine applied to every row: out[i,j] = x[i,j]*a[j] + b[j].
  /// The only broadcast in the op set.
  NodeId affine_broadcast(NodeId x, NodeId scale, NodeId shift) {
    const Tensor& xv = val(x);
    const Tensor& av = val(scale);
    const Tensor& bv = val(shift);
    require(xv.rank() == 2, "affine_broadcast: x must be rank 2");
    require(av.rank() == 1 && bv.rank() == 1, "affine_broadcast: scale/shift must be rank 1");
    require(av.size() == xv.cols() && bv.size() == xv.cols(),
            "affine_broadcast: scale/shift length != row width");
    Tensor out({xv.rows(), xv.cols()});
    for (std::size_t i = 0; i < xv.rows(); ++i)
      for (std::size_t j = 0; j < xv.cols(); ++j)
        out.at(i, j) = xv.at(i, j) * av[j] + bv[j];
    return push(Op::kAffineBroadcast, std::move(out), x, scale, shift);
  }

  const Tensor& value(NodeId id) const { return nodes_[id].value; }
  const Tensor& adjoint(NodeId id) const { return nodes_[id].adjoint; }
  std::size_t size() const { return nodes_.size(); }

  /// Reverse pass from a scalar root; fills adjoints for every node at or
  /// below root. Adjoints of unreachable nodes stay zero.
  void backward(NodeId root) {
    require(root >= 0 && root < static_cast<NodeId>(nodes_.size()), "backward: bad root");
    require(nodes_[root].value.size() == 1, "backward: root must be scalar-valued");
    for (auto& n : nodes_) n.adjoint = Tensor(n.value.shape());
    nodes_[root].adjoint[0] = 1.0;
    for (NodeId i = root; i >= 0; --i) propagate(i);
    for (auto& n : nodes_) n.adjoint.check_finite("backward");
  }

 private:
  struct Node {
    Op op;
    NodeId a, b, c;
    Tensor value;
    Tensor adjoint;
    bool trainable = false;
  };

  NodeId last() const { return static_cast<NodeId>(nodes_.size()) - 1; }
  const Tensor& val(NodeId id) const { return nodes_[id].value; }

  NodeId push(Op op, Tensor value, NodeId a, NodeId b = -1, NodeId c = -1) {
    value.check_finite(op_name(op));
    nodes_.push_back(Node{op, a, b, c, std::move(value), Tensor{}, false});
    return last();
  }

  NodeId elementwise2(Op op, NodeId a, NodeId b) {
    const Tensor& av = val(a);
    const Tensor& bv = val(b);
    require(av.same_shape(bv), "elementwise op: shape mismatch");
    Tensor out(av.shape());
    for (std::size_t i = 0; i < av.size(); ++i) {
      switch (op) {
        case Op::kAdd: out[i] = av[i] + bv[i]; break;
        case Op::kSub: out[i] = av[i] - bv[i]; break;
        case Op::kMul: out[i] = av[i] * bv[i]; break;
        default: require(false, "elementwise2: bad op");
      }
    }
    return push(op, std::move(out), a, b);
  }

  void propagate(NodeId id) {
    Node& n = nodes_[id];
    const Tensor& up = n.adjoint;
    switch (n.op) {
      case Op::kLeaf:
        break;
      case Op::kMatmul: {
        // dA = up * B^T, dB = A^T * up
        accumulate(n.a, matmul_value(up, transpose(val(n.b))));
        accumulate(n.b, matmul_value(transpose(val(n.a)), up));
        break;
      }
      case Op::kAdd: {
        accumulate(n.a, up);
        accumulate(n.b, up);
        break;
      }
      case Op::kSub: {
        accumulate(n.a, up);
        Tensor neg = up;
        for (auto& v : neg.data()) v = -v;
        accumulate(n.b, neg);
        break;
      }
      case Op::kMul: {
        Tensor da(up.shape()), db(up.shape());
        const Tensor& av = val(n.a);
        const Tensor& bv = val(n.b);
        for (std::size_t i = 0; i < up.size(); ++i) {
          da[i] = up[i] * bv[i];
          db[i] = up[i] * av[i];
        }
        accumulate(n.a, da);
        accumulate(n.b, db);
        break;
      }
      case Op::kTanh: {
        Tensor da(up.shape());
        for (std::size_t i = 0; i < up.size(); ++i)
          da[i] = up[i] * (1.0 - n.value[i] * n.value[i]);
        accumulate(n.a, da);
        break;
      }
      case Op::kRelu: {
        Tensor da(up.shape());
        const Tensor& x = val(n.a);
        for (std::size_t i = 0; i < up.size(); ++i) da[i] = x[i] > 0.0 ? up[i] : 0.0;
        accumulate(n.a, da);
        break;
      }
      case Op::kExp: {
        Tensor da(up.shape());
        for (std::size_t i = 0; i < up.size(); ++i) da[i] = up[i] * n.value[i];
        accumulate(n.a, da);
        break;
      }
      case Op::kLog: {
        Tensor da(up.shape());
        const Tensor& x = val(n.a);
        for (std::size_t i = 0; i < up.size(); ++i) da[i] = up[i] / x[i];
        accumulate(n.a, da);
        break;
      }
      case Op::kSoftplus: {
        Tensor da(up.shape());
        const Tensor& x = val(n.a);
        for (std::size_t i = 0; i < up.size(); ++i) da[i] = up[i] * sigmoid(x[i]);
        accumulate(n.a, da);
        break;
      }
      case Op::kSum: {
        accumulate(n.a, Tensor::full(val(n.a).shape(), up[0]));
        break;
      }
      case Op::kMean: {
        accumulate(n.a,
                   Tensor::full(val(n.a).shape(), up[0] / static_cast<double>(val(n.a).size())));
        break;
      }
      case Op::kAffineBroadcast: {
        const Tensor& x = val(n.a);
        const Tensor& a = val(n.b);
        Tensor dx({x.rows(), x.cols()});
        Tensor da({a.size()});
        Tensor db({a.size()});
        for (std::size_t i = 0; i < x.rows(); ++i)
          for (std::size_t j = 0; j < x.cols(); ++j) {
            const double u = up.at(i, j);
            dx.at(i, j) = u * a[j];
            da[j] += u * x.at(i, j);
            db[j] += u;
          }
        accumulate(n.a, dx);
        accumulate(n.b, da);
        accumulate(n.c, db);
        break;
      }
    }
  }

  void accumulate(NodeId id, const Tensor& grad) {
    Tensor& adj = nodes_[id].adjoint;
    for (std::size_t i = 0; i < adj.size(); ++i) adj[i] += grad[i];
  }

  static const char* op_name(Op op) {
    switch (op) {
      case Op::kLeaf: return "leaf";
      case Op::kMatmul: return "matmul";
      case Op::kAdd: return "add";
      case Op::kSub: return "sub";
      case Op::kMul: return "mul";
      case Op::kTanh: return "tanh";
      case Op::kRelu: return "relu";
      case Op::kExp: return "exp";
      case Op::kLog: return "log";
      case Op::kSum: return "sum";
      case Op::kMean: return "mean";
      case Op::kSoftplus: return "softplus";
      case Op::kAffineBroadcast: return "affine_broadcast";
    }
    return "?";
  }

  // deque keeps Tensor references from value() stable across pushes
  std::deque<Node> nodes_;
};

// ---- composite builders (no ops beyond the fixed set) ----

/// x[m,n] * w[n,h] + b[h] row-broadcast.
inline Graph::NodeId linear(Graph& g, Graph::NodeId x, Graph::NodeId w, Graph::NodeId b) {
  Graph::NodeId xw = g.matmul(x, w);
  Graph::NodeId ones = g.leaf(Tensor::full({g.value(xw).cols()}, 1.0));
  return g.affine_broadcast(xw, ones, b);
}

/// Multiply every entry by a constant.
inline Graph::NodeId scale_by(Graph& g, Graph::NodeId x, double s) {
  Graph::NodeId c = g.leaf(Tensor::full(g.value(x).shape(), s));
  return g.mul(x, c);
}

/// Stable per-row log-sum-exp of z[m,n], returned as [m,1]. The row max is a
/// detached constant; the shift identity lse(z) = m + lse(z - m) keeps both
/// the value and the gradient exact.
inline Graph::NodeId row_log_sum_exp(Graph& g, Graph::NodeId z) {
  const Tensor& zv = g.value(z);
  require(zv.rank() == 2, "row_log_sum_exp: rank-2 input required");
  const std::size_t m = zv.rows(), n = zv.cols();
  Tensor max_full({m, n});
  Tensor max_col({m, 1});
  for (std::size_t i = 0; i < m; ++i) {
    double mx = zv.at(i, 0);
    for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, zv.at(i, j));
    max_col.at(i, 0) = mx;
    for (std::size_t j = 0; j < n; ++j) max_full.at(i, j) = mx;
  }
  Graph::NodeId shifted = g.sub(z, g.leaf(std::move(max_full)));
  Graph::NodeId e = g.exp(shifted);
  Graph::NodeId row_sum = g.matmul(e, g.leaf(Tensor::full({n, 1}, 1.0)));
  Graph::NodeId lse_shifted = g.log(row_sum);
  return g.add(lse_shifted, g.leaf(std::move(max_col)));
}

/// Per-row log-softmax of logits[m,k].
inline Graph::NodeId log_softmax_rows(Graph& g, Graph::NodeId logits) {
  const std::size_t k = g.value(logits).cols();
  Graph::NodeId lse = row_log_sum_exp(g, logits);
  Graph::NodeId lse_full = g.matmul(lse, g.leaf(Tensor::full({1, k}, 1.0)));
  return g.sub(logits, lse_full);
}

/// Mean cross-entropy -1/m * sum(targets .* log_softmax(logits)).
inline Graph::NodeId softmax_cross_entropy(Graph& g, Graph::NodeId logits,
                                           const Tensor& targets) {
  const std::size_t rows = g.value(logits).rows();
  require(targets.same_shape(g.value(logits)), "softmax_cross_entropy: target shape mismatch");
  Graph::NodeId lp = log_softmax_rows(g, logits);
  Graph::NodeId weighted = g.mul(g.leaf(targets), lp);
  Graph::NodeId total = g.sum(weighted);
  return scale_by(g, total, -1.0 / static_cast<double>(rows));
}

}  // namespace oraclebench
