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
#include <vector>

#include "oraclebench/tensor.hpp"

namespace oraclebench {

/// Adam with bias correction. One instance per training run; slot order must
/// match the parameter order on every step.
class Adam {
 public:
  explicit Adam(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads) {
    require(params.size() == grads.size(), "Adam::step: params/grads size mismatch");
    if (m_.empty()) {
      for (const Tensor* p : params) {
        m_.emplace_back(p->shape());
        v_.emplace_back(p->shape());
      }
    }
    require(m_.size() == params.size(), "Adam::step: parameter count changed");
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t p = 0; p < params.size(); ++p) {
      Tensor& w = *params[p];
      const Tensor& g = *grads[p];
      for (std::size_t i = 0; i < w.size(); ++i) {
        m_[p][i] = beta1_ * m_[p][i] + (1.0 - beta1_) * g[i];
        v_[p][i] = beta2_ * v_[p][i] + (1.0 - beta2_) * g[i] * g[i];
        const double mhat = m_[p][i] / bc1;
        const double vhat = v_[p][i] / bc2;
        w[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
      }
      w.check_finite("Adam::step");
    }
  }

  double learning_rate() const { return lr_; }
  void set_learning_rate(double lr) { lr_ = lr; }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<Tensor> m_, v_;
};

}  // namespace oraclebench
