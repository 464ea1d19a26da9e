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
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "oraclebench/common.hpp"

namespace oraclebench {

/// Dense row-major real64 tensor. Rank 1 ([n]) and rank 2 ([m,n]) cover every
/// model in this toolkit. Entries are kept finite: any op that would produce
/// NaN/Inf raises instead of propagating.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<std::size_t> shape)
      : shape_(std::move(shape)), data_(count(shape_), 0.0) {}

  Tensor(std::vector<std::size_t> shape, std::vector<double> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    require(data_.size() == count(shape_), "Tensor: data length != shape product");
    check_finite("Tensor()");
  }

  static Tensor scalar(double v) { return Tensor({1}, {v}); }

  static Tensor full(std::vector<std::size_t> shape, double v) {
    Tensor t(std::move(shape));
    for (auto& x : t.data_) x = v;
    t.check_finite("Tensor::full");
    return t;
  }

  static Tensor row(std::span<const double> v) {
    return Tensor({1, v.size()}, {v.begin(), v.end()});
  }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  std::size_t rows() const { return rank() == 2 ? shape_[0] : 1; }
  std::size_t cols() const { return rank() == 2 ? shape_[1] : size(); }

  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  void check_finite(const char* where) const {
    for (double v : data_)
      if (!std::isfinite(v))
        throw std::runtime_error(std::string(where) + ": non-finite value produced");
  }

 private:
  static std::size_t count(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t s : shape) {
      require(s > 0, "Tensor: shape entries must be positive");
      n *= s;
    }
    return n;
  }

  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

/// C = A[m,k] * B[k,n]. ikj loop order keeps the inner stride unit-length.
inline Tensor matmul_value(const Tensor& a, const Tensor& b) {
  require(a.rank() == 2 && b.rank() == 2, "matmul: rank-2 operands required");
  require(a.shape()[1] == b.shape()[0], "matmul: inner dimensions differ");
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  Tensor c({m, n});
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* pc = c.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = pa + i * k;
    double* crow = pc + i * n;
    for (std::size_t kk = 0; kk < k; ++kk) {
      const double av = arow[kk];
      if (av == 0.0) continue;
      const double* brow = pb + kk * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  return c;
}

inline Tensor transpose(const Tensor& a) {
  require(a.rank() == 2, "transpose: rank-2 required");
  const std::size_t m = a.shape()[0], n = a.shape()[1];
  Tensor t({n, m});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) t.at(j, i) = a.at(i, j);
  return t;
}

}  // namespace oraclebench
