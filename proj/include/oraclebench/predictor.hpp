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

#include <span>
#include <vector>

namespace oraclebench {

/// Anything that maps an input to a distribution over classes.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual std::size_t num_classes() const = 0;
  virtual std::vector<double> predict_proba(std::span<const double> x) const = 0;
};

}  // namespace oraclebench
