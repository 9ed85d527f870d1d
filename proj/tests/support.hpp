// Copyright 2026 The lqgcode Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <lqgcode/lqgcode.hpp>

#include <initializer_list>

namespace testing_support {

inline lqgcode::Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
  lqgcode::Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index r = 0;
  for (const auto& row : rows) {
    Eigen::Index c = 0;
    for (double v : row) m(r, c++) = v;
    ++r;
  }
  return m;
}

inline lqgcode::Matrix scalar(double v) { return lqgcode::Matrix::Constant(1, 1, v); }

inline lqgcode::PlantModel scalar_plant(double a, double b = 1.0, double w = 1.0, double q = 1.0, double phi = 1.0) {
  return lqgcode::PlantModel{scalar(a), scalar(b), scalar(w), scalar(q), scalar(phi), scalar(1.0)};
}

inline lqgcode::PlantModel mimo_plant() {
  const lqgcode::Matrix I = lqgcode::Matrix::Identity(2, 2);
  return lqgcode::PlantModel{mat({{1.1, 0.2}, {0.0, 0.8}}), I, I, I, I, I};
}

inline lqgcode::RdfProblem problem_at_scale(const lqgcode::PlantModel& p, double scale) {
  const auto g = lqgcode::solve_dare(p);
  return lqgcode::RdfProblem{p, g, scale * (p.W * g.S).trace()};
}

}  // namespace testing_support
