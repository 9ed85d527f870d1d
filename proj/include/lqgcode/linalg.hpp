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

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

namespace lqgcode {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

inline Eigen::VectorXd sym_eigenvalues(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

inline double min_sym_eigenvalue(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return sym_eigenvalues(m).minCoeff();
}

inline double max_sym_eigenvalue(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return sym_eigenvalues(m).maxCoeff();
}

// Largest singular value.
inline double norm2(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

// Natural log-determinant of a symmetric matrix through its eigenvalues.
// Returns -inf when the matrix is not positive definite.
inline double logdet_sym(const Matrix& m) {
  const Eigen::VectorXd ev = sym_eigenvalues(m);
  double acc = 0.0;
  for (double v : ev) {
    if (!(v > 0.0)) return -std::numeric_limits<double>::infinity();
    acc += std::log(v);
  }
  return acc;
}

inline double log2det_sym(const Matrix& m) { return logdet_sym(m) / std::log(2.0); }

// Symmetric PSD square root with negative eigenvalues clamped to zero.
inline Matrix psd_sqrt(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m));
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

inline Matrix sym_inverse(const Matrix& m) {
  Eigen::LDLT<Matrix> ldlt(symmetrize(m));
  return symmetrize(ldlt.solve(Matrix::Identity(m.rows(), m.cols())));
}

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace lqgcode
