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

#include <lqgcode/error.hpp>
#include <lqgcode/linalg.hpp>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>

#include <cmath>
#include <complex>
#include <string>
#include <vector>

namespace lqgcode {

// Dynamics x_{t+1} = A x_t + B u_t + w_t with w_t ~ N(0, W) and
// x_0 ~ N(0, X0); stage cost |x_{t+1}|_Q^2 + |u_t|_Phi^2.
struct PlantModel {
  Matrix A;
  Matrix B;
  Matrix W;
  Matrix Q;
  Matrix Phi;
  Matrix X0;

  Eigen::Index state_dim() const { return A.rows(); }
  Eigen::Index input_dim() const { return B.cols(); }
};

struct ControllerGains {
  Matrix S;      // stabilizing DARE solution
  Matrix K;      // u = K x
  Matrix Theta;  // K^T (B^T S B + Phi) K
};

struct KalmanGains {
  Matrix J;     // posterior update gain
  Matrix L;     // A J
  Matrix R_cl;  // A - L C
};

struct CoderSynthesis {
  Matrix P_hat;
  Matrix P_plus;
  Matrix C;
  double Delta = 1.0;
  Matrix J;
  Matrix L;
  Matrix R_cl;
  double rate_bound = 0.0;  // bits per step

  Eigen::Index state_dim() const { return P_hat.rows(); }
};

namespace detail {

inline void require_square(const Matrix& m, Eigen::Index n, const char* name) {
  if (m.rows() != n || m.cols() != n) {
    throw Error(ErrorCode::DimensionMismatch,
                std::string(name) + " must be " + std::to_string(n) + "x" + std::to_string(n));
  }
}

inline bool is_symmetric(const Matrix& m, double tol = 1e-10) {
  return (m - m.transpose()).norm() <= tol * (1.0 + m.norm());
}

inline double dare_residual(const PlantModel& p, const Matrix& S) {
  const Matrix& A = p.A;
  const Matrix& B = p.B;
  const Matrix BtSB = B.transpose() * S * B + p.Phi;
  const Matrix BtSA = B.transpose() * S * A;
  const Matrix res = A.transpose() * S * A - S -
                     BtSA.transpose() * BtSB.ldlt().solve(BtSA) + p.Q;
  return res.norm();
}

inline Matrix feedback_gain(const PlantModel& p, const Matrix& S) {
  const Matrix BtSB = p.B.transpose() * S * p.B + p.Phi;
  return -BtSB.ldlt().solve(p.B.transpose() * S * p.A);
}

// Solves X = F^T X F + Y for Schur-stable F (Kronecker form; fine for the
// state dimensions this library targets).
inline Matrix solve_discrete_lyapunov(const Matrix& F, const Matrix& Y) {
  const Eigen::Index n = F.rows();
  const Matrix Ft = F.transpose();
  const Matrix kron = Matrix::Identity(n * n, n * n) - Eigen::kroneckerProduct(Ft, Ft).eval();
  Eigen::Map<const Vector> y(Y.data(), n * n);
  Vector x = kron.partialPivLu().solve(y);
  Matrix X = Eigen::Map<Matrix>(x.data(), n, n);
  return symmetrize(X);
}

// Structure-preserving doubling for X = A^T X (I + G X)^{-1} A + H.
inline bool doubling_dare(const Matrix& A0, const Matrix& G0, const Matrix& H0, Matrix& X,
                          int max_iter) {
  const Eigen::Index n = A0.rows();
  const Matrix I = Matrix::Identity(n, n);
  Matrix Ak = A0, Gk = symmetrize(G0), Hk = symmetrize(H0);
  for (int it = 0; it < max_iter; ++it) {
    Eigen::PartialPivLU<Matrix> lu(I + Gk * Hk);
    const Matrix WiA = lu.solve(Ak);
    const Matrix WiG = lu.solve(Gk);
    const Matrix Hn = symmetrize(Hk + Ak.transpose() * Hk * WiA);
    const Matrix Gn = symmetrize(Gk + Ak * WiG * Ak.transpose());
    const Matrix An = Ak * WiA;
    if (!Hn.allFinite() || !Gn.allFinite() || !An.allFinite()) return false;
    const double change = (Hn - Hk).norm();
    Ak = An;
    Gk = Gn;
    Hk = Hn;
    if (change <= 1e-15 * (1.0 + Hk.norm())) break;
  }
  X = Hk;
  return true;
}

}  // namespace detail

inline double spectral_radius(const Matrix& M) {
  if (M.rows() != M.cols()) throw Error(ErrorCode::DimensionMismatch, "spectral_radius needs a square matrix");
  if (M.size() == 0) return 0.0;
  Eigen::EigenSolver<Matrix> es(M, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

// (||M^n||_2)^{1/n} for n = first..last.
inline std::vector<double> gelfand_sequence(const Matrix& M, int first, int last) {
  std::vector<double> out;
  if (first < 1 || last < first) return out;
  Matrix power = M;
  for (int n = 1; n <= last; ++n) {
    if (n > 1) power = power * M;
    if (n >= first) out.push_back(std::pow(norm2(power), 1.0 / n));
  }
  return out;
}

// PBH test on the non-strictly-stable eigenvalues of A.
inline bool stabilizable(const Matrix& A, const Matrix& B) {
  const Eigen::Index m = A.rows();
  if (A.cols() != m || B.rows() != m) throw Error(ErrorCode::DimensionMismatch, "stabilizable: A is m x m, B is m x u");
  using CMatrix = Eigen::MatrixXcd;
  Eigen::ComplexEigenSolver<CMatrix> es(A.cast<std::complex<double>>(), false);
  for (Eigen::Index i = 0; i < m; ++i) {
    const std::complex<double> lambda = es.eigenvalues()(i);
    if (std::abs(lambda) < 1.0) continue;
    CMatrix pbh(m, m + B.cols());
    pbh.leftCols(m) = lambda * CMatrix::Identity(m, m) - A.cast<std::complex<double>>();
    pbh.rightCols(B.cols()) = B.cast<std::complex<double>>();
    Eigen::JacobiSVD<CMatrix> svd(pbh);
    const auto& sv = svd.singularValues();
    const double tol = 1e-10 * (sv.size() ? sv(0) : 0.0);
    Eigen::Index rank = 0;
    for (Eigen::Index k = 0; k < sv.size(); ++k) {
      if (sv(k) > tol && sv(k) > 0.0) ++rank;
    }
    if (rank < m) return false;
  }
  return true;
}

// Throws BadParameter / DimensionMismatch when the plant data is unusable.
inline void validate_plant(const PlantModel& p) {
  const Eigen::Index m = p.A.rows();
  if (m == 0) throw Error(ErrorCode::DimensionMismatch, "empty state dimension");
  detail::require_square(p.A, m, "A");
  if (p.B.rows() != m || p.B.cols() == 0) throw Error(ErrorCode::DimensionMismatch, "B must be m x u with u >= 1");
  detail::require_square(p.W, m, "W");
  detail::require_square(p.Q, m, "Q");
  detail::require_square(p.X0, m, "X0");
  detail::require_square(p.Phi, p.B.cols(), "Phi");
  for (const Matrix* mat : {&p.A, &p.B, &p.W, &p.Q, &p.Phi, &p.X0}) {
    if (!mat->allFinite()) throw Error(ErrorCode::NonFinite, "plant matrices must be finite");
  }
  struct Named { const Matrix* mat; const char* name; bool definite; };
  for (const Named& nm : {Named{&p.W, "W", true}, Named{&p.Phi, "Phi", true},
                          Named{&p.Q, "Q", false}, Named{&p.X0, "X0", false}}) {
    if (!detail::is_symmetric(*nm.mat)) throw Error(ErrorCode::BadParameter, std::string(nm.name) + " must be symmetric");
    const double lo = min_sym_eigenvalue(*nm.mat);
    if (nm.definite ? !(lo > 1e-12) : (lo < -1e-12 * (1.0 + nm.mat->norm()))) {
      throw Error(ErrorCode::BadParameter, std::string(nm.name) + (nm.definite ? " must be positive definite" : " must be positive semidefinite"));
    }
  }
}

inline constexpr int kDareIterationCap = 10000;
inline constexpr double kDareResidualTol = 1e-9;
inline constexpr double kStabilityMargin = 1e-9;

inline ControllerGains solve_dare(const PlantModel& plant) {
  validate_plant(plant);
  if (!stabilizable(plant.A, plant.B)) throw Error(ErrorCode::NotStabilizable, "(A, B) fails the PBH test");

  const Eigen::Index m = plant.state_dim();
  const Matrix G = plant.B * plant.Phi.ldlt().solve(plant.B.transpose());
  const auto converged = [&](const Matrix& S) {
    return S.allFinite() && detail::dare_residual(plant, S) < kDareResidualTol * (1.0 + S.norm());
  };
  const auto stabilizing = [&](const Matrix& S) {
    return spectral_radius(plant.A + plant.B * detail::feedback_gain(plant, S)) < 1.0 - kStabilityMargin;
  };

  Matrix S;
  int budget = kDareIterationCap;
  bool ok = detail::doubling_dare(plant.A, G, plant.Q, S, 200);
  budget -= 200;
  if (!ok || !S.allFinite() || !stabilizing(S)) {
    // Q may leave unstable modes unobserved; start Newton from a gain that
    // stabilizes the plant under an identity state weight instead.
    ok = detail::doubling_dare(plant.A, G, Matrix::Identity(m, m), S, 200);
    budget -= 200;
    if (!ok || !stabilizing(S)) throw Error(ErrorCode::NoConvergence, "no stabilizing initial gain");
  }

  // Hewer (Newton-Kleinman) refinement of the candidate.
  Matrix K = detail::feedback_gain(plant, S);
  for (; budget > 0; --budget) {
    const Matrix F = plant.A + plant.B * K;
    const Matrix Sn = detail::solve_discrete_lyapunov(F, plant.Q + K.transpose() * plant.Phi * K);
    const double change = (Sn - S).norm();
    S = Sn;
    K = detail::feedback_gain(plant, S);
    if (!S.allFinite()) break;
    if (change <= 1e-12 * (1.0 + S.norm()) && converged(S)) break;
  }
  if (!converged(S)) throw Error(ErrorCode::NoConvergence, "DARE residual above tolerance");
  if (!stabilizing(S)) throw Error(ErrorCode::NoConvergence, "DARE solution is not stabilizing");

  ControllerGains gains;
  gains.S = symmetrize(S);
  gains.K = detail::feedback_gain(plant, gains.S);
  const Matrix BtSB = plant.B.transpose() * gains.S * plant.B + plant.Phi;
  gains.Theta = symmetrize(gains.K.transpose() * BtSB * gains.K);
  return gains;
}

// C = (Delta / sqrt(12)) G with G^T G = P_hat^{-1} - P_plus^{-1}, G the
// symmetric PSD root. Rank-deficient information yields zero directions.
inline Matrix sensitivity_factorization(const Matrix& P_hat, const Matrix& P_plus, double Delta) {
  const Eigen::Index m = P_hat.rows();
  detail::require_square(P_hat, m, "P_hat");
  detail::require_square(P_plus, m, "P_plus");
  if (!(Delta > 0.0) || !std::isfinite(Delta)) throw Error(ErrorCode::BadParameter, "Delta must be positive");
  for (const Matrix* p : {&P_hat, &P_plus}) {
    const Eigen::VectorXd ev = sym_eigenvalues(*p);
    if (!(ev.minCoeff() > 1e-14 * std::max(1.0, ev.maxCoeff()))) {
      throw Error(ErrorCode::Singular, "covariance is numerically singular");
    }
  }
  const Matrix info = symmetrize(sym_inverse(P_hat) - sym_inverse(P_plus));
  const double lo = min_sym_eigenvalue(info);
  if (lo < -1e-8 * std::max(1.0, norm2(sym_inverse(P_hat)))) {
    throw Error(ErrorCode::NotOrdered, "P_hat^{-1} - P_plus^{-1} has eigenvalue " + std::to_string(lo));
  }
  return (Delta / std::sqrt(12.0)) * psd_sqrt(info);
}

inline KalmanGains kalman_synthesis(const Matrix& P_plus, const Matrix& C, double Delta, const Matrix& A) {
  const Eigen::Index m = A.rows();
  detail::require_square(P_plus, m, "P_plus");
  detail::require_square(C, m, "C");
  const Matrix noise = Matrix::Identity(m, m) * (Delta * Delta / 12.0);
  const Matrix innov = symmetrize(C * P_plus * C.transpose() + noise);
  KalmanGains k;
  // J = P_plus C^T innov^{-1}, solved as innov J^T = C P_plus.
  k.J = innov.ldlt().solve(C * P_plus).transpose();
  k.L = A * k.J;
  k.R_cl = A - k.L * C;
  const double rho = spectral_radius(k.R_cl);
  if (!(rho < 1.0 - kStabilityMargin)) {
    throw Error(ErrorCode::UnstableFilter, "spectral radius of A - LC is " + std::to_string(rho));
  }
  return k;
}

// Builds every coder matrix from the rate-distortion minimizer. A coder with
// no information flow (rate zero) is rejected unless open-loop operation is
// explicitly allowed.
// Rates at or below this are treated as zero: the barrier solver leaves a
// residue of the order of its duality gap on rate-zero problems.
inline constexpr double kRateZeroBits = 1e-6;

inline CoderSynthesis synthesize_coder(const PlantModel& plant, const Matrix& P_hat, double rate_bits,
                                       double Delta, bool allow_open_loop = false) {
  CoderSynthesis s;
  s.P_hat = symmetrize(P_hat);
  s.P_plus = symmetrize(plant.A * s.P_hat * plant.A.transpose() + plant.W);
  const double order_gap = min_sym_eigenvalue(s.P_plus - s.P_hat);
  if (order_gap < -1e-10 * (1.0 + s.P_plus.norm())) {
    throw Error(ErrorCode::NotOrdered, "P_hat exceeds A P_hat A^T + W");
  }
  s.Delta = Delta;
  s.C = sensitivity_factorization(s.P_hat, s.P_plus, Delta);
  s.rate_bound = rate_bits;
  if (!allow_open_loop && (norm2(s.C) <= 1e-9 * Delta || rate_bits <= kRateZeroBits)) {
    throw Error(ErrorCode::DegenerateCoder, "rate-zero synthesis has no symbol stream");
  }
  KalmanGains k = kalman_synthesis(s.P_plus, s.C, Delta, plant.A);
  s.J = std::move(k.J);
  s.L = std::move(k.L);
  s.R_cl = std::move(k.R_cl);
  return s;
}

}  // namespace lqgcode
