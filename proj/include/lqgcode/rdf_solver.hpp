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

#include <lqgcode/control_synthesis.hpp>
#include <lqgcode/error.hpp>
#include <lqgcode/linalg.hpp>

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace lqgcode {

// min over (P, Pi) of 1/2 (log2 det W - log2 det Pi) subject to
//   tr(Theta P) + tr(W S) <= gamma,
//   P <= A P A^T + W,
//   [[P - Pi, P A^T], [A P, A P A^T + W]] >= 0.
struct RdfProblem {
  PlantModel plant;
  ControllerGains gains;
  double gamma = 0.0;
};

struct NamedResidual {
  std::string name;
  double value = 0.0;
};

struct RdfSolution {
  Matrix P;
  Matrix Pi;
  double rate_bits = 0.0;
  double raw_objective_bits = 0.0;
  double dual_gap = 0.0;  // bits, central-path bound
  bool clamped_negative = false;
  int newton_steps = 0;
  std::vector<NamedResidual> constraint_residuals;
};

struct SolutionCheck {
  // Signed slacks: negative means the constraint is violated.
  std::vector<NamedResidual> residuals;
  double objective_bits = 0.0;  // recomputed raw objective
  bool degenerate_pi = false;
  bool negative_objective = false;

  double value(const std::string& name) const {
    for (const auto& r : residuals) {
      if (r.name == name) return r.value;
    }
    return std::numeric_limits<double>::quiet_NaN();
  }

  // Largest constraint violation (0 for a feasible candidate), plus any
  // mismatch between the reported and recomputed rate.
  double max_violation() const {
    double worst = 0.0;
    for (const auto& r : residuals) {
      if (r.name == "rate_mismatch") {
        worst = std::max(worst, std::abs(r.value));
      } else {
        worst = std::max(worst, -r.value);
      }
    }
    return worst;
  }
};

namespace detail {

inline Matrix schur_block(const Matrix& A, const Matrix& W, const Matrix& P, const Matrix& Pi) {
  const Eigen::Index m = A.rows();
  Matrix blk(2 * m, 2 * m);
  blk.topLeftCorner(m, m) = P - Pi;
  blk.topRightCorner(m, m) = P * A.transpose();
  blk.bottomLeftCorner(m, m) = A * P;
  blk.bottomRightCorner(m, m) = A * P * A.transpose() + W;
  return symmetrize(blk);
}

inline double rate_objective_bits(const Matrix& W, const Matrix& Pi) {
  const double ld_pi = logdet_sym(Pi);
  if (!std::isfinite(ld_pi)) return std::numeric_limits<double>::infinity();
  return 0.5 * (logdet_sym(W) - ld_pi) / std::log(2.0);
}

// Affine view of the program over the stacked symmetric coordinates of
// (P, Pi). Each barrier block is F(x) = F0 + sum_k x_k F_k.
class LogDetProgram {
 public:
  explicit LogDetProgram(const RdfProblem& pr)
      : A_(pr.plant.A), W_(pr.plant.W), Theta_(pr.gains.Theta),
        budget_(pr.gamma - (pr.plant.W * pr.gains.S).trace()), m_(A_.rows()) {
    for (Eigen::Index j = 0; j < m_; ++j) {
      for (Eigen::Index i = 0; i <= j; ++i) {
        Matrix E = Matrix::Zero(m_, m_);
        E(i, j) = 1.0;
        E(j, i) = 1.0;
        basis_.push_back(E);
      }
    }
    nb_ = static_cast<Eigen::Index>(basis_.size());
    const Eigen::Index n = 2 * nb_;
    trace_dir_.resize(n);
    order_dir_.resize(n);
    schur_dir_.resize(n);
    pi_dir_.resize(n);
    for (Eigen::Index k = 0; k < n; ++k) {
      const bool is_p = k < nb_;
      const Matrix& E = basis_[static_cast<std::size_t>(is_p ? k : k - nb_)];
      const Matrix Z = Matrix::Zero(m_, m_);
      trace_dir_[k] = is_p ? -(Theta_ * E).trace() : 0.0;
      order_dir_[k] = is_p ? Matrix(A_ * E * A_.transpose() - E) : Z;
      schur_dir_[k] = is_p ? schur_block(A_, Matrix::Zero(m_, m_), E, Z)
                           : schur_block(A_, Matrix::Zero(m_, m_), Z, E);
      pi_dir_[k] = is_p ? Z : E;
    }
  }

  Eigen::Index size() const { return 2 * nb_; }
  double budget() const { return budget_; }
  // Sum of barrier block dimensions (duality gap is degree / t).
  double degree() const { return 1.0 + 3.0 * static_cast<double>(m_); }

  Matrix P(const Vector& x) const { return assemble(x, 0); }
  Matrix Pi(const Vector& x) const { return assemble(x, nb_); }

  Vector coords(const Matrix& P, const Matrix& Pi) const {
    Vector x(2 * nb_);
    Eigen::Index k = 0;
    for (Eigen::Index j = 0; j < m_; ++j) {
      for (Eigen::Index i = 0; i <= j; ++i, ++k) {
        x(k) = P(i, j);
        x(nb_ + k) = Pi(i, j);
      }
    }
    return x;
  }

  // t * (-ln det Pi) - ln(trace slack) - ln det(order) - ln det(schur),
  // or +inf outside the domain.
  double barrier(const Vector& x, double t) const {
    const Matrix P = this->P(x), Pi = this->Pi(x);
    const double slack = budget_ - (Theta_ * P).trace();
    if (!(slack > 0.0)) return std::numeric_limits<double>::infinity();
    const double ld_pi = chol_logdet(Pi);
    const double ld_ord = chol_logdet(symmetrize(A_ * P * A_.transpose() + W_ - P));
    const double ld_schur = chol_logdet(schur_block(A_, W_, P, Pi));
    if (!std::isfinite(ld_pi) || !std::isfinite(ld_ord) || !std::isfinite(ld_schur)) {
      return std::numeric_limits<double>::infinity();
    }
    return -t * ld_pi - std::log(slack) - ld_ord - ld_schur;
  }

  void derivatives(const Vector& x, double t, Vector& grad, Matrix& hess) const {
    const Eigen::Index n = size();
    grad = Vector::Zero(n);
    hess = Matrix::Zero(n, n);
    const Matrix P = this->P(x), Pi = this->Pi(x);
    const double slack = budget_ - (Theta_ * P).trace();
    for (Eigen::Index k = 0; k < n; ++k) {
      grad(k) -= trace_dir_[k] / slack;
      for (Eigen::Index l = 0; l < n; ++l) hess(k, l) += trace_dir_[k] * trace_dir_[l] / (slack * slack);
    }
    accumulate(sym_inverse(Pi), pi_dir_, t, grad, hess);
    accumulate(sym_inverse(symmetrize(A_ * P * A_.transpose() + W_ - P)), order_dir_, 1.0, grad, hess);
    accumulate(sym_inverse(schur_block(A_, W_, P, Pi)), schur_dir_, 1.0, grad, hess);
    hess = symmetrize(hess);
  }

 private:
  Matrix assemble(const Vector& x, Eigen::Index offset) const {
    Matrix M = Matrix::Zero(m_, m_);
    Eigen::Index k = 0;
    for (Eigen::Index j = 0; j < m_; ++j) {
      for (Eigen::Index i = 0; i <= j; ++i, ++k) {
        M(i, j) = x(offset + k);
        M(j, i) = x(offset + k);
      }
    }
    return M;
  }

  static double chol_logdet(const Matrix& M) {
    Eigen::LLT<Matrix> llt(M);
    if (llt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
    double acc = 0.0;
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
      const double d = llt.matrixL()(i, i);
      if (!(d > 0.0)) return -std::numeric_limits<double>::infinity();
      acc += 2.0 * std::log(d);
    }
    return acc;
  }

  // Adds weight * (-ln det F) derivatives given F^{-1} and the directions.
  static void accumulate(const Matrix& Finv, const std::vector<Matrix>& dirs, double weight,
                         Vector& grad, Matrix& hess) {
    const Eigen::Index n = static_cast<Eigen::Index>(dirs.size());
    std::vector<Matrix> prod(static_cast<std::size_t>(n));
    for (Eigen::Index k = 0; k < n; ++k) prod[k] = Finv * dirs[k];
    for (Eigen::Index k = 0; k < n; ++k) {
      grad(k) -= weight * prod[k].trace();
      for (Eigen::Index l = k; l < n; ++l) {
        const double h = weight * (prod[k].array() * prod[l].transpose().array()).sum();
        hess(k, l) += h;
        if (l != k) hess(l, k) += h;
      }
    }
  }

  Matrix A_, W_, Theta_;
  double budget_;
  Eigen::Index m_;
  Eigen::Index nb_ = 0;
  std::vector<Matrix> basis_;
  std::vector<double> trace_dir_;
  std::vector<Matrix> order_dir_, schur_dir_, pi_dir_;
};

}  // namespace detail

inline SolutionCheck check_solution(const RdfProblem& problem, const RdfSolution& candidate) {
  const Matrix& A = problem.plant.A;
  const Matrix& W = problem.plant.W;
  const Eigen::Index m = A.rows();
  if (candidate.P.rows() != m || candidate.P.cols() != m || candidate.Pi.rows() != m ||
      candidate.Pi.cols() != m) {
    throw Error(ErrorCode::DimensionMismatch, "candidate dimensions do not match the plant");
  }
  SolutionCheck out;
  const Matrix P = symmetrize(candidate.P), Pi = symmetrize(candidate.Pi);
  const double cost = (problem.gains.Theta * P).trace() + (W * problem.gains.S).trace();
  out.residuals.push_back({"control_budget", problem.gamma - cost});
  out.residuals.push_back({"ordering", min_sym_eigenvalue(A * P * A.transpose() + W - P)});
  out.residuals.push_back({"schur", min_sym_eigenvalue(detail::schur_block(A, W, P, Pi))});
  out.residuals.push_back({"P_psd", min_sym_eigenvalue(P)});
  out.residuals.push_back({"Pi_psd", min_sym_eigenvalue(Pi)});
  out.objective_bits = detail::rate_objective_bits(W, Pi);
  out.degenerate_pi = !std::isfinite(out.objective_bits);
  out.negative_objective = !out.degenerate_pi && out.objective_bits < 0.0;
  if (!out.degenerate_pi) {
    out.residuals.push_back({"rate_mismatch", candidate.rate_bits - std::max(0.0, out.objective_bits)});
  }
  return out;
}

struct RdfOptions {
  double gap_tolerance_bits = 1e-8;
  double barrier_growth = 10.0;
  int max_outer = 60;
  int max_newton = 200;
};

inline RdfSolution solve_rdf(const RdfProblem& problem, const RdfOptions& opt = {}) {
  const PlantModel& plant = problem.plant;
  const double base_cost = (plant.W * problem.gains.S).trace();
  if (!(problem.gamma > base_cost + 1e-12)) {
    throw Error(ErrorCode::Infeasible, "gamma must exceed tr(W S) = " + std::to_string(base_cost));
  }
  detail::LogDetProgram prog(problem);

  // Strictly feasible start: P0 = s W with s small enough for the budget,
  // Pi0 = half of the largest Schur-feasible Pi.
  const double theta_w = (problem.gains.Theta * plant.W).trace();
  double s = 0.5;
  if (theta_w > 0.0) s = std::min(s, 0.5 * prog.budget() / theta_w);
  Matrix P0 = s * plant.W;
  const Matrix info = sym_inverse(P0) + plant.A.transpose() * sym_inverse(plant.W) * plant.A;
  Matrix Pi0 = 0.5 * sym_inverse(info);
  Vector x = prog.coords(P0, Pi0);
  if (!std::isfinite(prog.barrier(x, 1.0))) throw Error(ErrorCode::NoConvergence, "could not build a strictly feasible start");

  RdfSolution sol;
  const double to_bits = 1.0 / (2.0 * std::log(2.0));
  double t = 1.0;
  bool done = false;
  Vector grad;
  Matrix hess;
  for (int outer = 0; outer < opt.max_outer && !done; ++outer) {
    bool centered = false;
    double decrement = std::numeric_limits<double>::infinity();
    for (int it = 0; it < opt.max_newton; ++it) {
      prog.derivatives(x, t, grad, hess);
      Eigen::LDLT<Matrix> ldlt(hess);
      const Vector dx = -ldlt.solve(grad);
      decrement = -grad.dot(dx);
      ++sol.newton_steps;
      if (!(decrement >= 0.0) || !dx.allFinite()) break;
      if (decrement * 0.5 <= 1e-10) {
        centered = true;
        break;
      }
      // Inside the quadratic region a feasible full step always decreases
      // the barrier; testing that on function values fails once t is large
      // enough for rounding in f to swamp the decrease.
      if (std::sqrt(decrement) < 0.25) {
        const Vector trial = x + dx;
        if (std::isfinite(prog.barrier(trial, t))) {
          x = trial;
          continue;
        }
      }
      const double f0 = prog.barrier(x, t);
      double step = 1.0;
      bool moved = false;
      for (int ls = 0; ls < 80; ++ls, step *= 0.5) {
        const Vector trial = x + step * dx;
        const double f1 = prog.barrier(trial, t);
        if (std::isfinite(f1) && f1 <= f0 - 0.25 * step * decrement) {
          x = trial;
          moved = true;
          break;
        }
      }
      if (!moved) break;
    }
    // Stalling with a small decrement still certifies the gap to first order.
    if (!centered) centered = decrement * 0.5 <= 1e-6;
    if (!centered) throw Error(ErrorCode::NoConvergence, "barrier centering failed at t = " + std::to_string(t));
    const double gap = prog.degree() / t * to_bits;
    if (gap <= opt.gap_tolerance_bits) {
      sol.dual_gap = gap;
      done = true;
    } else {
      t *= opt.barrier_growth;
    }
  }
  if (!done) throw Error(ErrorCode::NoConvergence, "barrier path did not reach the gap tolerance");

  sol.P = prog.P(x);
  sol.Pi = prog.Pi(x);
  sol.raw_objective_bits = detail::rate_objective_bits(plant.W, sol.Pi);
  sol.clamped_negative = sol.raw_objective_bits < 0.0;
  sol.rate_bits = std::max(0.0, sol.raw_objective_bits);
  sol.constraint_residuals = check_solution(problem, sol).residuals;
  return sol;
}

struct RatePoint {
  double gamma = 0.0;
  std::optional<RdfSolution> solution;
  std::optional<Error> error;
};

// Per-point errors are reported in place; the sweep continues.
inline std::vector<RatePoint> rate_curve(const PlantModel& plant, const ControllerGains& gains,
                                         const std::vector<double>& gammas, const RdfOptions& opt = {}) {
  for (std::size_t i = 1; i < gammas.size(); ++i) {
    if (!(gammas[i] > gammas[i - 1])) throw Error(ErrorCode::BadParameter, "gammas must be strictly increasing");
  }
  std::vector<RatePoint> out;
  out.reserve(gammas.size());
  for (double g : gammas) {
    RatePoint pt;
    pt.gamma = g;
    try {
      pt.solution = solve_rdf(RdfProblem{plant, gains, g}, opt);
    } catch (const Error& e) {
      pt.error = e;
    }
    out.push_back(std::move(pt));
  }
  const RatePoint* prev = nullptr;
  for (const auto& pt : out) {
    if (!pt.solution) continue;
    if (prev && pt.solution->rate_bits > prev->solution->rate_bits + 1e-6) {
      throw Error(ErrorCode::NoConvergence, "rate increased with gamma at " + std::to_string(pt.gamma));
    }
    prev = &pt;
  }
  return out;
}

}  // namespace lqgcode
