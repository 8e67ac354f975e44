#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mpckit/system.hpp"

namespace mpckit {

/// Stage cost weights: Q symmetric positive semidefinite, R symmetric
/// positive definite (both enforced at construction).
struct CostWeights {
  Matrix Q;
  Matrix R;

  CostWeights(Matrix q, Matrix r) : Q(std::move(q)), R(std::move(r)) {
    if (Q.rows() == 0 || Q.rows() != Q.cols())
      throw std::invalid_argument("CostWeights: Q must be square and non-empty");
    if (R.rows() == 0 || R.rows() != R.cols())
      throw std::invalid_argument("CostWeights: R must be square and non-empty");
    if (!Q.allFinite() || !R.allFinite())
      throw std::invalid_argument("CostWeights: data must be finite");
    if ((Q - Q.transpose()).cwiseAbs().maxCoeff() > 1e-10 ||
        (R - R.transpose()).cwiseAbs().maxCoeff() > 1e-10)
      throw std::invalid_argument("CostWeights: Q and R must be symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> qeig(Q);
    if (qeig.eigenvalues().minCoeff() < -1e-10)
      throw std::invalid_argument("CostWeights: Q must be positive semidefinite");
    if (Eigen::LLT<Matrix>(R).info() != Eigen::Success)
      throw std::invalid_argument("CostWeights: R must be positive definite");
  }
};

/// Infinite-horizon LQR gain for terminal cost Qf: K = (B'Qf B + R)^-1 B'Qf A,
/// so the terminal control law is u = -K x.
inline Matrix lqr_gain(const DiscreteLtiSystem& sys, const Matrix& qf, const CostWeights& w) {
  if (qf.rows() != sys.state_dim() || qf.cols() != sys.state_dim())
    throw std::invalid_argument("lqr_gain: Qf dimension must match the state");
  const Matrix btqb = sys.B.transpose() * qf * sys.B + w.R;
  return btqb.ldlt().solve(sys.B.transpose() * qf * sys.A);
}

/// Riccati terminal ingredients. residual is the fixed-point defect of Qf in
/// the Riccati equation; closed_loop_spectral_radius is rho(A - B K).
struct TerminalIngredients {
  Matrix Qf;
  Matrix K;
  double residual = 0.0;
  double closed_loop_spectral_radius = 0.0;
};

/// Discrete algebraic Riccati equation by fixed-point iteration from P0 = Q:
///   P+ = Q + A'PA - A'PB (B'PB + R)^-1 B'PA,
/// iterated until the step norm drops below step_tol. Each iterate is
/// re-symmetrised to stop drift. Non-convergence raises an error that names
/// the closed-loop spectral radius at the last iterate; convergence is
/// additionally certified by the residual bound 1e-9.
///
/// When step_norms is non-null it receives ||P_{j+1} - P_j||_F per iteration.
inline TerminalIngredients solve_dare(const DiscreteLtiSystem& sys, const CostWeights& w,
                                      double step_tol = 1e-12, int max_iter = 100000,
                                      std::vector<double>* step_norms = nullptr) {
  if (w.Q.rows() != sys.state_dim())
    throw std::invalid_argument("solve_dare: Q dimension must match the state");
  if (w.R.rows() != sys.input_dim())
    throw std::invalid_argument("solve_dare: R dimension must match the input");

  const Matrix& a = sys.A;
  const Matrix& b = sys.B;
  Matrix p = w.Q;
  bool converged = false;
  for (int j = 0; j < max_iter; ++j) {
    const Matrix pa = p * a;
    const Matrix pb = p * b;
    const Matrix gain = (b.transpose() * pb + w.R).ldlt().solve(b.transpose() * pa);
    Matrix next = w.Q + a.transpose() * pa - a.transpose() * pb * gain;
    next = 0.5 * (next + next.transpose());
    const double step = (next - p).norm();
    if (step_norms) step_norms->push_back(step);
    p = std::move(next);
    if (step <= step_tol) {
      converged = true;
      break;
    }
  }

  TerminalIngredients out;
  out.Qf = p;
  out.K = lqr_gain(sys, p, w);
  const Matrix residual_matrix =
      a.transpose() * p * a - p - a.transpose() * p * b * out.K + w.Q;
  out.residual = residual_matrix.norm();
  const Matrix closed_loop = a - b * out.K;
  out.closed_loop_spectral_radius =
      Eigen::EigenSolver<Matrix>(closed_loop, false).eigenvalues().cwiseAbs().maxCoeff();

  if (!converged || out.residual > 1e-9) {
    std::ostringstream msg;
    msg << "solve_dare: fixed-point iteration did not converge (closed-loop spectral radius "
        << out.closed_loop_spectral_radius << ", residual " << out.residual << ")";
    throw std::runtime_error(msg.str());
  }
  return out;
}

}  // namespace mpckit
