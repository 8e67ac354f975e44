#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mpckit/lp.hpp"
#include "mpckit/system.hpp"

namespace mpckit {

/// min x'Hx + 2 f'x subject to normals*x <= offsets (note: no 1/2 factor).
/// H must be symmetric positive definite; both are enforced at construction
/// so every stored problem is strictly convex with a unique minimiser.
struct QpProblem {
  Matrix hessian;
  Vector linear;
  Matrix normals;
  Vector offsets;

  QpProblem(Matrix h, Vector f, Matrix a, Vector b)
      : hessian(std::move(h)), linear(std::move(f)), normals(std::move(a)), offsets(std::move(b)) {
    const auto n = hessian.rows();
    if (n == 0 || hessian.cols() != n)
      throw std::invalid_argument("QpProblem: hessian must be square and non-empty");
    if (linear.size() != n)
      throw std::invalid_argument("QpProblem: linear term size must match hessian");
    if (normals.rows() != offsets.size())
      throw std::invalid_argument("QpProblem: normals row count must match offsets size");
    if (normals.rows() > 0 && normals.cols() != n)
      throw std::invalid_argument("QpProblem: normals column count must match hessian");
    if (normals.rows() == 0) normals.resize(0, n);
    if (!hessian.allFinite() || !linear.allFinite() || !normals.allFinite() || !offsets.allFinite())
      throw std::invalid_argument("QpProblem: data must be finite");
    if ((hessian - hessian.transpose()).cwiseAbs().maxCoeff() > 1e-10)
      throw std::invalid_argument("QpProblem: hessian must be symmetric");
    if (Eigen::LLT<Matrix>(hessian).info() != Eigen::Success)
      throw std::invalid_argument("QpProblem: hessian must be positive definite");
  }
};

/// KKT residuals of an Optimal outcome, with multipliers recomputed from the
/// reported active set by least squares (independent of the solver's path).
struct KktReport {
  double stationarity = 0.0;     // ||2(Hx + f) + A_act' lambda||_2
  double max_violation = 0.0;    // max(0, max_i a_i'x - b_i)
  double min_multiplier = 0.0;   // +inf when the active set is empty
  Vector multipliers;            // one per active row
};

/// Primal active-set method for strictly convex QPs.
///
/// A feasible start comes from the hint when it satisfies the constraints,
/// otherwise from a phase-one LP (whose Farkas certificate is passed through
/// on infeasible problems). The working set starts empty; each iteration
/// solves the equality-constrained subproblem via a Schur complement in the
/// Cholesky factors of H, then either takes the full step, adds the blocking
/// row (lowest index on ties), or drops the most negative multiplier.
/// Deterministic for identical inputs; the hint only affects the path, never
/// the (unique) minimiser.
inline SolveOutcome solve_qp(const QpProblem& p,
                             const std::optional<Vector>& hint = std::nullopt,
                             double feas_tol = kFeasTol,
                             double kkt_tol = kKktTol) {
  const int n = static_cast<int>(p.hessian.rows());
  const int r = static_cast<int>(p.normals.rows());
  const Eigen::LLT<Matrix> hfact(p.hessian);

  SolveOutcome out;
  Vector x;
  if (hint && hint->size() == n &&
      (r == 0 || ((p.normals * *hint - p.offsets).maxCoeff() <= feas_tol))) {
    x = *hint;
  } else if (r == 0) {
    x = Vector::Zero(n);
  } else {
    const SolveOutcome phase1 = solve_lp(LpProblem(Vector::Zero(n), p.normals, p.offsets), feas_tol);
    if (phase1.status == SolveStatus::Infeasible) {
      out.status = SolveStatus::Infeasible;
      out.farkas_certificate = phase1.farkas_certificate;
      return out;
    }
    x = phase1.point;
  }

  std::vector<int> working;  // sorted row indices
  const int max_iter = std::max(100, 50 * r);
  for (int iter = 0; iter < max_iter; ++iter) {
    const Vector grad = p.hessian * x + p.linear;
    Vector step;
    Vector lambda;
    if (working.empty()) {
      step = -hfact.solve(grad);
    } else {
      const int w = static_cast<int>(working.size());
      Matrix awt(n, w);
      for (int k = 0; k < w; ++k) awt.col(k) = p.normals.row(working[k]).transpose();
      const Matrix hinv_awt = hfact.solve(awt);
      const Matrix schur = awt.transpose() * hinv_awt;
      Eigen::LLT<Matrix> sfact(schur);
      Vector mu;
      const Vector srhs = -awt.transpose() * hfact.solve(grad);
      if (sfact.info() == Eigen::Success) {
        mu = sfact.solve(srhs);
      } else {
        Eigen::LDLT<Matrix> sldlt(schur);
        if (sldlt.info() != Eigen::Success)
          throw std::runtime_error("solve_qp: degenerate working set");
        mu = sldlt.solve(srhs);
      }
      step = -hfact.solve(grad + awt * mu);
      lambda = 2.0 * mu;
    }

    if (step.cwiseAbs().maxCoeff() <= 1e-11 * (1.0 + x.cwiseAbs().maxCoeff())) {
      if (working.empty() || lambda.minCoeff() >= -kkt_tol) {
        out.status = SolveStatus::Optimal;
        out.point = x;
        out.value = x.dot(p.hessian * x) + 2.0 * p.linear.dot(x);
        out.active_rows = working;
        return out;
      }
      int drop = 0;
      for (int k = 1; k < static_cast<int>(lambda.size()); ++k)
        if (lambda(k) < lambda(drop)) drop = k;
      working.erase(working.begin() + drop);
      continue;
    }

    // Ratio test over rows outside the working set.
    double alpha = 1.0;
    int blocking = -1;
    for (int i = 0; i < r; ++i) {
      if (std::binary_search(working.begin(), working.end(), i)) continue;
      const double d = p.normals.row(i).dot(step);
      if (d <= 1e-12) continue;
      const double ratio = std::max(0.0, p.offsets(i) - p.normals.row(i).dot(x)) / d;
      if (ratio < alpha - 1e-12) {
        alpha = ratio;
        blocking = i;
      }
    }
    x += alpha * step;
    if (blocking >= 0)
      working.insert(std::lower_bound(working.begin(), working.end(), blocking), blocking);
  }
  throw std::runtime_error("solve_qp: active-set iteration limit exceeded");
}

/// Recomputes KKT residuals for an Optimal QP outcome. Multipliers are the
/// least-squares solution of the stationarity system on the active rows, so
/// the report is an independent check rather than an echo of solver state.
inline KktReport check_kkt(const QpProblem& p, const SolveOutcome& out) {
  if (out.status != SolveStatus::Optimal)
    throw std::invalid_argument("check_kkt: outcome must be Optimal");
  const int n = static_cast<int>(p.hessian.rows());
  const int w = static_cast<int>(out.active_rows.size());
  const Vector grad2 = 2.0 * (p.hessian * out.point + p.linear);

  KktReport report;
  if (w == 0) {
    report.stationarity = grad2.norm();
    report.min_multiplier = std::numeric_limits<double>::infinity();
  } else {
    Matrix awt(n, w);
    for (int k = 0; k < w; ++k) awt.col(k) = p.normals.row(out.active_rows[k]).transpose();
    report.multipliers = awt.completeOrthogonalDecomposition().solve(-grad2);
    report.stationarity = (grad2 + awt * report.multipliers).norm();
    report.min_multiplier = report.multipliers.minCoeff();
  }
  if (p.normals.rows() > 0)
    report.max_violation = std::max(0.0, (p.normals * out.point - p.offsets).maxCoeff());
  return report;
}

}  // namespace mpckit
