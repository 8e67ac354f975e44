#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mpckit/system.hpp"

namespace mpckit {

enum class SolveStatus { Optimal, Infeasible, Unbounded };

/// min cost'x subject to normals*x <= offsets, x free.
struct LpProblem {
  Vector cost;
  Matrix normals;
  Vector offsets;

  LpProblem(Vector c, Matrix a, Vector b)
      : cost(std::move(c)), normals(std::move(a)), offsets(std::move(b)) {
    if (cost.size() == 0)
      throw std::invalid_argument("LpProblem: cost vector must be non-empty");
    if (normals.cols() != cost.size())
      throw std::invalid_argument("LpProblem: normals column count must match cost size");
    if (normals.rows() != offsets.size())
      throw std::invalid_argument("LpProblem: normals row count must match offsets size");
    if (!cost.allFinite() || !normals.allFinite() || !offsets.allFinite())
      throw std::invalid_argument("LpProblem: data must be finite");
  }
};

/// Shared result type for LP and QP solves.
struct SolveOutcome {
  SolveStatus status = SolveStatus::Optimal;
  Vector point;                    // valid only when Optimal
  double value = 0.0;              // valid only when Optimal
  std::vector<int> active_rows;    // rows satisfied with equality at the optimum
  Vector farkas_certificate;       // valid only when Infeasible: w >= 0, w'A = 0, w'b < 0
};

namespace detail {

// Dense two-phase simplex on the standard form obtained by splitting the free
// variables (x = u - v), adding one slack per row, and one artificial per row.
// Rows are sign-flipped so the initial right-hand side is non-negative and the
// all-artificial basis is feasible for phase one. Pricing is most-negative
// reduced cost, switching to Bland's rule (anti-cycling) after a fixed number
// of pivots so termination is guaranteed.
class SimplexSolver {
 public:
  SimplexSolver(const LpProblem& p, double feas_tol)
      : n_(static_cast<int>(p.cost.size())),
        r_(static_cast<int>(p.normals.rows())),
        feas_tol_(feas_tol) {
    const int ncols = 2 * n_ + 2 * r_;
    tableau_ = Matrix::Zero(r_, ncols);
    rhs_ = Vector::Zero(r_);
    basis_.resize(r_);
    sigma_ = Vector::Ones(r_);
    dead_.assign(r_, false);
    for (int i = 0; i < r_; ++i) {
      if (p.offsets(i) < 0) sigma_(i) = -1.0;
      tableau_.row(i).head(n_) = sigma_(i) * p.normals.row(i);
      tableau_.row(i).segment(n_, n_) = -sigma_(i) * p.normals.row(i);
      tableau_(i, 2 * n_ + i) = sigma_(i);
      tableau_(i, 2 * n_ + r_ + i) = 1.0;
      rhs_(i) = sigma_(i) * p.offsets(i);
      basis_[i] = 2 * n_ + r_ + i;
    }
  }

  SolveOutcome solve(const LpProblem& p) {
    SolveOutcome out;

    // Phase one: minimise the sum of artificials.
    Vector phase1_cost = Vector::Zero(num_cols());
    phase1_cost.tail(r_).setOnes();
    set_objective(phase1_cost);
    run(/*bar_artificials=*/false);
    if (obj_ > feas_tol_) {
      out.status = SolveStatus::Infeasible;
      out.farkas_certificate = Vector(r_);
      // Dual prices: y_i = 1 - reduced cost of artificial i; w = -sigma .* y
      // satisfies w >= 0, w'A = 0, w'b = -(phase-one value) < 0.
      for (int i = 0; i < r_; ++i)
        out.farkas_certificate(i) = -sigma_(i) * (1.0 - zrow_(2 * n_ + r_ + i));
      return out;
    }
    drive_out_artificials();

    // Phase two: the original cost over u - v, artificials barred.
    Vector phase2_cost = Vector::Zero(num_cols());
    phase2_cost.head(n_) = p.cost;
    phase2_cost.segment(n_, n_) = -p.cost;
    set_objective(phase2_cost);
    if (!run(/*bar_artificials=*/true)) {
      out.status = SolveStatus::Unbounded;
      return out;
    }

    out.status = SolveStatus::Optimal;
    Vector vals = Vector::Zero(num_cols());
    for (int i = 0; i < r_; ++i)
      if (!dead_[i]) vals(basis_[i]) = rhs_(i);
    out.point = vals.head(n_) - vals.segment(n_, n_);
    out.value = p.cost.dot(out.point);
    const Vector residual = p.normals * out.point - p.offsets;
    for (int i = 0; i < r_; ++i)
      if (std::abs(residual(i)) <= kActiveTol) out.active_rows.push_back(i);
    return out;
  }

 private:
  static constexpr double kPivotTol = 1e-9;
  static constexpr double kActiveTol = 1e-7;

  int num_cols() const { return static_cast<int>(tableau_.cols()); }

  void set_objective(const Vector& cost) {
    zrow_ = cost;
    obj_ = 0.0;
    for (int i = 0; i < r_; ++i) {
      if (dead_[i] || cost(basis_[i]) == 0.0) continue;
      zrow_ -= cost(basis_[i]) * tableau_.row(i).transpose();
      obj_ += cost(basis_[i]) * rhs_(i);
    }
  }

  void pivot(int pr, int pc) {
    const double piv = tableau_(pr, pc);
    tableau_.row(pr) /= piv;
    rhs_(pr) /= piv;
    for (int i = 0; i < r_; ++i) {
      if (i == pr || dead_[i]) continue;
      const double f = tableau_(i, pc);
      if (f == 0.0) continue;
      tableau_.row(i) -= f * tableau_.row(pr);
      rhs_(i) -= f * rhs_(pr);
    }
    obj_ += zrow_(pc) * rhs_(pr);
    zrow_ -= zrow_(pc) * tableau_.row(pr).transpose();
    basis_[pr] = pc;
  }

  int choose_entering(bool bland, int limit) const {
    int best = -1;
    double best_val = -kPivotTol;
    for (int j = 0; j < limit; ++j) {
      if (zrow_(j) < best_val) {
        if (bland) return j;
        best_val = zrow_(j);
        best = j;
      }
    }
    return best;
  }

  int choose_leaving(int pc) const {
    int row = -1;
    double best_ratio = std::numeric_limits<double>::infinity();
    for (int i = 0; i < r_; ++i) {
      if (dead_[i]) continue;
      const double t = tableau_(i, pc);
      if (t <= kPivotTol) continue;
      const double ratio = rhs_(i) / t;
      if (ratio < best_ratio - 1e-12 ||
          (ratio < best_ratio + 1e-12 && (row < 0 || basis_[i] < basis_[row]))) {
        best_ratio = ratio;
        row = i;
      }
    }
    return row;
  }

  // Returns false when the objective is unbounded below.
  bool run(bool bar_artificials) {
    const int limit = bar_artificials ? 2 * n_ + r_ : num_cols();
    const int max_iter = 2000 + 50 * (r_ + n_);
    const int bland_after = 200 + 2 * (r_ + num_cols());
    for (int iter = 0; iter < max_iter; ++iter) {
      const int pc = choose_entering(iter >= bland_after, limit);
      if (pc < 0) return true;
      const int pr = choose_leaving(pc);
      if (pr < 0) {
        if (!bar_artificials)
          throw std::runtime_error("solve_lp: phase one unbounded (numerical failure)");
        return false;
      }
      pivot(pr, pc);
    }
    throw std::runtime_error("solve_lp: simplex iteration limit exceeded");
  }

  // Pivot zero-valued artificials out of the basis so phase two cannot make
  // them positive again; rows with no usable pivot entry are redundant
  // equalities and are dropped from further consideration.
  void drive_out_artificials() {
    for (int i = 0; i < r_; ++i) {
      if (dead_[i] || basis_[i] < 2 * n_ + r_) continue;
      int pc = -1;
      for (int j = 0; j < 2 * n_ + r_; ++j) {
        if (std::abs(tableau_(i, j)) > 1e-7) {
          pc = j;
          break;
        }
      }
      if (pc >= 0) {
        pivot(i, pc);
      } else {
        dead_[i] = true;
      }
    }
  }

  int n_, r_;
  double feas_tol_;
  Matrix tableau_;
  Vector rhs_;
  Vector zrow_;
  Vector sigma_;
  double obj_ = 0.0;
  std::vector<int> basis_;
  std::vector<bool> dead_;
};

}  // namespace detail

/// Solves min cost'x s.t. normals*x <= offsets over free x.
/// Infeasible outcomes carry a Farkas certificate; unbounded problems are
/// reported as such (no point). Deterministic for identical inputs.
inline SolveOutcome solve_lp(const LpProblem& p, double feas_tol = kFeasTol) {
  detail::SimplexSolver solver(p, feas_tol);
  return solver.solve(p);
}

}  // namespace mpckit
