#pragma once

#include <Eigen/Dense>
#include <stdexcept>

namespace mpckit {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Default tolerances shared across the toolkit. Every routine that uses one
// also accepts it as a parameter, so callers can tighten or relax per call.
inline constexpr double kFeasTol = 1e-8;  // LP feasibility / emptiness
inline constexpr double kSetTol = 1e-6;   // set containment and equality
inline constexpr double kKktTol = 1e-8;   // QP stationarity and multiplier sign

/// Discrete-time LTI plant x+ = A x + B u.
struct DiscreteLtiSystem {
  Matrix A;
  Matrix B;

  DiscreteLtiSystem(Matrix a, Matrix b) : A(std::move(a)), B(std::move(b)) {
    if (A.rows() == 0 || A.rows() != A.cols())
      throw std::invalid_argument("DiscreteLtiSystem: A must be square and non-empty");
    if (B.rows() != A.rows() || B.cols() == 0)
      throw std::invalid_argument("DiscreteLtiSystem: B must have as many rows as A and at least one column");
  }

  int state_dim() const { return static_cast<int>(A.rows()); }
  int input_dim() const { return static_cast<int>(B.cols()); }
};

}  // namespace mpckit
