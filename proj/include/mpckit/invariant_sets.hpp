#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

#include "mpckit/mpc.hpp"
#include "mpckit/polytope.hpp"
#include "mpckit/system.hpp"

namespace mpckit {

/// Outcome of the stabilizing-set iteration. `set` is the last iterate
/// (the fixed point when converged is true); history_sizes records the row
/// count of every computed iterate, which is a useful growth diagnostic.
struct StabilizingSetResult {
  HPolyhedron set;
  bool converged = false;
  int iterations = 0;
  std::vector<int> history_sizes;
};

namespace detail {

// The set of one-step input effects { -B u : u in U }, so that
// "exists u in U with A x + B u in S" becomes "A x in S + effects".
inline HPolyhedron input_effect_set(const DiscreteLtiSystem& sys, const HPolyhedron& input_set) {
  return affine_image(-sys.B, input_set);
}

// One-step controllable-to-S states: { x : exists u in U, A x + B u in S }.
inline HPolyhedron backward_step(const DiscreteLtiSystem& sys, const HPolyhedron& s,
                                 const HPolyhedron& effects) {
  return affine_preimage(minkowski_sum(s, effects), sys.A);
}

}  // namespace detail

/// Maximal stabilizing set: the states from which some admissible input
/// sequence reaches the origin while respecting the constraints. Computed as
/// the growing fixed point of S+ = backward_step(S) ∩ X starting from {0};
/// convergence is two-sided set equality of consecutive iterates at `tol`.
/// Both constraint sets must contain the origin (checked), which makes the
/// iteration monotonically growing and the limit control invariant.
inline StabilizingSetResult max_stabilizing_set(const DiscreteLtiSystem& sys,
                                                const HPolyhedron& state_set,
                                                const HPolyhedron& input_set, int max_iter = 500,
                                                double tol = kSetTol) {
  if (state_set.dim() != sys.state_dim())
    throw std::invalid_argument("max_stabilizing_set: state set dimension must match the state");
  if (input_set.dim() != sys.input_dim())
    throw std::invalid_argument("max_stabilizing_set: input set dimension must match the input");
  if (max_iter < 1) throw std::invalid_argument("max_stabilizing_set: max_iter must be >= 1");
  if (!contains(state_set, Vector::Zero(sys.state_dim())) ||
      !contains(input_set, Vector::Zero(sys.input_dim())))
    throw std::invalid_argument("max_stabilizing_set: constraint sets must contain the origin");

  const HPolyhedron effects = detail::input_effect_set(sys, input_set);
  StabilizingSetResult result{HPolyhedron::singleton(Vector::Zero(sys.state_dim()))};
  for (int i = 1; i <= max_iter; ++i) {
    HPolyhedron next = intersect(detail::backward_step(sys, result.set, effects), state_set);
    result.iterations = i;
    result.history_sizes.push_back(next.num_rows());
    const bool fixed_point = set_equal(next, result.set, tol);
    result.set = std::move(next);
    if (fixed_point) {
      result.converged = true;
      break;
    }
  }
  return result;
}

/// Certificate for control invariance of S under the constrained plant:
/// S ⊆ { x : exists u in U, A x + B u in S }. Requires S ⊆ X (checked),
/// since an invariant set outside the state constraints is meaningless here.
inline bool certify_control_invariant(const DiscreteLtiSystem& sys, const HPolyhedron& s,
                                      const HPolyhedron& state_set, const HPolyhedron& input_set,
                                      double tol = kSetTol) {
  if (s.dim() != sys.state_dim())
    throw std::invalid_argument("certify_control_invariant: set dimension must match the state");
  if (input_set.dim() != sys.input_dim())
    throw std::invalid_argument("certify_control_invariant: input set dimension must match the input");
  if (!is_subset(s, state_set, tol))
    throw std::invalid_argument("certify_control_invariant: the candidate set must lie inside the state constraints");
  const HPolyhedron effects = detail::input_effect_set(sys, input_set);
  return is_subset(s, detail::backward_step(sys, s, effects), tol);
}

/// States from which the horizon problem admits some feasible input sequence:
/// the projection of the joint (state, input-sequence) constraint system onto
/// the state block. row_cap bounds the intermediate row growth of the
/// elimination (a diagnostic error reports the offending count when hit).
inline HPolyhedron feasible_initial_set(const LiftedProblem& lp, int row_cap = 20000) {
  const int n = lp.state_dim;
  const auto input_len = lp.forced_response.cols();
  const auto rows = lp.state_normals.rows() + lp.input_normals.rows();

  Matrix f = Matrix::Zero(rows, n + input_len);
  Vector g(rows);
  f.topLeftCorner(lp.state_normals.rows(), n) = lp.state_normals * lp.free_response;
  f.topRightCorner(lp.state_normals.rows(), input_len) = lp.state_normals * lp.forced_response;
  f.bottomRightCorner(lp.input_normals.rows(), input_len) = lp.input_normals;
  g << lp.state_offsets, lp.input_offsets;

  std::vector<int> keep(n);
  for (int i = 0; i < n; ++i) keep[i] = i;
  return fourier_motzkin_project(HPolyhedron::from_inequalities(std::move(f), std::move(g)), keep,
                                 row_cap);
}

}  // namespace mpckit
