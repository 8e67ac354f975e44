#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mpckit/polytope.hpp"
#include "mpckit/qp.hpp"
#include "mpckit/riccati.hpp"
#include "mpckit/system.hpp"

namespace mpckit {

/// One finite-horizon MPC problem: plant, horizon, weights, terminal cost and
/// the constraint polytopes. The terminal set is optional; when absent the
/// terminal state is only required to satisfy the plain state constraints.
struct MpcConfig {
  DiscreteLtiSystem system;
  int horizon;
  CostWeights weights;
  Matrix terminal_cost;
  HPolyhedron state_set;
  HPolyhedron input_set;
  std::optional<HPolyhedron> terminal_set;

  MpcConfig(DiscreteLtiSystem sys, int n_horizon, CostWeights w, Matrix qf, HPolyhedron x_set,
            HPolyhedron u_set, std::optional<HPolyhedron> xf_set = std::nullopt)
      : system(std::move(sys)),
        horizon(n_horizon),
        weights(std::move(w)),
        terminal_cost(std::move(qf)),
        state_set(std::move(x_set)),
        input_set(std::move(u_set)),
        terminal_set(std::move(xf_set)) {
    const int n = system.state_dim();
    const int m = system.input_dim();
    if (horizon < 1) throw std::invalid_argument("MpcConfig: horizon must be >= 1");
    if (weights.Q.rows() != n) throw std::invalid_argument("MpcConfig: Q dimension must match the state");
    if (weights.R.rows() != m) throw std::invalid_argument("MpcConfig: R dimension must match the input");
    if (terminal_cost.rows() != n || terminal_cost.cols() != n)
      throw std::invalid_argument("MpcConfig: terminal cost dimension must match the state");
    if ((terminal_cost - terminal_cost.transpose()).cwiseAbs().maxCoeff() > 1e-10)
      throw std::invalid_argument("MpcConfig: terminal cost must be symmetric");
    if (Eigen::SelfAdjointEigenSolver<Matrix>(terminal_cost).eigenvalues().minCoeff() < -1e-10)
      throw std::invalid_argument("MpcConfig: terminal cost must be positive semidefinite");
    if (state_set.dim() != n) throw std::invalid_argument("MpcConfig: state set dimension must match the state");
    if (input_set.dim() != m) throw std::invalid_argument("MpcConfig: input set dimension must match the input");
    if (terminal_set && terminal_set->dim() != n)
      throw std::invalid_argument("MpcConfig: terminal set dimension must match the state");
    const Vector x_origin = Vector::Zero(n);
    const Vector u_origin = Vector::Zero(m);
    if (!contains(state_set, x_origin) || !contains(input_set, u_origin) ||
        (terminal_set && !contains(*terminal_set, x_origin)))
      throw std::invalid_argument("MpcConfig: constraint sets must contain the origin");
  }
};

/// Horizon-condensed form of the prediction. The stacked state sequence is
/// free_response * x + forced_response * U over the stacked input sequence U;
/// constraint rows act on those stacked vectors and are kept verbatim (no
/// pruning), so row counts follow directly from the per-stage sets.
struct LiftedProblem {
  Matrix free_response;   // (N+1)n x n, stacked powers of A
  Matrix forced_response; // (N+1)n x Nm, block lower-triangular impulse response
  Matrix state_cost;      // blockdiag(Q, ..., Q, Qf)
  Matrix input_cost;      // blockdiag(R, ..., R)
  Matrix state_normals;   // per-stage state rows; terminal block from the
  Vector state_offsets;   //   terminal set when present, else the state set
  Matrix input_normals;   // blockdiag of the input-set rows
  Vector input_offsets;
  int state_dim = 0;
  int input_dim = 0;
  int horizon = 0;
};

inline LiftedProblem build_lifted(const MpcConfig& cfg) {
  const int n = cfg.system.state_dim();
  const int m = cfg.system.input_dim();
  const int nh = cfg.horizon;

  LiftedProblem lp;
  lp.state_dim = n;
  lp.input_dim = m;
  lp.horizon = nh;

  std::vector<Matrix> powers(nh + 1);
  powers[0] = Matrix::Identity(n, n);
  for (int i = 1; i <= nh; ++i) powers[i] = cfg.system.A * powers[i - 1];

  lp.free_response.resize((nh + 1) * n, n);
  for (int i = 0; i <= nh; ++i) lp.free_response.middleRows(i * n, n) = powers[i];

  lp.forced_response = Matrix::Zero((nh + 1) * n, nh * m);
  for (int i = 1; i <= nh; ++i)
    for (int j = 0; j < i; ++j)
      lp.forced_response.block(i * n, j * m, n, m) = powers[i - j - 1] * cfg.system.B;

  lp.state_cost = Matrix::Zero((nh + 1) * n, (nh + 1) * n);
  for (int i = 0; i < nh; ++i) lp.state_cost.block(i * n, i * n, n, n) = cfg.weights.Q;
  lp.state_cost.block(nh * n, nh * n, n, n) = cfg.terminal_cost;

  lp.input_cost = Matrix::Zero(nh * m, nh * m);
  for (int i = 0; i < nh; ++i) lp.input_cost.block(i * m, i * m, m, m) = cfg.weights.R;

  const HPolyhedron& terminal = cfg.terminal_set ? *cfg.terminal_set : cfg.state_set;
  const int stage_rows = cfg.state_set.num_rows();
  const int term_rows = terminal.num_rows();
  lp.state_normals = Matrix::Zero(nh * stage_rows + term_rows, (nh + 1) * n);
  lp.state_offsets.resize(nh * stage_rows + term_rows);
  for (int i = 0; i < nh; ++i) {
    lp.state_normals.block(i * stage_rows, i * n, stage_rows, n) = cfg.state_set.normals();
    lp.state_offsets.segment(i * stage_rows, stage_rows) = cfg.state_set.offsets();
  }
  lp.state_normals.block(nh * stage_rows, nh * n, term_rows, n) = terminal.normals();
  lp.state_offsets.tail(term_rows) = terminal.offsets();

  const int input_rows = cfg.input_set.num_rows();
  lp.input_normals = Matrix::Zero(nh * input_rows, nh * m);
  lp.input_offsets.resize(nh * input_rows);
  for (int i = 0; i < nh; ++i) {
    lp.input_normals.block(i * input_rows, i * m, input_rows, m) = cfg.input_set.normals();
    lp.input_offsets.segment(i * input_rows, input_rows) = cfg.input_set.offsets();
  }
  return lp;
}

/// Raw inequality system over a stacked input sequence. Rows are kept exactly
/// as generated -- including rows whose normal is zero (state constraints the
/// input cannot influence), which is why this is not an HPolyhedron: such a
/// row with negative offset is precisely how infeasibility of the current
/// state shows up.
struct InequalitySystem {
  Matrix normals;
  Vector offsets;
};

/// Constraints on the stacked input sequence for the current state x:
/// state rows mapped through the forced response plus the input rows.
inline InequalitySystem admissible_input_set(const LiftedProblem& lp, const Vector& x) {
  if (x.size() != lp.state_dim)
    throw std::invalid_argument("admissible_input_set: state dimension mismatch");
  const auto sr = lp.state_normals.rows();
  const auto ir = lp.input_normals.rows();
  InequalitySystem sys;
  sys.normals.resize(sr + ir, lp.forced_response.cols());
  sys.normals << lp.state_normals * lp.forced_response, lp.input_normals;
  sys.offsets.resize(sr + ir);
  sys.offsets << lp.state_offsets - lp.state_normals * (lp.free_response * x), lp.input_offsets;
  return sys;
}

/// Condensed QP over the stacked input sequence, plus the constant term that
/// the condensation drops from the objective.
struct CondensedQp {
  QpProblem qp;
  double constant = 0.0;
};

/// Stacked reference over one horizon window: states is (N+1)n long, inputs
/// is Nm long.
struct ReferenceTrajectory {
  Vector states;
  Vector inputs;
};

namespace detail {

inline CondensedQp build_condensed(const LiftedProblem& lp, const Vector& x,
                                   const ReferenceTrajectory* ref) {
  if (x.size() != lp.state_dim)
    throw std::invalid_argument("build_condensed_qp: state dimension mismatch");
  if (ref) {
    if (ref->states.size() != lp.free_response.rows())
      throw std::invalid_argument("build_tracking_qp: state reference must be (N+1)*n long");
    if (ref->inputs.size() != lp.forced_response.cols())
      throw std::invalid_argument("build_tracking_qp: input reference must be N*m long");
  }

  Matrix hessian = lp.forced_response.transpose() * lp.state_cost * lp.forced_response + lp.input_cost;
  hessian = 0.5 * (hessian + hessian.transpose());

  Vector drift = lp.free_response * x;
  if (ref) drift -= ref->states;
  Vector linear = lp.forced_response.transpose() * (lp.state_cost * drift);
  double constant = drift.dot(lp.state_cost * drift);
  if (ref) {
    linear -= lp.input_cost * ref->inputs;
    constant += ref->inputs.dot(lp.input_cost * ref->inputs);
  }

  InequalitySystem cons = admissible_input_set(lp, x);
  return CondensedQp{QpProblem(std::move(hessian), std::move(linear), std::move(cons.normals),
                               std::move(cons.offsets)),
                     constant};
}

}  // namespace detail

/// Regulation objective: drive the state to the origin.
inline CondensedQp build_regulation_qp(const LiftedProblem& lp, const Vector& x) {
  return detail::build_condensed(lp, x, nullptr);
}

/// Tracking objective: penalise deviation from a reference window. With an
/// all-zero reference this produces bit-identical data to the regulation QP.
inline CondensedQp build_tracking_qp(const LiftedProblem& lp, const Vector& x,
                                     const ReferenceTrajectory& ref) {
  return detail::build_condensed(lp, x, &ref);
}

/// One receding-horizon step: the applied input is the first element of the
/// optimal sequence, and the predicted states replay the plant recursion on
/// that sequence (so prediction consistency is exact by construction).
struct StepResult {
  SolveStatus status = SolveStatus::Optimal;
  Vector input;                         // first element of the optimal sequence
  Vector input_sequence;                // stacked optimal inputs, Nm long
  std::vector<Vector> predicted_states; // N+1 entries, starting at the current state
  double cost = 0.0;                    // optimal objective including the constant term
};

inline StepResult mpc_step(const MpcConfig& cfg, const LiftedProblem& lp, const Vector& x,
                           const ReferenceTrajectory* ref = nullptr,
                           const std::optional<Vector>& warm_start = std::nullopt) {
  const CondensedQp condensed =
      ref ? build_tracking_qp(lp, x, *ref) : build_regulation_qp(lp, x);
  const SolveOutcome sol = solve_qp(condensed.qp, warm_start);

  StepResult step;
  if (sol.status != SolveStatus::Optimal) {
    step.status = SolveStatus::Infeasible;
    return step;
  }
  const int n = lp.state_dim;
  const int m = lp.input_dim;
  step.status = SolveStatus::Optimal;
  step.input_sequence = sol.point;
  step.input = sol.point.head(m);
  step.cost = sol.value + condensed.constant;
  step.predicted_states.reserve(lp.horizon + 1);
  step.predicted_states.push_back(x);
  for (int i = 0; i < lp.horizon; ++i)
    step.predicted_states.push_back(cfg.system.A * step.predicted_states.back() +
                                    cfg.system.B * sol.point.segment(i * m, m));
  return step;
}

/// Closed-loop record. With no infeasibility, states has steps+1 entries
/// (through the final state) and inputs/costs have one entry per executed
/// step. On loss of feasibility the trace stops at the state whose problem
/// had no admissible sequence.
struct SimTrace {
  std::vector<Vector> states;
  std::vector<Vector> inputs;
  std::vector<double> costs;
  int feasible_steps = 0;
  bool terminated_infeasible = false;
};

/// Simulates the receding-horizon loop from x0 for the given number of steps.
/// reference, when set, supplies the tracking window for each step index.
/// observer, when set, sees every step result (including the infeasible one);
/// it exists so callers can capture predicted trajectories without the loop
/// storing them all. The previous optimal sequence is passed to the QP solver
/// as a starting hint; it never changes the minimiser, only the solve path.
inline SimTrace closed_loop_simulate(
    const MpcConfig& cfg, const Vector& x0, int steps,
    const std::function<ReferenceTrajectory(int)>& reference = nullptr,
    const std::function<void(int, const StepResult&)>& observer = nullptr) {
  if (steps < 1) throw std::invalid_argument("closed_loop_simulate: steps must be >= 1");
  if (x0.size() != cfg.system.state_dim())
    throw std::invalid_argument("closed_loop_simulate: x0 dimension must match the state");

  const LiftedProblem lp = build_lifted(cfg);
  SimTrace trace;
  trace.states.push_back(x0);
  std::optional<Vector> warm;
  for (int k = 0; k < steps; ++k) {
    const Vector& x = trace.states.back();
    ReferenceTrajectory window;
    const ReferenceTrajectory* ref_ptr = nullptr;
    if (reference) {
      window = reference(k);
      ref_ptr = &window;
    }
    const StepResult step = mpc_step(cfg, lp, x, ref_ptr, warm);
    if (observer) observer(k, step);
    if (step.status != SolveStatus::Optimal) {
      trace.terminated_infeasible = true;
      return trace;
    }
    trace.inputs.push_back(step.input);
    trace.costs.push_back(step.cost);
    trace.states.push_back(cfg.system.A * x + cfg.system.B * step.input);
    trace.feasible_steps = k + 1;
    warm = step.input_sequence;
  }
  return trace;
}

}  // namespace mpckit
