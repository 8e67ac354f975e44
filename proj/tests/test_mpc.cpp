#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "mpckit/invariant_sets.hpp"
#include "mpckit/mpc.hpp"
#include "support/oracles.hpp"
#include "support/paper_data.hpp"

using mpckit::CostWeights;
using mpckit::DiscreteLtiSystem;
using mpckit::HPolyhedron;
using mpckit::Matrix;
using mpckit::MpcConfig;
using mpckit::ReferenceTrajectory;
using mpckit::SolveStatus;
using mpckit::Vector;

namespace {

const HPolyhedron& benchmark_terminal_set() {
  static const HPolyhedron set = mpckit::max_stabilizing_set(fixture::plant(),
                                                             fixture::state_box(),
                                                             fixture::input_box())
                                     .set;
  return set;
}

MpcConfig benchmark_config(int horizon, bool with_terminal_set) {
  const auto ingredients = mpckit::solve_dare(fixture::plant(), fixture::weights());
  std::optional<HPolyhedron> terminal;
  if (with_terminal_set) terminal = benchmark_terminal_set();
  return MpcConfig(fixture::plant(), horizon, fixture::weights(), ingredients.Qf,
                   fixture::state_box(), fixture::input_box(), terminal);
}

// Cost of applying the stacked sequence useq from x0, evaluated by replaying
// the plant recursion stage by stage -- independent of the condensed form.
double rollout_cost(const MpcConfig& cfg, const Vector& x0, const Vector& useq,
                    const ReferenceTrajectory* ref = nullptr) {
  const int n = cfg.system.state_dim();
  const int m = cfg.system.input_dim();
  double cost = 0.0;
  Vector x = x0;
  for (int i = 0; i < cfg.horizon; ++i) {
    Vector xd = x;
    Vector ud = useq.segment(i * m, m);
    if (ref) {
      xd -= ref->states.segment(i * n, n);
      ud -= ref->inputs.segment(i * m, m);
    }
    cost += xd.dot(cfg.weights.Q * xd) + ud.dot(cfg.weights.R * ud);
    x = cfg.system.A * x + cfg.system.B * useq.segment(i * m, m);
  }
  Vector xd = x;
  if (ref) xd -= ref->states.tail(n);
  return cost + xd.dot(cfg.terminal_cost * xd);
}

}  // namespace

TEST(LiftedProblem, ResponsesMatchIteratedDynamics) {
  std::mt19937 rng(1312);
  Matrix a(3, 3), b(3, 2);
  for (int i = 0; i < a.size(); ++i) a(i / 3, i % 3) = oracle::random_vector(rng, 1, -1, 1)(0);
  for (int i = 0; i < b.size(); ++i) b(i / 2, i % 2) = oracle::random_vector(rng, 1, -1, 1)(0);
  const int horizon = 4;
  const MpcConfig cfg(DiscreteLtiSystem(a, b), horizon,
                      CostWeights(Matrix::Identity(3, 3), Matrix::Identity(2, 2)),
                      Matrix::Identity(3, 3), HPolyhedron::box(Vector::Constant(3, 100.0)),
                      HPolyhedron::box(Vector::Constant(2, 100.0)));
  const auto lp = mpckit::build_lifted(cfg);
  ASSERT_EQ(lp.free_response.rows(), (horizon + 1) * 3);
  ASSERT_EQ(lp.forced_response.cols(), horizon * 2);

  const Vector x0 = oracle::random_vector(rng, 3, -2, 2);
  const Vector useq = oracle::random_vector(rng, horizon * 2, -2, 2);
  const Vector stacked = lp.free_response * x0 + lp.forced_response * useq;
  Vector x = x0;
  for (int i = 0; i <= horizon; ++i) {
    EXPECT_LE((stacked.segment(i * 3, 3) - x).cwiseAbs().maxCoeff(), 1e-12) << "stage " << i;
    if (i < horizon) x = a * x + b * useq.segment(i * 2, 2);
  }
}

TEST(Condensation, ObjectiveMatchesDirectExpansion) {
  std::mt19937 rng(777);
  for (int trial = 0; trial < 25; ++trial) {
    Matrix a(2, 2), b(2, 1);
    for (int i = 0; i < 4; ++i) a(i / 2, i % 2) = oracle::random_vector(rng, 1, -1, 1)(0);
    b(0, 0) = oracle::random_vector(rng, 1, -1, 1)(0);
    b(1, 0) = oracle::random_vector(rng, 1, -1, 1)(0);
    const int horizon = 1 + trial % 4;
    const MpcConfig cfg(DiscreteLtiSystem(a, b), horizon,
                        CostWeights(oracle::random_spd(rng, 2), oracle::random_spd(rng, 1)),
                        oracle::random_spd(rng, 2), HPolyhedron::box(Vector::Constant(2, 50.0)),
                        HPolyhedron::box(Vector::Constant(1, 50.0)));
    const auto lp = mpckit::build_lifted(cfg);
    const Vector x0 = oracle::random_vector(rng, 2, -3, 3);
    const Vector useq = oracle::random_vector(rng, horizon, -3, 3);

    const auto regulation = mpckit::build_regulation_qp(lp, x0);
    const double via_qp = useq.dot(regulation.qp.hessian * useq) +
                          2.0 * regulation.qp.linear.dot(useq) + regulation.constant;
    const double direct = rollout_cost(cfg, x0, useq);
    EXPECT_LE(std::abs(via_qp - direct), 1e-9 * (1.0 + std::abs(direct))) << "trial " << trial;

    ReferenceTrajectory ref;
    ref.states = oracle::random_vector(rng, (horizon + 1) * 2, -2, 2);
    ref.inputs = oracle::random_vector(rng, horizon, -2, 2);
    const auto tracking = mpckit::build_tracking_qp(lp, x0, ref);
    const double via_tracking = useq.dot(tracking.qp.hessian * useq) +
                                2.0 * tracking.qp.linear.dot(useq) + tracking.constant;
    const double direct_tracking = rollout_cost(cfg, x0, useq, &ref);
    EXPECT_LE(std::abs(via_tracking - direct_tracking), 1e-9 * (1.0 + std::abs(direct_tracking)))
        << "trial " << trial;
  }
}

TEST(Condensation, ZeroReferenceTrackingIsBitIdenticalToRegulation) {
  const auto cfg = benchmark_config(4, false);
  const auto lp = mpckit::build_lifted(cfg);
  const Vector x0 = fixture::figure_start();
  const auto regulation = mpckit::build_regulation_qp(lp, x0);
  ReferenceTrajectory zero;
  zero.states = Vector::Zero((cfg.horizon + 1) * 2);
  zero.inputs = Vector::Zero(cfg.horizon);
  const auto tracking = mpckit::build_tracking_qp(lp, x0, zero);
  EXPECT_TRUE((tracking.qp.hessian.array() == regulation.qp.hessian.array()).all());
  EXPECT_TRUE((tracking.qp.linear.array() == regulation.qp.linear.array()).all());
  EXPECT_TRUE((tracking.qp.normals.array() == regulation.qp.normals.array()).all());
  EXPECT_TRUE((tracking.qp.offsets.array() == regulation.qp.offsets.array()).all());
  EXPECT_EQ(tracking.constant, regulation.constant);
}

TEST(AdmissibleInputs, ZeroRowsCarryCurrentStateInfeasibility) {
  const auto cfg = benchmark_config(3, false);
  const auto lp = mpckit::build_lifted(cfg);
  Vector outside(2);
  outside << 20.0, 0.0;  // violates the state box before any input acts
  const auto sys = mpckit::admissible_input_set(lp, outside);
  bool zero_row_violated = false;
  for (int i = 0; i < sys.normals.rows(); ++i) {
    if (sys.normals.row(i).norm() <= 1e-12 && sys.offsets(i) < -1e-9) zero_row_violated = true;
  }
  EXPECT_TRUE(zero_row_violated);
  const auto step = mpckit::mpc_step(cfg, lp, outside);
  EXPECT_EQ(step.status, SolveStatus::Infeasible);
}

TEST(MpcStep, PredictionsReplayThePlantRecursionExactly) {
  const auto cfg = benchmark_config(5, false);
  const auto lp = mpckit::build_lifted(cfg);
  const auto step = mpckit::mpc_step(cfg, lp, fixture::figure_start());
  ASSERT_EQ(step.status, SolveStatus::Optimal);
  ASSERT_EQ(step.predicted_states.size(), 6u);
  EXPECT_EQ((step.predicted_states[0] - fixture::figure_start()).cwiseAbs().maxCoeff(), 0.0);
  for (int i = 0; i < 5; ++i) {
    const Vector next = cfg.system.A * step.predicted_states[i] +
                        cfg.system.B * step.input_sequence.segment(i, 1);
    EXPECT_EQ((step.predicted_states[i + 1] - next).cwiseAbs().maxCoeff(), 0.0) << "stage " << i;
  }
  EXPECT_EQ((step.input - step.input_sequence.head(1)).cwiseAbs().maxCoeff(), 0.0);
  // The reported cost must equal the rollout cost of the reported sequence.
  EXPECT_LE(std::abs(step.cost - rollout_cost(cfg, fixture::figure_start(), step.input_sequence)),
            1e-8 * (1.0 + std::abs(step.cost)));
}

TEST(ClosedLoop, ShortHorizonRunReproducesPublishedStatesAndPredictions) {
  const auto cfg = benchmark_config(5, false);
  std::map<int, std::vector<Vector>> captured;
  const auto trace = mpckit::closed_loop_simulate(
      cfg, fixture::figure_start(), 10, nullptr,
      [&](int k, const mpckit::StepResult& step) {
        if (step.status == SolveStatus::Optimal) captured[k] = step.predicted_states;
      });

  EXPECT_TRUE(trace.terminated_infeasible);
  EXPECT_EQ(trace.feasible_steps, 5);
  const Matrix states = fixture::published_loss_states();
  ASSERT_EQ(trace.states.size(), 6u);
  for (int k = 0; k < 6; ++k) {
    EXPECT_LE((trace.states[k] - states.row(k).transpose()).cwiseAbs().maxCoeff(), 1e-6)
        << "state " << k;
  }

  const Matrix pred3 = fixture::published_prediction_step3();
  const Matrix pred4 = fixture::published_prediction_step4();
  ASSERT_TRUE(captured.count(3));
  ASSERT_TRUE(captured.count(4));
  for (int i = 0; i < 5; ++i) {
    EXPECT_LE((captured[3][i + 1] - pred3.row(i).transpose()).cwiseAbs().maxCoeff(), 1e-6)
        << "step-3 stage " << i;
    EXPECT_LE((captured[4][i + 1] - pred4.row(i).transpose()).cwiseAbs().maxCoeff(), 1e-6)
        << "step-4 stage " << i;
  }
}

TEST(ClosedLoop, ObserverSeesTheInfeasibleStep) {
  const auto cfg = benchmark_config(5, false);
  int last_step = -1;
  SolveStatus last_status = SolveStatus::Optimal;
  const auto trace = mpckit::closed_loop_simulate(cfg, fixture::figure_start(), 10, nullptr,
                                                  [&](int k, const mpckit::StepResult& step) {
                                                    last_step = k;
                                                    last_status = step.status;
                                                  });
  EXPECT_TRUE(trace.terminated_infeasible);
  EXPECT_EQ(last_step, 5);
  EXPECT_EQ(last_status, SolveStatus::Infeasible);
  EXPECT_EQ(trace.inputs.size(), 5u);
  EXPECT_EQ(trace.costs.size(), 5u);
}

TEST(ClosedLoop, DegenerateFeasibleProblemIsStillSolved) {
  // From (9, 6) the horizon-5 problem is feasible only on a degenerate face:
  // the terminal position constraint binds exactly, forcing full braking for
  // the first four inputs (the last input only steers velocity afterwards),
  // and the predicted position grazes the bound at exactly 10. The feasible
  // set has an empty interior, so this pins that the solver does not mistake
  // degeneracy for infeasibility (and, downstream, that the
  // loss-of-feasibility runs from both documented start states fail first at
  // step index 5, not 4).
  const auto cfg = benchmark_config(5, false);
  const auto lifted = mpckit::build_lifted(cfg);
  const auto step = mpckit::mpc_step(cfg, lifted, Vector{{9.0, 6.0}});
  ASSERT_EQ(step.status, SolveStatus::Optimal);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(step.input_sequence(i), -20.0, 1e-7) << "i=" << i;
  EXPECT_NEAR(step.predicted_states.back()(0), 10.0, 1e-9);

  const auto stated = mpckit::closed_loop_simulate(cfg, fixture::stated_start(), 10);
  EXPECT_TRUE(stated.terminated_infeasible);
  EXPECT_EQ(stated.feasible_steps, 5);
}

TEST(ClosedLoop, TerminalSetRunReproducesPublishedInputTrace) {
  const auto cfg = benchmark_config(5, true);
  const auto trace = mpckit::closed_loop_simulate(cfg, fixture::figure_start(), 100);
  ASSERT_FALSE(trace.terminated_infeasible);
  ASSERT_EQ(trace.inputs.size(), 100u);

  const auto published = fixture::published_input_trace();
  for (int k = 0; k <= 8; ++k) {
    EXPECT_NEAR(trace.inputs[k](0), -20.0, 1e-6) << "step " << k;
  }
  for (size_t k = 0; k < published.size(); ++k) {
    EXPECT_NEAR(trace.inputs[k](0), published[k], 1e-3) << "step " << k;
  }
  EXPECT_LE(trace.states.back().cwiseAbs().maxCoeff(), 0.5);
  for (size_t k = 1; k < trace.costs.size(); ++k) {
    EXPECT_LE(trace.costs[k], trace.costs[k - 1] + 1e-6) << "step " << k;
  }
}

TEST(ClosedLoop, ShiftedSequencePlusInvariantAppendixStaysAdmissible) {
  // The standard recursive-feasibility argument, executed literally: drop the
  // first input of the optimum, append one admissible input that keeps the
  // terminal state inside the invariant set, and verify the result satisfies
  // every constraint of the next step's problem.
  const auto cfg = benchmark_config(5, true);
  const auto lp = mpckit::build_lifted(cfg);
  const HPolyhedron& terminal = *cfg.terminal_set;
  const int m = cfg.system.input_dim();

  Vector x = fixture::figure_start();
  for (int k = 0; k < 30; ++k) {
    const auto step = mpckit::mpc_step(cfg, lp, x);
    ASSERT_EQ(step.status, SolveStatus::Optimal) << "step " << k;
    const Vector x_next = cfg.system.A * x + cfg.system.B * step.input;

    const Vector x_terminal = step.predicted_states.back();
    EXPECT_TRUE(contains(terminal, x_terminal, 1e-7)) << "step " << k;

    // One admissible input keeping the successor of the terminal state in
    // the terminal set; existence is exactly its control invariance.
    Matrix f(terminal.num_rows() + cfg.input_set.num_rows(), m);
    f << terminal.normals() * cfg.system.B, cfg.input_set.normals();
    Vector g(f.rows());
    g << terminal.offsets() - terminal.normals() * (cfg.system.A * x_terminal),
        cfg.input_set.offsets();
    const auto appendix = mpckit::solve_lp(mpckit::LpProblem(Vector::Zero(m), f, g));
    ASSERT_EQ(appendix.status, SolveStatus::Optimal) << "step " << k;

    Vector candidate(cfg.horizon * m);
    candidate.head((cfg.horizon - 1) * m) = step.input_sequence.tail((cfg.horizon - 1) * m);
    candidate.tail(m) = appendix.point;
    const auto admissible = mpckit::admissible_input_set(lp, x_next);
    EXPECT_LE((admissible.normals * candidate - admissible.offsets).maxCoeff(), 1e-7)
        << "step " << k;
    x = x_next;
  }
}

TEST(ClosedLoop, WarmStartNeverChangesTheTrace) {
  const auto cfg = benchmark_config(5, true);
  const auto warm = mpckit::closed_loop_simulate(cfg, fixture::figure_start(), 25);
  const auto lp = mpckit::build_lifted(cfg);
  Vector x = fixture::figure_start();
  for (int k = 0; k < 25; ++k) {
    const auto cold = mpckit::mpc_step(cfg, lp, x);  // no warm start
    ASSERT_EQ(cold.status, SolveStatus::Optimal);
    EXPECT_LE((cold.input - warm.inputs[k]).cwiseAbs().maxCoeff(), 1e-9) << "step " << k;
    x = cfg.system.A * x + cfg.system.B * cold.input;
  }
}

TEST(Tracking, ConstantEquilibriumReferenceIsApproached) {
  const auto cfg = benchmark_config(8, false);
  Vector x_eq(2);
  x_eq << 3.0, 0.0;  // fixed point of the plant under zero input
  ReferenceTrajectory window;
  window.states.resize((cfg.horizon + 1) * 2);
  window.inputs = Vector::Zero(cfg.horizon);
  for (int i = 0; i <= cfg.horizon; ++i) window.states.segment(2 * i, 2) = x_eq;

  const auto trace = mpckit::closed_loop_simulate(cfg, Vector::Zero(2), 150,
                                                  [&](int) { return window; });
  ASSERT_FALSE(trace.terminated_infeasible);
  EXPECT_LE((trace.states.back() - x_eq).cwiseAbs().maxCoeff(), 0.05);
}

TEST(MpcConfigValidation, RejectsIllFormedProblems) {
  const auto ingredients = mpckit::solve_dare(fixture::plant(), fixture::weights());
  EXPECT_THROW(MpcConfig(fixture::plant(), 0, fixture::weights(), ingredients.Qf,
                         fixture::state_box(), fixture::input_box()),
               std::invalid_argument);

  Matrix asym(2, 2);
  asym << 1, 0.2, 0, 1;
  EXPECT_THROW(MpcConfig(fixture::plant(), 3, fixture::weights(), asym, fixture::state_box(),
                         fixture::input_box()),
               std::invalid_argument);

  // Constraint sets must contain the origin.
  Matrix f(1, 1);
  f << 1;
  Vector g(1);
  g << -1;  // u <= -1
  EXPECT_THROW(MpcConfig(fixture::plant(), 3, fixture::weights(), ingredients.Qf,
                         fixture::state_box(), HPolyhedron(f, g)),
               std::invalid_argument);

  EXPECT_THROW(MpcConfig(fixture::plant(), 3, fixture::weights(), ingredients.Qf,
                         fixture::state_box(), fixture::input_box(),
                         HPolyhedron::box(Vector::Ones(1))),
               std::invalid_argument);

  EXPECT_THROW(mpckit::closed_loop_simulate(benchmark_config(3, false), Vector::Zero(2), 0),
               std::invalid_argument);
}
