#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mpckit/invariant_sets.hpp"
#include "mpckit/mpc.hpp"
#include "mpckit/scenario.hpp"

namespace mpckit {

namespace detail {

// CSV numbers carry 15 significant digits so traces are reproducible
// byte for byte across runs.
inline std::string csv_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.15g", v);
  return buf;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file " + path.string());
  return out;
}

}  // namespace detail

/// Computed artefacts of one `simulate` run: the closed-loop trace plus the
/// predicted state sequences captured at the requested snapshot steps.
struct SimulateReport {
  SimTrace trace;
  std::vector<std::pair<int, std::vector<Vector>>> snapshots;
  std::string trace_path;
  std::vector<std::string> snapshot_paths;
};

struct SimulateOptions {
  std::vector<int> snapshots;  // replaces the scenario's list when non-empty
  std::string output_dir;      // replaces the scenario's directory when non-empty
};

/// Terminal ingredients for the scenario (no files written).
inline TerminalIngredients run_dare(const Scenario& s) { return scenario_dare(s); }

/// Stabilizing-set iteration; when log_dir is non-empty an iteration log
/// (columns: iteration, rows) is written there as terminal_set_iterations.csv.
inline StabilizingSetResult run_terminal_set(const Scenario& s, const std::string& log_dir = "") {
  const StabilizingSetResult result = scenario_terminal_set(s);
  if (!log_dir.empty()) {
    std::filesystem::create_directories(log_dir);
    auto out = detail::open_output(std::filesystem::path(log_dir) / "terminal_set_iterations.csv");
    out << "iteration,rows\n";
    for (size_t i = 0; i < result.history_sizes.size(); ++i)
      out << (i + 1) << "," << result.history_sizes[i] << "\n";
  }
  return result;
}

/// Feasible initial states of the scenario's horizon problem.
inline HPolyhedron run_feasible_set(const Scenario& s) {
  const MpcConfig cfg = scenario_config(s);
  return feasible_initial_set(build_lifted(cfg), s.projection_row_cap);
}

/// Runs the closed loop and writes trace.csv (columns k, x*, u*, cost,
/// feasible) plus one prediction_<k>.csv (columns i, x*) per snapshot step.
/// On loss of feasibility the trace gains a final row holding the state whose
/// problem was infeasible, with nan inputs/cost and feasible = 0; snapshots
/// at unreached or infeasible steps are skipped.
inline SimulateReport run_simulate(const Scenario& s, const SimulateOptions& options = {}) {
  const MpcConfig cfg = scenario_config(s);
  const auto reference = scenario_reference(s);
  const std::vector<int>& snapshots = options.snapshots.empty() ? s.snapshots : options.snapshots;
  const std::string out_dir = options.output_dir.empty() ? s.output_dir : options.output_dir;
  for (int k : snapshots)
    if (k < 0 || k >= s.steps)
      throw std::invalid_argument("run_simulate: snapshot steps must lie in [0, steps)");

  SimulateReport report;
  auto observer = [&](int k, const StepResult& step) {
    if (step.status != SolveStatus::Optimal) return;
    if (std::find(snapshots.begin(), snapshots.end(), k) != snapshots.end())
      report.snapshots.emplace_back(k, step.predicted_states);
  };
  report.trace = closed_loop_simulate(cfg, s.x0, s.steps, reference, observer);

  const int n = cfg.system.state_dim();
  const int m = cfg.system.input_dim();
  std::filesystem::create_directories(out_dir);

  const auto trace_path = std::filesystem::path(out_dir) / "trace.csv";
  {
    auto out = detail::open_output(trace_path);
    out << "k";
    for (int j = 1; j <= n; ++j) out << ",x" << j;
    for (int j = 1; j <= m; ++j) out << ",u" << j;
    out << ",cost,feasible\n";
    const auto& tr = report.trace;
    for (int k = 0; k < tr.feasible_steps; ++k) {
      out << k;
      for (int j = 0; j < n; ++j) out << "," << detail::csv_number(tr.states[k](j));
      for (int j = 0; j < m; ++j) out << "," << detail::csv_number(tr.inputs[k](j));
      out << "," << detail::csv_number(tr.costs[k]) << ",1\n";
    }
    if (tr.terminated_infeasible) {
      out << tr.feasible_steps;
      for (int j = 0; j < n; ++j)
        out << "," << detail::csv_number(tr.states[tr.feasible_steps](j));
      for (int j = 0; j < m; ++j) out << ",nan";
      out << ",nan,0\n";
    }
  }
  report.trace_path = trace_path.string();

  for (const auto& [k, predicted] : report.snapshots) {
    const auto path = std::filesystem::path(out_dir) / ("prediction_" + std::to_string(k) + ".csv");
    auto out = detail::open_output(path);
    out << "i";
    for (int j = 1; j <= n; ++j) out << ",x" << j;
    out << "\n";
    for (size_t i = 0; i < predicted.size(); ++i) {
      out << i;
      for (int j = 0; j < n; ++j) out << "," << detail::csv_number(predicted[i](j));
      out << "\n";
    }
    report.snapshot_paths.push_back(path.string());
  }
  return report;
}

}  // namespace mpckit
