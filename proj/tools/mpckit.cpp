// Command-line front end: evaluates one scenario file per invocation.
//
//   mpckit dare <scenario>                       terminal cost / gain report
//   mpckit terminal-set <scenario> [--out DIR]   stabilizing set + iteration log
//   mpckit feasible-set <scenario>               feasible initial-state set
//   mpckit simulate <scenario> [--out DIR] [--snapshots k1,k2,...]
//
// Exit codes: 0 success, 1 usage/parse/validation error, 2 simulation ended
// in an infeasible step, 3 numerical failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mpckit/runner.hpp"

namespace {

constexpr const char* kUsage =
    "usage: mpckit <dare|terminal-set|feasible-set|simulate> <scenario-file>\n"
    "              [--out DIR] [--snapshots k1,k2,...]\n";

std::string format_matrix_report(const char* name, const mpckit::Matrix& m) {
  std::ostringstream out;
  out << name << " rows " << m.rows() << " cols " << m.cols() << "\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.15g", m(i, j));
      out << buf << (j + 1 < m.cols() ? " " : "\n");
    }
  }
  return out.str();
}

std::vector<int> parse_snapshot_list(const std::string& arg) {
  std::vector<int> out;
  std::istringstream in(arg);
  std::string item;
  while (std::getline(in, item, ',')) {
    size_t used = 0;
    const int v = std::stoi(item, &used);
    if (used != item.size()) throw std::invalid_argument("snapshots must be integers");
    out.push_back(v);
  }
  if (out.empty()) throw std::invalid_argument("snapshots list is empty");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  std::string command, scenario_path;
  mpckit::SimulateOptions options;
  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    for (size_t i = 0; i < args.size(); ++i) {
      if (args[i] == "--out") {
        if (++i >= args.size()) throw std::invalid_argument("--out needs a directory");
        options.output_dir = args[i];
      } else if (args[i] == "--snapshots") {
        if (++i >= args.size()) throw std::invalid_argument("--snapshots needs a list");
        options.snapshots = parse_snapshot_list(args[i]);
      } else if (command.empty()) {
        command = args[i];
      } else if (scenario_path.empty()) {
        scenario_path = args[i];
      } else {
        throw std::invalid_argument("unexpected argument '" + args[i] + "'");
      }
    }
    if (command.empty() || scenario_path.empty()) throw std::invalid_argument("missing arguments");
    if (command != "dare" && command != "terminal-set" && command != "feasible-set" &&
        command != "simulate")
      throw std::invalid_argument("unknown command '" + command + "'");
  } catch (const std::exception& e) {
    std::cerr << "mpckit: " << e.what() << "\n" << kUsage;
    return 1;
  }

  mpckit::Scenario scenario;
  try {
    std::ifstream file(scenario_path);
    if (!file) {
      std::cerr << "mpckit: cannot open scenario file '" << scenario_path << "'\n";
      return 1;
    }
    std::ostringstream text;
    text << file.rdbuf();
    scenario = mpckit::parse_scenario(text.str());
  } catch (const mpckit::ScenarioError& e) {
    std::cerr << "mpckit: " << scenario_path << ": " << e.what() << "\n";
    return 1;
  }
  if (!options.output_dir.empty()) scenario.output_dir = options.output_dir;

  try {
    if (command == "dare") {
      const mpckit::TerminalIngredients ti = mpckit::run_dare(scenario);
      std::cout << format_matrix_report("Qf", ti.Qf) << format_matrix_report("K", ti.K);
      std::printf("residual %.15g\nclosed_loop_spectral_radius %.15g\n", ti.residual,
                  ti.closed_loop_spectral_radius);
      return 0;
    }
    if (command == "terminal-set") {
      const mpckit::StabilizingSetResult result =
          mpckit::run_terminal_set(scenario, scenario.output_dir);
      std::cout << mpckit::to_text(result.set);
      std::cerr << "terminal-set: " << (result.converged ? "converged" : "NOT converged")
                << " after " << result.iterations << " iterations, "
                << result.set.num_rows() << " rows\n";
      return result.converged ? 0 : 3;
    }
    if (command == "feasible-set") {
      std::cout << mpckit::to_text(mpckit::run_feasible_set(scenario));
      return 0;
    }
    const mpckit::SimulateReport report = mpckit::run_simulate(scenario, options);
    std::cerr << "simulate: " << report.trace.feasible_steps << " feasible step(s), trace at "
              << report.trace_path << "\n";
    return report.trace.terminated_infeasible ? 2 : 0;
  } catch (const std::invalid_argument& e) {
    std::cerr << "mpckit: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "mpckit: " << e.what() << "\n";
    return 3;
  }
}
