#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mpckit/invariant_sets.hpp"
#include "mpckit/mpc.hpp"
#include "mpckit/polytope.hpp"
#include "mpckit/riccati.hpp"
#include "mpckit/system.hpp"

namespace mpckit {

/// Raised for any scenario parse or validation problem. Messages carry the
/// line number and key wherever one is known.
struct ScenarioError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// One experiment description: plant, horizon problem, initial state, run
/// length, and output options. This mirrors the text format one to one; see
/// parse_scenario for the syntax.
struct Scenario {
  enum class TerminalMode { None, Origin, RiccatiSet, Explicit };
  enum class RefMode { None, Inline, Equilibrium };

  Matrix A, B, Q, R;
  int horizon = 0;
  int steps = 0;
  Vector x0;
  TerminalMode terminal_mode = TerminalMode::None;
  Matrix X_normals, U_normals;
  Vector X_offsets, U_offsets;
  std::optional<Matrix> Xf_normals;
  std::optional<Vector> Xf_offsets;
  RefMode ref_mode = RefMode::None;
  std::optional<Matrix> ref_states;  // one row per time index
  std::optional<Matrix> ref_inputs;
  std::optional<Vector> ref_x_eq;
  std::optional<Vector> ref_u_eq;
  std::string output_dir = ".";
  std::vector<int> snapshots;
  int max_stab_iterations = 500;
  int projection_row_cap = 20000;
};

namespace detail {

inline std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

// Minimal scanner for the bracketed literals in scenario values.
class ValueScanner {
 public:
  explicit ValueScanner(const std::string& text) : text_(text) {}

  void expect(char c) {
    skip_ws();
    if (pos_ >= text_.size() || text_[pos_] != c)
      throw std::runtime_error(std::string("expected '") + c + "'");
    ++pos_;
  }

  bool try_consume(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  double number() {
    skip_ws();
    const char* start = text_.c_str() + pos_;
    char* end = nullptr;
    const double v = std::strtod(start, &end);
    if (end == start) throw std::runtime_error("expected a number");
    pos_ += static_cast<size_t>(end - start);
    return v;
  }

  void expect_end() {
    skip_ws();
    if (pos_ != text_.size()) throw std::runtime_error("trailing characters after value");
  }

 private:
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  const std::string& text_;
  size_t pos_ = 0;
};

inline Matrix parse_matrix_literal(const std::string& text) {
  ValueScanner sc(text);
  sc.expect('[');
  std::vector<std::vector<double>> rows;
  do {
    sc.expect('[');
    std::vector<double> row;
    if (!sc.try_consume(']')) {
      do {
        row.push_back(sc.number());
      } while (sc.try_consume(','));
      sc.expect(']');
    }
    if (row.empty()) throw std::runtime_error("matrix rows must be non-empty");
    if (!rows.empty() && rows.front().size() != row.size())
      throw std::runtime_error("matrix rows must have equal length");
    rows.push_back(std::move(row));
  } while (sc.try_consume(','));
  sc.expect(']');
  sc.expect_end();
  Matrix m(rows.size(), rows.front().size());
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  return m;
}

inline Vector parse_vector_literal(const std::string& text) {
  ValueScanner sc(text);
  sc.expect('[');
  std::vector<double> vals;
  if (!sc.try_consume(']')) {
    do {
      vals.push_back(sc.number());
    } while (sc.try_consume(','));
    sc.expect(']');
  }
  sc.expect_end();
  if (vals.empty()) throw std::runtime_error("vector must be non-empty");
  return Eigen::Map<Vector>(vals.data(), vals.size());
}

inline std::vector<int> parse_int_list_literal(const std::string& text) {
  ValueScanner sc(text);
  sc.expect('[');
  std::vector<int> vals;
  if (!sc.try_consume(']')) {
    do {
      const double v = sc.number();
      const int iv = static_cast<int>(v);
      if (static_cast<double>(iv) != v) throw std::runtime_error("expected an integer");
      vals.push_back(iv);
    } while (sc.try_consume(','));
    sc.expect(']');
  }
  sc.expect_end();
  return vals;
}

inline int parse_int_literal(const std::string& text) {
  ValueScanner sc(text);
  const double v = sc.number();
  sc.expect_end();
  const int iv = static_cast<int>(v);
  if (static_cast<double>(iv) != v) throw std::runtime_error("expected an integer");
  return iv;
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string format_matrix(const Matrix& m) {
  std::string out = "[";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out += (i == 0 ? "[" : ", [");
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out += ", ";
      out += format_double(m(i, j));
    }
    out += "]";
  }
  return out + "]";
}

inline std::string format_vector(const Vector& v) {
  std::string out = "[";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i > 0) out += ", ";
    out += format_double(v(i));
  }
  return out + "]";
}

}  // namespace detail

/// Parses the line-oriented scenario format:
///   key = value          one assignment per line
///   # ...                comments (also allowed after values)
/// Values are integers, vectors "[1, 2]", matrices "[[1, 2], [3, 4]]",
/// bare words (modes, paths) or integer lists. Unknown and duplicate keys are
/// rejected; every diagnostic names the offending line and key.
inline Scenario parse_scenario(const std::string& text) {
  Scenario s;
  std::map<std::string, int> seen;  // key -> line number
  std::map<std::string, std::string> values;

  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const size_t hash = raw.find('#');
    std::string line = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ScenarioError("line " + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ScenarioError("line " + std::to_string(line_no) + ": expected 'key = value'");
    if (seen.count(key))
      throw ScenarioError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    seen[key] = line_no;
    values[key] = value;
  }

  auto fail = [&](const std::string& key, const std::string& what) -> ScenarioError {
    auto it = seen.find(key);
    if (it == seen.end()) return ScenarioError("key '" + key + "': " + what);
    return ScenarioError("line " + std::to_string(it->second) + ": key '" + key + "': " + what);
  };

  static const std::vector<std::string> known = {
      "A", "B", "Q", "R", "N", "steps", "x0", "terminal_mode",
      "X_normals", "X_offsets", "U_normals", "U_offsets",
      "Xf_normals", "Xf_offsets", "ref_mode", "ref_states", "ref_inputs",
      "ref_x_eq", "ref_u_eq", "output_dir", "snapshots",
      "max_stab_iterations", "projection_row_cap"};
  for (const auto& [key, value] : values) {
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ScenarioError("line " + std::to_string(seen[key]) + ": unknown key '" + key + "'");
  }
  static const std::vector<std::string> required = {
      "A", "B", "Q", "R", "N", "steps", "x0", "terminal_mode",
      "X_normals", "X_offsets", "U_normals", "U_offsets"};
  for (const auto& key : required) {
    if (!values.count(key)) throw ScenarioError("missing required key '" + key + "'");
  }

  auto get_matrix = [&](const std::string& key) {
    try {
      return detail::parse_matrix_literal(values.at(key));
    } catch (const std::runtime_error& e) {
      throw fail(key, e.what());
    }
  };
  auto get_vector = [&](const std::string& key) {
    try {
      return detail::parse_vector_literal(values.at(key));
    } catch (const std::runtime_error& e) {
      throw fail(key, e.what());
    }
  };
  auto get_int = [&](const std::string& key) {
    try {
      return detail::parse_int_literal(values.at(key));
    } catch (const std::runtime_error& e) {
      throw fail(key, e.what());
    }
  };

  s.A = get_matrix("A");
  s.B = get_matrix("B");
  s.Q = get_matrix("Q");
  s.R = get_matrix("R");
  s.horizon = get_int("N");
  s.steps = get_int("steps");
  s.x0 = get_vector("x0");
  s.X_normals = get_matrix("X_normals");
  s.X_offsets = get_vector("X_offsets");
  s.U_normals = get_matrix("U_normals");
  s.U_offsets = get_vector("U_offsets");

  const std::string mode = values.at("terminal_mode");
  if (mode == "none")
    s.terminal_mode = Scenario::TerminalMode::None;
  else if (mode == "origin")
    s.terminal_mode = Scenario::TerminalMode::Origin;
  else if (mode == "riccati_set")
    s.terminal_mode = Scenario::TerminalMode::RiccatiSet;
  else if (mode == "explicit")
    s.terminal_mode = Scenario::TerminalMode::Explicit;
  else
    throw fail("terminal_mode", "must be one of none, origin, riccati_set, explicit");

  if (values.count("Xf_normals") != values.count("Xf_offsets"))
    throw ScenarioError("keys 'Xf_normals' and 'Xf_offsets' must appear together");
  if (s.terminal_mode == Scenario::TerminalMode::Explicit) {
    if (!values.count("Xf_normals"))
      throw ScenarioError("terminal_mode explicit requires keys 'Xf_normals' and 'Xf_offsets'");
    s.Xf_normals = get_matrix("Xf_normals");
    s.Xf_offsets = get_vector("Xf_offsets");
  } else if (values.count("Xf_normals")) {
    throw fail("Xf_normals", "only allowed with terminal_mode = explicit");
  }

  if (values.count("ref_mode")) {
    const std::string rm = values.at("ref_mode");
    if (rm == "none")
      s.ref_mode = Scenario::RefMode::None;
    else if (rm == "inline")
      s.ref_mode = Scenario::RefMode::Inline;
    else if (rm == "equilibrium")
      s.ref_mode = Scenario::RefMode::Equilibrium;
    else
      throw fail("ref_mode", "must be one of none, inline, equilibrium");
  }
  const bool want_inline = s.ref_mode == Scenario::RefMode::Inline;
  const bool want_eq = s.ref_mode == Scenario::RefMode::Equilibrium;
  for (const char* key : {"ref_states", "ref_inputs"}) {
    if (values.count(key) != (want_inline ? 1u : 0u))
      throw ScenarioError(want_inline
                              ? "ref_mode inline requires keys 'ref_states' and 'ref_inputs'"
                              : std::string("key '") + key + "' requires ref_mode = inline");
  }
  for (const char* key : {"ref_x_eq", "ref_u_eq"}) {
    if (values.count(key) != (want_eq ? 1u : 0u))
      throw ScenarioError(want_eq
                              ? "ref_mode equilibrium requires keys 'ref_x_eq' and 'ref_u_eq'"
                              : std::string("key '") + key + "' requires ref_mode = equilibrium");
  }
  if (want_inline) {
    s.ref_states = get_matrix("ref_states");
    s.ref_inputs = get_matrix("ref_inputs");
  }
  if (want_eq) {
    s.ref_x_eq = get_vector("ref_x_eq");
    s.ref_u_eq = get_vector("ref_u_eq");
  }

  if (values.count("output_dir")) s.output_dir = values.at("output_dir");
  if (values.count("snapshots")) {
    try {
      s.snapshots = detail::parse_int_list_literal(values.at("snapshots"));
    } catch (const std::runtime_error& e) {
      throw fail("snapshots", e.what());
    }
  }
  if (values.count("max_stab_iterations")) s.max_stab_iterations = get_int("max_stab_iterations");
  if (values.count("projection_row_cap")) s.projection_row_cap = get_int("projection_row_cap");

  // Semantic validation. Every message names its key (and line when known).
  const auto n = s.A.rows();
  const auto m = s.B.cols();
  if (s.A.rows() != s.A.cols()) throw fail("A", "must be square");
  if (s.B.rows() != n) throw fail("B", "row count must match A");
  if (s.Q.rows() != n || s.Q.cols() != n) throw fail("Q", "dimension must match A");
  if (s.R.rows() != m || s.R.cols() != m) throw fail("R", "dimension must match the input count");
  if (s.horizon < 1) throw fail("N", "horizon must be >= 1");
  if (s.steps < 1) throw fail("steps", "must be >= 1");
  if (s.x0.size() != n) throw fail("x0", "size must match the state dimension");
  if (s.X_normals.cols() != n) throw fail("X_normals", "column count must match the state dimension");
  if (s.X_offsets.size() != s.X_normals.rows()) throw fail("X_offsets", "size must match X_normals rows");
  if (s.U_normals.cols() != m) throw fail("U_normals", "column count must match the input dimension");
  if (s.U_offsets.size() != s.U_normals.rows()) throw fail("U_offsets", "size must match U_normals rows");
  if (s.Xf_normals) {
    if (s.Xf_normals->cols() != n) throw fail("Xf_normals", "column count must match the state dimension");
    if (s.Xf_offsets->size() != s.Xf_normals->rows())
      throw fail("Xf_offsets", "size must match Xf_normals rows");
  }
  if (s.ref_states) {
    if (s.ref_states->cols() != n) throw fail("ref_states", "column count must match the state dimension");
    if (s.ref_states->rows() < s.steps + s.horizon)
      throw fail("ref_states", "needs at least steps + N rows to cover every horizon window");
    if (s.ref_inputs->cols() != m) throw fail("ref_inputs", "column count must match the input dimension");
    if (s.ref_inputs->rows() < s.steps + s.horizon - 1)
      throw fail("ref_inputs", "needs at least steps + N - 1 rows to cover every horizon window");
  }
  if (s.ref_x_eq && s.ref_x_eq->size() != n) throw fail("ref_x_eq", "size must match the state dimension");
  if (s.ref_u_eq && s.ref_u_eq->size() != m) throw fail("ref_u_eq", "size must match the input dimension");
  for (int k : s.snapshots)
    if (k < 0 || k >= s.steps) throw fail("snapshots", "entries must lie in [0, steps)");
  if (s.max_stab_iterations < 1) throw fail("max_stab_iterations", "must be >= 1");
  if (s.projection_row_cap < 1) throw fail("projection_row_cap", "must be >= 1");
  return s;
}

/// Canonical text form; parse_scenario(serialize_scenario(s)) reproduces s
/// exactly (doubles are written with 17 significant digits).
inline std::string serialize_scenario(const Scenario& s) {
  using namespace detail;
  std::ostringstream out;
  out << "A = " << format_matrix(s.A) << "\n";
  out << "B = " << format_matrix(s.B) << "\n";
  out << "Q = " << format_matrix(s.Q) << "\n";
  out << "R = " << format_matrix(s.R) << "\n";
  out << "N = " << s.horizon << "\n";
  out << "steps = " << s.steps << "\n";
  out << "x0 = " << format_vector(s.x0) << "\n";
  out << "X_normals = " << format_matrix(s.X_normals) << "\n";
  out << "X_offsets = " << format_vector(s.X_offsets) << "\n";
  out << "U_normals = " << format_matrix(s.U_normals) << "\n";
  out << "U_offsets = " << format_vector(s.U_offsets) << "\n";
  switch (s.terminal_mode) {
    case Scenario::TerminalMode::None: out << "terminal_mode = none\n"; break;
    case Scenario::TerminalMode::Origin: out << "terminal_mode = origin\n"; break;
    case Scenario::TerminalMode::RiccatiSet: out << "terminal_mode = riccati_set\n"; break;
    case Scenario::TerminalMode::Explicit: out << "terminal_mode = explicit\n"; break;
  }
  if (s.Xf_normals) {
    out << "Xf_normals = " << format_matrix(*s.Xf_normals) << "\n";
    out << "Xf_offsets = " << format_vector(*s.Xf_offsets) << "\n";
  }
  switch (s.ref_mode) {
    case Scenario::RefMode::None: out << "ref_mode = none\n"; break;
    case Scenario::RefMode::Inline: out << "ref_mode = inline\n"; break;
    case Scenario::RefMode::Equilibrium: out << "ref_mode = equilibrium\n"; break;
  }
  if (s.ref_states) out << "ref_states = " << format_matrix(*s.ref_states) << "\n";
  if (s.ref_inputs) out << "ref_inputs = " << format_matrix(*s.ref_inputs) << "\n";
  if (s.ref_x_eq) out << "ref_x_eq = " << format_vector(*s.ref_x_eq) << "\n";
  if (s.ref_u_eq) out << "ref_u_eq = " << format_vector(*s.ref_u_eq) << "\n";
  out << "output_dir = " << s.output_dir << "\n";
  if (!s.snapshots.empty()) {
    out << "snapshots = [";
    for (size_t i = 0; i < s.snapshots.size(); ++i)
      out << (i ? ", " : "") << s.snapshots[i];
    out << "]\n";
  }
  out << "max_stab_iterations = " << s.max_stab_iterations << "\n";
  out << "projection_row_cap = " << s.projection_row_cap << "\n";
  return out.str();
}

/// Terminal ingredients for the scenario's plant and weights.
inline TerminalIngredients scenario_dare(const Scenario& s) {
  return solve_dare(DiscreteLtiSystem(s.A, s.B), CostWeights(s.Q, s.R));
}

/// The stabilizing-set iteration on the scenario's constraint sets.
inline StabilizingSetResult scenario_terminal_set(const Scenario& s) {
  return max_stabilizing_set(DiscreteLtiSystem(s.A, s.B), HPolyhedron(s.X_normals, s.X_offsets),
                             HPolyhedron(s.U_normals, s.U_offsets), s.max_stab_iterations);
}

/// Resolves the scenario into a solvable configuration: terminal cost from
/// the Riccati solution, terminal set per terminal_mode.
inline MpcConfig scenario_config(const Scenario& s) {
  DiscreteLtiSystem sys(s.A, s.B);
  CostWeights weights(s.Q, s.R);
  const TerminalIngredients ingredients = solve_dare(sys, weights);
  HPolyhedron state_set(s.X_normals, s.X_offsets);
  HPolyhedron input_set(s.U_normals, s.U_offsets);

  std::optional<HPolyhedron> terminal;
  switch (s.terminal_mode) {
    case Scenario::TerminalMode::None:
      break;
    case Scenario::TerminalMode::Origin:
      terminal = HPolyhedron::singleton(Vector::Zero(sys.state_dim()));
      break;
    case Scenario::TerminalMode::RiccatiSet: {
      const StabilizingSetResult r = scenario_terminal_set(s);
      if (!r.converged)
        throw std::runtime_error("terminal set iteration did not converge within " +
                                 std::to_string(s.max_stab_iterations) + " iterations");
      terminal = r.set;
      break;
    }
    case Scenario::TerminalMode::Explicit:
      terminal = HPolyhedron(*s.Xf_normals, *s.Xf_offsets);
      break;
  }
  return MpcConfig(std::move(sys), s.horizon, std::move(weights), ingredients.Qf,
                   std::move(state_set), std::move(input_set), std::move(terminal));
}

/// Per-step reference windows for tracking scenarios; a null function for
/// regulation ones.
inline std::function<ReferenceTrajectory(int)> scenario_reference(const Scenario& s) {
  const int n = static_cast<int>(s.A.rows());
  const int m = static_cast<int>(s.B.cols());
  const int nh = s.horizon;
  switch (s.ref_mode) {
    case Scenario::RefMode::None:
      return nullptr;
    case Scenario::RefMode::Equilibrium: {
      ReferenceTrajectory window;
      window.states.resize((nh + 1) * n);
      window.inputs.resize(nh * m);
      for (int i = 0; i <= nh; ++i) window.states.segment(i * n, n) = *s.ref_x_eq;
      for (int i = 0; i < nh; ++i) window.inputs.segment(i * m, m) = *s.ref_u_eq;
      return [window](int) { return window; };
    }
    case Scenario::RefMode::Inline: {
      const Matrix states = *s.ref_states;
      const Matrix inputs = *s.ref_inputs;
      return [states, inputs, n, m, nh](int k) {
        ReferenceTrajectory window;
        window.states.resize((nh + 1) * n);
        window.inputs.resize(nh * m);
        for (int i = 0; i <= nh; ++i)
          window.states.segment(i * n, n) = states.row(k + i).transpose();
        for (int i = 0; i < nh; ++i)
          window.inputs.segment(i * m, m) = inputs.row(k + i).transpose();
        return window;
      };
    }
  }
  return nullptr;
}

}  // namespace mpckit
