#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mpckit/lp.hpp"
#include "mpckit/system.hpp"

namespace mpckit {

/// Closed convex polyhedron in H-representation { x : normals * x <= offsets }.
///
/// Invariants maintained by every constructor and operation:
///  - rows are scaled to unit Euclidean norm;
///  - zero rows never appear: trivially true ones are dropped, certificates of
///    emptiness (zero normal, negative offset) collapse the set to an explicit
///    empty marker;
///  - a zero-row instance that is not marked empty represents the whole space.
///
/// Emptiness can therefore be tested structurally (the marker) or, for sets
/// whose rows merely happen to be inconsistent, by the phase-one LP behind
/// is_empty(). Operations that can discover emptiness return the marker, so
/// downstream code never needs to special-case inconsistent row systems.
class HPolyhedron {
 public:
  /// Builds the set from raw rows. Throws std::invalid_argument on dimension
  /// mismatch, non-finite data, or a zero row with negative offset (use
  /// from_inequalities() to map that last case to the empty marker instead).
  HPolyhedron(Matrix normals, Vector offsets) {
    init(std::move(normals), std::move(offsets), /*allow_empty=*/false);
  }

  /// As the constructor, but a zero row with negative offset yields the
  /// explicit empty set instead of an error.
  static HPolyhedron from_inequalities(Matrix normals, Vector offsets) {
    HPolyhedron p;
    p.init(std::move(normals), std::move(offsets), /*allow_empty=*/true);
    return p;
  }

  static HPolyhedron empty_set(int dim) {
    if (dim <= 0) throw std::invalid_argument("HPolyhedron: dimension must be positive");
    HPolyhedron p;
    p.dim_ = dim;
    p.empty_ = true;
    p.normals_.resize(0, dim);
    p.offsets_.resize(0);
    return p;
  }

  /// Axis-aligned box |x_i| <= halfwidths_i.
  static HPolyhedron box(const Vector& halfwidths) {
    const int d = static_cast<int>(halfwidths.size());
    Matrix f(2 * d, d);
    Vector g(2 * d);
    f.setZero();
    for (int i = 0; i < d; ++i) {
      f(2 * i, i) = 1.0;
      f(2 * i + 1, i) = -1.0;
      g(2 * i) = halfwidths(i);
      g(2 * i + 1) = halfwidths(i);
    }
    return HPolyhedron(std::move(f), std::move(g));
  }

  /// The single point {p}, encoded as paired opposing inequalities.
  static HPolyhedron singleton(const Vector& point) {
    const int d = static_cast<int>(point.size());
    Matrix f(2 * d, d);
    Vector g(2 * d);
    f.topRows(d) = Matrix::Identity(d, d);
    f.bottomRows(d) = -Matrix::Identity(d, d);
    g.head(d) = point;
    g.tail(d) = -point;
    return HPolyhedron(std::move(f), std::move(g));
  }

  int dim() const { return dim_; }
  int num_rows() const { return static_cast<int>(normals_.rows()); }
  const Matrix& normals() const { return normals_; }
  const Vector& offsets() const { return offsets_; }
  bool marked_empty() const { return empty_; }

 private:
  HPolyhedron() = default;

  void init(Matrix normals, Vector offsets, bool allow_empty) {
    if (normals.cols() == 0)
      throw std::invalid_argument("HPolyhedron: dimension must be positive");
    if (normals.rows() != offsets.size())
      throw std::invalid_argument("HPolyhedron: normals row count must match offsets size");
    if (!normals.allFinite() || !offsets.allFinite())
      throw std::invalid_argument("HPolyhedron: data must be finite");
    dim_ = static_cast<int>(normals.cols());
    empty_ = false;

    std::vector<int> kept;
    kept.reserve(normals.rows());
    for (int i = 0; i < normals.rows(); ++i) {
      const double norm = normals.row(i).norm();
      if (norm <= kZeroRowTol) {
        if (offsets(i) >= -kZeroOffsetTol) continue;  // 0 <= offset, trivially true
        if (!allow_empty)
          throw std::invalid_argument("HPolyhedron: zero row with negative offset marks an empty set");
        *this = empty_set(dim_);
        return;
      }
      normals.row(i) /= norm;
      offsets(i) /= norm;
      kept.push_back(i);
    }
    normals_.resize(kept.size(), dim_);
    offsets_.resize(kept.size());
    for (size_t k = 0; k < kept.size(); ++k) {
      normals_.row(k) = normals.row(kept[k]);
      offsets_(k) = offsets(kept[k]);
    }
  }

  static constexpr double kZeroRowTol = 1e-10;
  static constexpr double kZeroOffsetTol = 1e-9;

  Matrix normals_;
  Vector offsets_;
  int dim_ = 0;
  bool empty_ = false;
};

/// Point membership: every row satisfied within tol.
inline bool contains(const HPolyhedron& p, const Vector& x, double tol = 1e-9) {
  if (x.size() != p.dim())
    throw std::invalid_argument("contains: point dimension must match the set");
  if (p.marked_empty()) return false;
  if (p.num_rows() == 0) return true;
  return ((p.normals() * x - p.offsets()).maxCoeff() <= tol);
}

/// Structural or LP-certified emptiness.
inline bool is_empty(const HPolyhedron& p, double feas_tol = kFeasTol) {
  if (p.marked_empty()) return true;
  if (p.num_rows() == 0) return false;
  const SolveOutcome res =
      solve_lp(LpProblem(Vector::Zero(p.dim()), p.normals(), p.offsets()), feas_tol);
  return res.status == SolveStatus::Infeasible;
}

/// Removes rows implied by the remaining ones. Each surviving row i is kept
/// because maximising its normal over the other kept rows exceeds offset_i by
/// more than tol (or is unbounded). Duplicate directions are collapsed to the
/// tightest offset first, so of several identical rows exactly one survives.
/// Detected emptiness collapses to the explicit marker.
inline HPolyhedron remove_redundant(const HPolyhedron& p, double tol = 1e-9) {
  if (p.marked_empty() || p.num_rows() <= 1) return p;
  if (is_empty(p)) return HPolyhedron::empty_set(p.dim());

  const Matrix& f = p.normals();
  const Vector& g = p.offsets();
  const int r = p.num_rows();
  std::vector<bool> alive(r, true);

  // Collapse duplicate directions (rows are unit-normalised, so parallel
  // same-direction rows have equal normals up to rounding).
  for (int i = 0; i < r; ++i) {
    if (!alive[i]) continue;
    for (int j = i + 1; j < r; ++j) {
      if (!alive[j]) continue;
      if ((f.row(i) - f.row(j)).cwiseAbs().maxCoeff() > 1e-12) continue;
      if (g(j) < g(i)) {
        alive[i] = false;
        break;
      }
      alive[j] = false;
    }
  }

  int alive_count = static_cast<int>(std::count(alive.begin(), alive.end(), true));
  for (int i = 0; i < r && alive_count > 1; ++i) {
    if (!alive[i]) continue;
    Matrix others(alive_count - 1, p.dim());
    Vector others_off(alive_count - 1);
    int k = 0;
    for (int j = 0; j < r; ++j) {
      if (j == i || !alive[j]) continue;
      others.row(k) = f.row(j);
      others_off(k) = g(j);
      ++k;
    }
    const SolveOutcome res = solve_lp(LpProblem(-f.row(i).transpose(), others, others_off));
    if (res.status == SolveStatus::Optimal && -res.value <= g(i) + tol) {
      alive[i] = false;
      --alive_count;
    }
  }

  Matrix outf(alive_count, p.dim());
  Vector outg(alive_count);
  int k = 0;
  for (int i = 0; i < r; ++i) {
    if (!alive[i]) continue;
    outf.row(k) = f.row(i);
    outg(k) = g(i);
    ++k;
  }
  return HPolyhedron(std::move(outf), std::move(outg));
}

/// Intersection: stacked rows with redundancy removed.
inline HPolyhedron intersect(const HPolyhedron& p, const HPolyhedron& q) {
  if (p.dim() != q.dim())
    throw std::invalid_argument("intersect: dimensions must match");
  if (p.marked_empty() || q.marked_empty()) return HPolyhedron::empty_set(p.dim());
  Matrix f(p.num_rows() + q.num_rows(), p.dim());
  Vector g(f.rows());
  f << p.normals(), q.normals();
  g << p.offsets(), q.offsets();
  return remove_redundant(HPolyhedron::from_inequalities(std::move(f), std::move(g)));
}

namespace detail {

// One Fourier-Motzkin elimination step on a raw row system: removes column
// `col`, pairing every positive-coefficient row with every negative one.
inline std::pair<Matrix, Vector> eliminate_column(const Matrix& f, const Vector& g, int col) {
  constexpr double kCoefTol = 1e-12;
  std::vector<int> pos, neg, zero;
  for (int i = 0; i < f.rows(); ++i) {
    const double c = f(i, col);
    if (c > kCoefTol)
      pos.push_back(i);
    else if (c < -kCoefTol)
      neg.push_back(i);
    else
      zero.push_back(i);
  }
  const int d = static_cast<int>(f.cols());
  const auto out_rows = static_cast<Eigen::Index>(zero.size() + pos.size() * neg.size());
  Matrix nf(out_rows, d - 1);
  Vector ng(out_rows);
  auto copy_without_col = [&](const auto& row) {
    Eigen::RowVectorXd out(d - 1);
    out.head(col) = row.head(col);
    out.tail(d - 1 - col) = row.tail(d - 1 - col);
    return out;
  };
  Eigen::Index k = 0;
  for (int i : zero) {
    nf.row(k) = copy_without_col(f.row(i));
    ng(k) = g(i);
    ++k;
  }
  for (int i : pos) {
    const Eigen::RowVectorXd ri = f.row(i) / f(i, col);
    const double oi = g(i) / f(i, col);
    for (int j : neg) {
      const Eigen::RowVectorXd rj = f.row(j) / -f(j, col);
      const double oj = g(j) / -f(j, col);
      nf.row(k) = copy_without_col((ri + rj).eval());
      ng(k) = oi + oj;
      ++k;
    }
  }
  return {std::move(nf), std::move(ng)};
}

}  // namespace detail

/// Orthogonal projection onto the coordinates in `keep` (0-based, a nonempty
/// strict subset; the result axes follow ascending original index). Variables
/// are eliminated one at a time, choosing the column minimising the number of
/// generated row pairs, with redundancy removal after every elimination.
/// A positive `row_cap` aborts with a diagnostic when an intermediate system
/// would exceed that many rows.
inline HPolyhedron fourier_motzkin_project(const HPolyhedron& p, std::vector<int> keep,
                                           int row_cap = 0) {
  std::sort(keep.begin(), keep.end());
  keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
  if (keep.empty() || static_cast<int>(keep.size()) >= p.dim())
    throw std::invalid_argument("fourier_motzkin_project: keep must be a nonempty strict subset of coordinates");
  if (keep.front() < 0 || keep.back() >= p.dim())
    throw std::invalid_argument("fourier_motzkin_project: keep indices out of range");
  const int out_dim = static_cast<int>(keep.size());
  if (p.marked_empty()) return HPolyhedron::empty_set(out_dim);

  Matrix f = p.normals();
  Vector g = p.offsets();
  // Original coordinate carried by each current column.
  std::vector<int> col_ids(p.dim());
  for (int i = 0; i < p.dim(); ++i) col_ids[i] = i;

  while (static_cast<int>(col_ids.size()) > out_dim) {
    // Pick the eliminable column generating the fewest pairings.
    int best_col = -1;
    long best_score = -1;
    for (int c = 0; c < static_cast<int>(col_ids.size()); ++c) {
      if (std::binary_search(keep.begin(), keep.end(), col_ids[c])) continue;
      long pos = 0, neg = 0;
      for (int i = 0; i < f.rows(); ++i) {
        if (f(i, c) > 1e-12)
          ++pos;
        else if (f(i, c) < -1e-12)
          ++neg;
      }
      const long score = pos * neg;
      if (best_col < 0 || score < best_score) {
        best_col = c;
        best_score = score;
      }
    }

    auto [nf, ng] = detail::eliminate_column(f, g, best_col);
    if (row_cap > 0 && nf.rows() > row_cap) {
      throw std::runtime_error("fourier_motzkin_project: intermediate system has " +
                               std::to_string(nf.rows()) + " rows, exceeding the cap of " +
                               std::to_string(row_cap));
    }
    col_ids.erase(col_ids.begin() + best_col);

    if (nf.rows() == 0) {
      f = std::move(nf);
      g = std::move(ng);
      continue;
    }
    HPolyhedron step = HPolyhedron::from_inequalities(std::move(nf), std::move(ng));
    if (!step.marked_empty()) step = remove_redundant(step);
    if (step.marked_empty()) return HPolyhedron::empty_set(out_dim);
    f = step.normals();
    g = step.offsets();
  }
  if (f.rows() == 0) {
    Matrix none(0, out_dim);
    return HPolyhedron::from_inequalities(std::move(none), Vector(0));
  }
  return HPolyhedron(std::move(f), std::move(g));
}

/// Preimage { x : M x in P }. Rows become P.normals * M with unchanged
/// offsets; rows whose normal vanishes are resolved by sign of the offset.
inline HPolyhedron affine_preimage(const HPolyhedron& p, const Matrix& m) {
  if (m.rows() != p.dim())
    throw std::invalid_argument("affine_preimage: map row count must match the set dimension");
  if (m.cols() == 0)
    throw std::invalid_argument("affine_preimage: map must have at least one column");
  const int out_dim = static_cast<int>(m.cols());
  if (p.marked_empty()) return HPolyhedron::empty_set(out_dim);
  return HPolyhedron::from_inequalities(p.normals() * m, p.offsets());
}

/// Image M P = { M u : u in P }, via the lifted system
/// { (y, u) : y = M u, u in P } followed by elimination of u.
inline HPolyhedron affine_image(const Matrix& m, const HPolyhedron& p) {
  if (m.cols() != p.dim())
    throw std::invalid_argument("affine_image: map column count must match the set dimension");
  if (m.rows() == 0)
    throw std::invalid_argument("affine_image: map must have at least one row");
  const int out_dim = static_cast<int>(m.rows());
  if (p.marked_empty()) return HPolyhedron::empty_set(out_dim);

  const int d = p.dim();
  Matrix f(2 * out_dim + p.num_rows(), out_dim + d);
  Vector g(f.rows());
  f.setZero();
  f.block(0, 0, out_dim, out_dim) = Matrix::Identity(out_dim, out_dim);
  f.block(0, out_dim, out_dim, d) = -m;
  f.block(out_dim, 0, out_dim, out_dim) = -Matrix::Identity(out_dim, out_dim);
  f.block(out_dim, out_dim, out_dim, d) = m;
  f.block(2 * out_dim, out_dim, p.num_rows(), d) = p.normals();
  g.head(2 * out_dim).setZero();
  g.tail(p.num_rows()) = p.offsets();

  std::vector<int> keep(out_dim);
  for (int i = 0; i < out_dim; ++i) keep[i] = i;
  return fourier_motzkin_project(HPolyhedron::from_inequalities(std::move(f), std::move(g)), keep);
}

/// Minkowski sum P + Q via the lifted system
/// { (x, q) : x - q in P, q in Q } followed by elimination of q.
inline HPolyhedron minkowski_sum(const HPolyhedron& p, const HPolyhedron& q) {
  if (p.dim() != q.dim())
    throw std::invalid_argument("minkowski_sum: dimensions must match");
  const int d = p.dim();
  if (p.marked_empty() || q.marked_empty() || is_empty(p) || is_empty(q))
    return HPolyhedron::empty_set(d);
  if (p.num_rows() == 0 || q.num_rows() == 0) {  // either operand is the whole space
    Matrix none(0, d);
    return HPolyhedron::from_inequalities(std::move(none), Vector(0));
  }

  Matrix f(p.num_rows() + q.num_rows(), 2 * d);
  Vector g(f.rows());
  f.setZero();
  f.block(0, 0, p.num_rows(), d) = p.normals();
  f.block(0, d, p.num_rows(), d) = -p.normals();
  f.block(p.num_rows(), d, q.num_rows(), d) = q.normals();
  g.head(p.num_rows()) = p.offsets();
  g.tail(q.num_rows()) = q.offsets();

  std::vector<int> keep(d);
  for (int i = 0; i < d; ++i) keep[i] = i;
  return fourier_motzkin_project(HPolyhedron::from_inequalities(std::move(f), std::move(g)), keep);
}

/// Containment P ⊆ Q: every row (g, h) of Q satisfies max_{x in P} g'x <= h + tol.
/// An unbounded support LP means P escapes that half-space, hence not-subset.
inline bool is_subset(const HPolyhedron& p, const HPolyhedron& q, double tol = kSetTol) {
  if (p.dim() != q.dim())
    throw std::invalid_argument("is_subset: dimensions must match");
  if (p.marked_empty()) return true;
  if (q.marked_empty()) return is_empty(p);
  for (int i = 0; i < q.num_rows(); ++i) {
    const SolveOutcome res =
        solve_lp(LpProblem(-q.normals().row(i).transpose(), p.normals(), p.offsets()));
    if (res.status == SolveStatus::Unbounded) return false;
    if (res.status == SolveStatus::Infeasible) return true;  // P is empty
    if (-res.value > q.offsets()(i) + tol) return false;
  }
  return true;
}

/// Two-sided containment at the same tolerance.
inline bool set_equal(const HPolyhedron& p, const HPolyhedron& q, double tol = kSetTol) {
  return is_subset(p, q, tol) && is_subset(q, p, tol);
}

/// Text form: header "dim <d> rows <r>" followed by one row per line,
/// d normal coefficients then the offset. The empty set serialises as its
/// canonical certificate row (zero normal, offset -1).
inline std::string to_text(const HPolyhedron& p) {
  std::ostringstream out;
  out << "dim " << p.dim() << " rows " << (p.marked_empty() ? 1 : p.num_rows()) << "\n";
  auto put = [&out](double v, bool last) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << buf << (last ? "\n" : " ");
  };
  if (p.marked_empty()) {
    for (int j = 0; j < p.dim(); ++j) put(0.0, false);
    put(-1.0, true);
    return out.str();
  }
  for (int i = 0; i < p.num_rows(); ++i) {
    for (int j = 0; j < p.dim(); ++j) put(p.normals()(i, j), false);
    put(p.offsets()(i), true);
  }
  return out.str();
}

inline HPolyhedron hpolyhedron_from_text(const std::string& text) {
  std::istringstream in(text);
  std::string tag_dim, tag_rows;
  int d = 0, r = 0;
  if (!(in >> tag_dim >> d >> tag_rows >> r) || tag_dim != "dim" || tag_rows != "rows" ||
      d <= 0 || r < 0)
    throw std::runtime_error("polytope parse: expected header 'dim <d> rows <r>'");
  Matrix f(r, d);
  Vector g(r);
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < d; ++j)
      if (!(in >> f(i, j))) throw std::runtime_error("polytope parse: truncated row data");
    if (!(in >> g(i))) throw std::runtime_error("polytope parse: truncated row data");
  }
  return HPolyhedron::from_inequalities(std::move(f), std::move(g));
}

}  // namespace mpckit
