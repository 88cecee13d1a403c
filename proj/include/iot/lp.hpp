#pragma once

// Exact rational linear programming. A two-phase tableau simplex with
// Bland's anti-cycling rule solves
//
//   min / max  <objective, x>
//   s.t.       <row, x>  = rhs   (equalities)
//              <row, x> >= rhs   (inequalities)
//              lower <= x <= upper (optional, per coordinate)
//
// Uniqueness of a solution set is decided by minimizing and maximizing
// every coordinate over the feasible region.

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "iot/linalg.hpp"
#include "iot/types.hpp"

namespace iot {

struct LinearConstraint {
  Vector row;
  Rational rhs;
};

struct LinearSystem {
  std::size_t dimension = 0;
  std::vector<LinearConstraint> equalities;    // <row, x> == rhs
  std::vector<LinearConstraint> inequalities;  // <row, x> >= rhs
  std::vector<std::optional<Rational>> lower;  // empty or one entry per coordinate
  std::vector<std::optional<Rational>> upper;

  LinearSystem() = default;
  explicit LinearSystem(std::size_t dim) : dimension(dim) {}

  void add_equality(Vector row, Rational rhs) {
    check_row(row);
    equalities.push_back({std::move(row), std::move(rhs)});
  }
  void add_inequality(Vector row, Rational rhs) {
    check_row(row);
    inequalities.push_back({std::move(row), std::move(rhs)});
  }
  void set_lower(std::size_t d, Rational v) {
    ensure_bounds();
    lower[d] = std::move(v);
  }
  void set_upper(std::size_t d, Rational v) {
    ensure_bounds();
    upper[d] = std::move(v);
  }
  /// Adds lo <= x_d <= hi on every coordinate.
  void set_box(const Rational& lo, const Rational& hi) {
    for (std::size_t d = 0; d < dimension; ++d) {
      set_lower(d, lo);
      set_upper(d, hi);
    }
  }
  std::optional<Rational> lower_bound(std::size_t d) const {
    return lower.empty() ? std::nullopt : lower[d];
  }
  std::optional<Rational> upper_bound(std::size_t d) const {
    return upper.empty() ? std::nullopt : upper[d];
  }

  /// Exact check that x satisfies every constraint.
  bool satisfied_by(const Vector& x) const {
    if (x.size() != dimension) return false;
    for (const auto& c : equalities)
      if (dot(c.row, x) != c.rhs) return false;
    for (const auto& c : inequalities)
      if (dot(c.row, x) < c.rhs) return false;
    for (std::size_t d = 0; d < dimension; ++d) {
      if (auto lo = lower_bound(d); lo && x[d] < *lo) return false;
      if (auto hi = upper_bound(d); hi && x[d] > *hi) return false;
    }
    return true;
  }

 private:
  void check_row(const Vector& row) const {
    if (row.size() != dimension) throw std::invalid_argument("constraint row length differs from dimension");
  }
  void ensure_bounds() {
    if (lower.empty()) {
      lower.assign(dimension, std::nullopt);
      upper.assign(dimension, std::nullopt);
    }
  }
};

enum class LpStatus { optimal, infeasible, unbounded };
enum class Sense { minimize, maximize };

struct LpResult {
  LpStatus status = LpStatus::infeasible;
  Rational value;
  Vector point;
  Vector equality_duals;    // one per equality constraint
  Vector inequality_duals;  // one per inequality constraint
};

namespace detail {

/// Tableau simplex over the standard form  A z = b, z >= 0, b >= 0.
/// Phase one runs once at construction; afterwards any number of
/// objectives can be optimized starting from the current feasible basis.
class Simplex {
 public:
  explicit Simplex(const LinearSystem& sys) : dim_(sys.dimension) {
    build(sys);
    phase_one();
  }

  bool feasible() const { return feasible_; }

  /// Minimizes <cost, x> (x in original coordinates) from the current basis.
  LpStatus minimize(const Vector& cost) {
    if (!feasible_) return LpStatus::infeasible;
    set_objective(cost);
    return iterate(/*allow_artificial=*/false);
  }

  Rational objective_value(const Vector& cost) const {
    const Vector x = point();
    return dot(cost, x);
  }

  Vector point() const {
    Vector z(num_cols_);
    for (std::size_t r = 0; r < basis_.size(); ++r) z[basis_[r]] = rhs(r);
    Vector x(dim_);
    for (std::size_t d = 0; d < dim_; ++d) {
      x[d] = var_offset_[d];
      for (const auto& [col, coef] : var_map_[d])
        if (!z[col].is_zero()) x[d] += coef * z[col];
    }
    return x;
  }

  /// Dual value of every standard-form row expressed for the original
  /// constraint it came from (sign-normalization undone). Rows removed as
  /// redundant get zero.
  Vector row_duals() const {
    Vector y(num_rows_orig_);
    for (std::size_t r = 0; r < num_rows_orig_; ++r) {
      Rational v = -obj_[art_begin_ + r];
      if (row_negated_[r]) v = -v;
      y[r] = v;
    }
    return y;
  }

  std::size_t equality_count() const { return num_eq_; }
  std::size_t inequality_count() const { return num_ineq_; }

 private:
  using Row = std::vector<Rational>;

  std::size_t dim_;
  std::vector<Rational> var_offset_;
  std::vector<std::vector<std::pair<std::size_t, Rational>>> var_map_;
  std::size_t num_struct_ = 0;
  std::size_t num_cols_ = 0;  // structural + slack + artificial
  std::size_t art_begin_ = 0;
  std::size_t num_rows_orig_ = 0;
  std::size_t num_eq_ = 0;
  std::size_t num_ineq_ = 0;
  std::vector<bool> row_negated_;
  std::vector<Row> rows_;  // each of length num_cols_ + 1, last entry = rhs
  std::vector<std::size_t> basis_;
  Row obj_;                // reduced costs, length num_cols_ + 1
  bool feasible_ = false;

  const Rational& rhs(std::size_t r) const { return rows_[r][num_cols_]; }

  void build(const LinearSystem& sys) {
    var_offset_.assign(dim_, Rational(0));
    var_map_.assign(dim_, {});
    struct BoundRow {
      std::size_t col;
      Rational width;
    };
    std::vector<BoundRow> bound_rows;
    std::size_t col = 0;
    for (std::size_t d = 0; d < dim_; ++d) {
      auto lo = sys.lower_bound(d);
      auto hi = sys.upper_bound(d);
      if (lo) {
        var_offset_[d] = *lo;
        var_map_[d].push_back({col, Rational(1)});
        if (hi) bound_rows.push_back({col, *hi - *lo});
        ++col;
      } else if (hi) {
        var_offset_[d] = *hi;
        var_map_[d].push_back({col++, Rational(-1)});
      } else {
        var_map_[d].push_back({col++, Rational(1)});
        var_map_[d].push_back({col++, Rational(-1)});
      }
    }
    num_struct_ = col;
    num_eq_ = sys.equalities.size();
    num_ineq_ = sys.inequalities.size();
    const std::size_t num_slack = num_ineq_ + bound_rows.size();
    num_rows_orig_ = num_eq_ + num_ineq_ + bound_rows.size();
    art_begin_ = num_struct_ + num_slack;
    num_cols_ = art_begin_ + num_rows_orig_;

    rows_.assign(num_rows_orig_, Row(num_cols_ + 1));
    row_negated_.assign(num_rows_orig_, false);
    auto fill = [&](std::size_t r, const LinearConstraint& c) {
      Rational b = c.rhs;
      for (std::size_t d = 0; d < dim_; ++d) {
        if (c.row[d].is_zero()) continue;
        b -= c.row[d] * var_offset_[d];
        for (const auto& [cc, coef] : var_map_[d]) rows_[r][cc] += c.row[d] * coef;
      }
      rows_[r][num_cols_] = b;
    };
    std::size_t r = 0;
    for (const auto& c : sys.equalities) fill(r++, c);
    std::size_t slack = num_struct_;
    for (const auto& c : sys.inequalities) {
      fill(r, c);
      rows_[r][slack++] = -1;
      ++r;
    }
    for (const auto& br : bound_rows) {
      rows_[r][br.col] = 1;
      rows_[r][slack++] = 1;
      rows_[r][num_cols_] = br.width;
      ++r;
    }
    for (std::size_t i = 0; i < num_rows_orig_; ++i) {
      if (rows_[i][num_cols_].sign() < 0) {
        for (auto& v : rows_[i])
          if (!v.is_zero()) v = -v;
        row_negated_[i] = true;
      }
      rows_[i][art_begin_ + i] = 1;
    }
    basis_.resize(num_rows_orig_);
    for (std::size_t i = 0; i < num_rows_orig_; ++i) basis_[i] = art_begin_ + i;
  }

  void phase_one() {
    // Minimize the sum of artificials: reduced cost of non-artificial column
    // j is -(sum of column j over rows).
    obj_.assign(num_cols_ + 1, Rational(0));
    for (const auto& row : rows_)
      for (std::size_t j = 0; j < art_begin_; ++j)
        if (!row[j].is_zero()) obj_[j] -= row[j];
    for (const auto& row : rows_) obj_[num_cols_] -= row[num_cols_];
    iterate(/*allow_artificial=*/true);
    feasible_ = obj_[num_cols_].is_zero();
    if (!feasible_) return;

    // Drive artificials out of the basis; rows where that is impossible are
    // linearly dependent on the others and are dropped.
    for (std::size_t r = 0; r < rows_.size();) {
      if (basis_[r] < art_begin_) {
        ++r;
        continue;
      }
      std::size_t enter = num_cols_;
      for (std::size_t j = 0; j < art_begin_; ++j)
        if (!rows_[r][j].is_zero()) {
          enter = j;
          break;
        }
      if (enter == num_cols_) {
        rows_.erase(rows_.begin() + static_cast<long>(r));
        basis_.erase(basis_.begin() + static_cast<long>(r));
        continue;
      }
      pivot(r, enter);
      ++r;
    }
  }

  void set_objective(const Vector& cost) {
    obj_.assign(num_cols_ + 1, Rational(0));
    for (std::size_t d = 0; d < dim_; ++d) {
      if (cost[d].is_zero()) continue;
      for (const auto& [col, coef] : var_map_[d]) obj_[col] += cost[d] * coef;
    }
    for (std::size_t r = 0; r < rows_.size(); ++r) {
      const Rational cb = obj_[basis_[r]];
      if (cb.is_zero()) continue;
      for (std::size_t j = 0; j <= num_cols_; ++j)
        if (!rows_[r][j].is_zero()) obj_[j] -= cb * rows_[r][j];
    }
  }

  LpStatus iterate(bool allow_artificial) {
    const std::size_t limit = allow_artificial ? num_cols_ : art_begin_;
    for (;;) {
      // Bland: smallest-index improving column.
      std::size_t enter = limit;
      for (std::size_t j = 0; j < limit; ++j)
        if (obj_[j].sign() < 0) {
          enter = j;
          break;
        }
      if (enter == limit) return LpStatus::optimal;
      std::size_t leave = rows_.size();
      Rational best;
      for (std::size_t r = 0; r < rows_.size(); ++r) {
        const Rational& a = rows_[r][enter];
        if (a.sign() <= 0) continue;
        Rational ratio = rhs(r) / a;
        if (leave == rows_.size() || ratio < best || (ratio == best && basis_[r] < basis_[leave])) {
          leave = r;
          best = std::move(ratio);
        }
      }
      if (leave == rows_.size()) return LpStatus::unbounded;
      pivot(leave, enter);
    }
  }

  void pivot(std::size_t r, std::size_t c) {
    Row& prow = rows_[r];
    const Rational inv = Rational(1) / prow[c];
    std::vector<std::size_t> nz;
    for (std::size_t j = 0; j <= num_cols_; ++j) {
      if (prow[j].is_zero()) continue;
      prow[j] *= inv;
      nz.push_back(j);
    }
    auto eliminate = [&](Row& row) {
      if (row[c].is_zero()) return;
      const Rational f = row[c];
      for (std::size_t j : nz) row[j] -= f * prow[j];
    };
    for (std::size_t i = 0; i < rows_.size(); ++i)
      if (i != r) eliminate(rows_[i]);
    eliminate(obj_);
    basis_[r] = c;
  }
};

inline void check_dimensions(const Vector& objective, const LinearSystem& sys) {
  if (objective.size() != sys.dimension) throw std::invalid_argument("objective length differs from dimension");
  for (const auto& c : sys.equalities)
    if (c.row.size() != sys.dimension) throw std::invalid_argument("constraint row length differs from dimension");
  for (const auto& c : sys.inequalities)
    if (c.row.size() != sys.dimension) throw std::invalid_argument("constraint row length differs from dimension");
}

}  // namespace detail

/// Exact LP optimum with an optimal basic point; duals are read off the
/// final basis (nonnegative for >= rows when minimizing).
inline LpResult solve_lp(const Vector& objective, const LinearSystem& sys, Sense sense = Sense::minimize) {
  detail::check_dimensions(objective, sys);
  detail::Simplex simplex(sys);
  LpResult res;
  if (!simplex.feasible()) return res;
  Vector cost = objective;
  if (sense == Sense::maximize)
    for (auto& v : cost) v = -v;
  res.status = simplex.minimize(cost);
  if (res.status != LpStatus::optimal) return res;
  res.point = simplex.point();
  res.value = dot(objective, res.point);
  Vector y = simplex.row_duals();
  if (sense == Sense::maximize)
    for (auto& v : y) v = -v;
  res.equality_duals.assign(y.begin(), y.begin() + static_cast<long>(simplex.equality_count()));
  res.inequality_duals.assign(y.begin() + static_cast<long>(simplex.equality_count()),
                              y.begin() + static_cast<long>(simplex.equality_count() + simplex.inequality_count()));
  return res;
}

/// Phase-one feasibility; returns a feasible point or nullopt.
inline std::optional<Vector> check_feasible(const LinearSystem& sys) {
  detail::Simplex simplex(sys);
  if (!simplex.feasible()) return std::nullopt;
  return simplex.point();
}

enum class SolutionStatus { infeasible, unique_point, nonunique };

inline std::string to_string(SolutionStatus s) {
  switch (s) {
    case SolutionStatus::infeasible: return "infeasible";
    case SolutionStatus::unique_point: return "unique_point";
    case SolutionStatus::nonunique: return "nonunique";
  }
  return "nonunique";
}

struct SolutionSetDescription {
  SolutionStatus status = SolutionStatus::infeasible;
  std::optional<Vector> point;   // the unique point, or some feasible point
  std::vector<Range> ranges;     // per coordinate, over the solution set
  std::vector<Vector> witnesses; // feasible points met while computing ranges
};

/// Decides uniqueness by 2*D coordinate LPs sharing one phase-one basis.
inline SolutionSetDescription solution_set(const LinearSystem& sys) {
  SolutionSetDescription out;
  detail::Simplex simplex(sys);
  if (!simplex.feasible()) return out;
  out.point = simplex.point();
  out.witnesses.push_back(*out.point);
  bool unique = true;
  out.ranges.resize(sys.dimension);
  for (std::size_t d = 0; d < sys.dimension; ++d) {
    Vector e(sys.dimension);
    e[d] = 1;
    Range range;
    if (simplex.minimize(e) == LpStatus::optimal) {
      out.witnesses.push_back(simplex.point());
      range.lo = out.witnesses.back()[d];
    }
    e[d] = -1;
    if (simplex.minimize(e) == LpStatus::optimal) {
      out.witnesses.push_back(simplex.point());
      range.hi = out.witnesses.back()[d];
    }
    unique = unique && range.is_point();
    out.ranges[d] = std::move(range);
  }
  out.status = unique ? SolutionStatus::unique_point : SolutionStatus::nonunique;
  if (unique) {
    Vector p(sys.dimension);
    for (std::size_t d = 0; d < sys.dimension; ++d) p[d] = *out.ranges[d].lo;
    out.point = std::move(p);
  }
  return out;
}

/// Affine hull of a feasible system's solution set: a base point and a basis
/// of directions. Implicit equalities among the inequalities are detected
/// with the witness points first and an exact LP only when needed.
inline std::pair<Vector, std::vector<Vector>> affine_hull(const LinearSystem& sys,
                                                          const SolutionSetDescription& desc) {
  if (desc.status == SolutionStatus::infeasible || !desc.point)
    throw std::invalid_argument("affine hull of an infeasible system");
  std::vector<Vector> rows;
  for (const auto& c : sys.equalities) rows.push_back(c.row);
  for (std::size_t d = 0; d < sys.dimension; ++d) {
    if (d < desc.ranges.size() && desc.ranges[d].is_point()) {
      Vector e(sys.dimension);
      e[d] = 1;
      rows.push_back(std::move(e));
    }
  }
  std::optional<detail::Simplex> simplex;
  for (const auto& c : sys.inequalities) {
    bool strict = false;
    for (const auto& w : desc.witnesses)
      if (dot(c.row, w) > c.rhs) {
        strict = true;
        break;
      }
    if (strict) continue;
    if (!simplex) simplex.emplace(sys);
    Vector neg(sys.dimension);
    for (std::size_t d = 0; d < sys.dimension; ++d) neg[d] = -c.row[d];
    if (simplex->minimize(neg) == LpStatus::optimal && dot(c.row, simplex->point()) == c.rhs)
      rows.push_back(c.row);
  }
  return {*desc.point, nullspace_basis(rows, sys.dimension)};
}

}  // namespace iot
