#pragma once

// Exact linear algebra over the rationals: reduced row echelon form, rank,
// kernel bases and linear system solves.

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

#include "iot/types.hpp"

namespace iot {

struct Echelon {
  std::vector<Vector> rows;          // nonzero rows of the reduced echelon form
  std::vector<std::size_t> pivots;   // pivot column of each row
};

/// Gauss-Jordan elimination to reduced row echelon form.
inline Echelon row_reduce(std::vector<Vector> rows, std::size_t dim) {
  for (const auto& r : rows)
    if (r.size() != dim) throw std::invalid_argument("row length differs from dimension");
  Echelon e;
  std::size_t lead = 0;
  for (std::size_t col = 0; col < dim && lead < rows.size(); ++col) {
    std::size_t pivot = lead;
    while (pivot < rows.size() && rows[pivot][col].is_zero()) ++pivot;
    if (pivot == rows.size()) continue;
    std::swap(rows[lead], rows[pivot]);
    const Rational inv = Rational(1) / rows[lead][col];
    for (std::size_t j = col; j < dim; ++j)
      if (!rows[lead][j].is_zero()) rows[lead][j] *= inv;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (r == lead || rows[r][col].is_zero()) continue;
      const Rational factor = rows[r][col];
      for (std::size_t j = col; j < dim; ++j)
        if (!rows[lead][j].is_zero()) rows[r][j] -= factor * rows[lead][j];
    }
    e.pivots.push_back(col);
    ++lead;
  }
  rows.resize(lead);
  e.rows = std::move(rows);
  return e;
}

inline std::size_t rank(const std::vector<Vector>& rows, std::size_t dim) {
  return row_reduce(rows, dim).pivots.size();
}

/// Rank of the span of the given vectors (callers pass difference vectors
/// when an affine dimension is wanted). An empty list has rank 0.
inline std::size_t affine_rank(const std::vector<Vector>& vectors) {
  if (vectors.empty()) return 0;
  return rank(vectors, vectors.front().size());
}

/// Affine dimension of a point set: rank of differences to the first point.
inline long affine_dimension(const std::vector<Vector>& points) {
  if (points.empty()) throw std::invalid_argument("affine dimension of an empty set");
  std::vector<Vector> diffs;
  for (std::size_t k = 1; k < points.size(); ++k) {
    Vector d(points[k].size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = points[k][i] - points[0][i];
    diffs.push_back(std::move(d));
  }
  return static_cast<long>(affine_rank(diffs));
}

/// Kernel basis from the reduced echelon form, one vector per free column in
/// increasing column order (free coordinate set to 1).
inline std::vector<Vector> nullspace_basis(const std::vector<Vector>& rows, std::size_t dim) {
  const Echelon e = row_reduce(rows, dim);
  std::vector<bool> is_pivot(dim, false);
  for (auto p : e.pivots) is_pivot[p] = true;
  std::vector<Vector> basis;
  for (std::size_t free = 0; free < dim; ++free) {
    if (is_pivot[free]) continue;
    Vector v(dim);
    v[free] = 1;
    for (std::size_t r = 0; r < e.rows.size(); ++r)
      if (!e.rows[r][free].is_zero()) v[e.pivots[r]] = -e.rows[r][free];
    basis.push_back(std::move(v));
  }
  return basis;
}

struct LinearSolution {
  Vector particular;            // one solution (free variables at zero)
  std::vector<Vector> kernel;   // homogeneous solution basis
  bool unique() const { return kernel.empty(); }
};

/// Solves rows * x = rhs exactly; nullopt when inconsistent.
inline std::optional<LinearSolution> solve_linear(const std::vector<Vector>& rows, const Vector& rhs,
                                                  std::size_t dim) {
  if (rows.size() != rhs.size()) throw std::invalid_argument("rhs length differs from row count");
  std::vector<Vector> aug;
  aug.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    Vector a = rows[r];
    a.push_back(rhs[r]);
    aug.push_back(std::move(a));
  }
  const Echelon e = row_reduce(std::move(aug), dim + 1);
  if (!e.pivots.empty() && e.pivots.back() == dim) return std::nullopt;
  LinearSolution sol;
  sol.particular.assign(dim, Rational(0));
  for (std::size_t r = 0; r < e.rows.size(); ++r) sol.particular[e.pivots[r]] = e.rows[r][dim];
  sol.kernel = nullspace_basis(rows, dim);
  return sol;
}

}  // namespace iot
