#pragma once

// Forward optimal transport on finite spaces: optimal value, a vertex
// optimal plan and optimal potentials from the exact simplex, plus the
// Monge and shift-equivalence utilities.

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "iot/lp.hpp"
#include "iot/types.hpp"

namespace iot {

class DualInfeasibleError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct ForwardSolution {
  Rational value;
  TransportPlan plan;
  PotentialPair potentials;  // raw simplex duals, not normalized
};

/// Transportation LP in column-major variables with x >= 0: the first N
/// equalities are the row sums, the next M the column sums.
inline LinearSystem transport_system(const MarginalPair& marg) {
  const std::size_t n = marg.rows(), m = marg.cols();
  LinearSystem sys(n * m);
  for (std::size_t i = 0; i < n; ++i) {
    Vector row(n * m);
    for (std::size_t j = 0; j < m; ++j) row[cell_index(i, j, n)] = 1;
    sys.add_equality(std::move(row), marg.mu[i]);
  }
  for (std::size_t j = 0; j < m; ++j) {
    Vector row(n * m);
    for (std::size_t i = 0; i < n; ++i) row[cell_index(i, j, n)] = 1;
    sys.add_equality(std::move(row), marg.nu[j]);
  }
  for (std::size_t d = 0; d < n * m; ++d) sys.set_lower(d, 0);
  return sys;
}

inline ForwardSolution solve_forward(const CostMatrix& c, const MarginalPair& marg) {
  const std::size_t n = marg.rows(), m = marg.cols();
  if (c.rows() != n || c.cols() != m) throw std::invalid_argument("cost shape differs from marginals");
  const LpResult lp = solve_lp(c.vectorize(), transport_system(marg));
  if (lp.status != LpStatus::optimal) throw std::invalid_argument("marginals admit no transport plan");
  ForwardSolution sol;
  sol.value = lp.value;
  sol.plan = TransportPlan::from_vector(lp.point, n, m);
  sol.potentials.f.assign(lp.equality_duals.begin(), lp.equality_duals.begin() + static_cast<long>(n));
  sol.potentials.g.assign(lp.equality_duals.begin() + static_cast<long>(n), lp.equality_duals.end());
  return sol;
}

inline Rational ot_value(const CostMatrix& c, const MarginalPair& marg) { return solve_forward(c, marg).value; }

inline Rational dual_value(const PotentialPair& p, const MarginalPair& marg) {
  return dot(p.f, marg.mu) + dot(p.g, marg.nu);
}

inline bool dual_feasible(const CostMatrix& c, const PotentialPair& p) {
  for (std::size_t i = 0; i < c.rows(); ++i)
    for (std::size_t j = 0; j < c.cols(); ++j)
      if (p.f[i] + p.g[j] > c(i, j)) return false;
  return true;
}

/// Complementary slackness on supp(plan). Dual infeasible potentials raise
/// DualInfeasibleError instead of returning false.
inline bool check_primal_dual_optimal(const CostMatrix& c, const TransportPlan& plan, const PotentialPair& p) {
  if (p.f.size() != c.rows() || p.g.size() != c.cols() || plan.rows() != c.rows() || plan.cols() != c.cols())
    throw std::invalid_argument("shape mismatch between cost, plan and potentials");
  for (std::size_t i = 0; i < c.rows(); ++i)
    for (std::size_t j = 0; j < c.cols(); ++j)
      if (p.f[i] + p.g[j] > c(i, j))
        throw DualInfeasibleError("f_" + std::to_string(i) + " + g_" + std::to_string(j) + " exceeds the cost");
  for (const auto& [i, j] : support(plan))
    if (p.f[i] + p.g[j] != c(i, j)) return false;
  return true;
}

/// Adjacent 2x2 minors; they imply the inequality for every quadruple.
inline bool is_monge(const CostMatrix& c) {
  for (std::size_t i = 0; i + 1 < c.rows(); ++i)
    for (std::size_t j = 0; j + 1 < c.cols(); ++j)
      if (c(i, j) + c(i + 1, j + 1) > c(i, j + 1) + c(i + 1, j)) return false;
  return true;
}

inline Vector cumulative(const Vector& w) {
  Vector a(w.size() + 1);
  for (std::size_t i = 0; i < w.size(); ++i) a[i + 1] = a[i] + w[i];
  return a;
}

/// pi_ij = |(A_{i-1}, A_i] intersect (B_{j-1}, B_j]|.
inline TransportPlan northwest_monotone_plan(const MarginalPair& marg) {
  const Vector a = cumulative(marg.mu), b = cumulative(marg.nu);
  TransportPlan p(marg.rows(), marg.cols());
  for (std::size_t i = 0; i < marg.rows(); ++i)
    for (std::size_t j = 0; j < marg.cols(); ++j) {
      Rational len = min(a[i + 1], b[j + 1]) - max(a[i], b[j]);
      if (len.sign() > 0) p(i, j) = std::move(len);
    }
  return p;
}

inline CostMatrix shift(const CostMatrix& c, const Vector& a, const Vector& b) {
  if (a.size() != c.rows() || b.size() != c.cols()) throw std::invalid_argument("shift vector lengths differ from cost shape");
  CostMatrix out = c;
  for (std::size_t i = 0; i < c.rows(); ++i)
    for (std::size_t j = 0; j < c.cols(); ++j) out(i, j) += a[i] + b[j];
  return out;
}

/// Representative with zero first row and first column.
inline CostMatrix shift_canonical_form(const CostMatrix& c) {
  CostMatrix out = c;
  if (c.rows() == 0 || c.cols() == 0) return out;
  for (std::size_t i = 0; i < c.rows(); ++i) {
    const Rational r = c(i, 0);
    for (std::size_t j = 0; j < c.cols(); ++j) out(i, j) -= r;
  }
  Vector first(c.cols());
  for (std::size_t j = 0; j < c.cols(); ++j) first[j] = out(0, j);
  for (std::size_t i = 0; i < c.rows(); ++i)
    for (std::size_t j = 0; j < c.cols(); ++j) out(i, j) -= first[j];
  return out;
}

inline bool shift_equivalent(const CostMatrix& a, const CostMatrix& b) {
  return shift_canonical_form(a) == shift_canonical_form(b);
}

}  // namespace iot
