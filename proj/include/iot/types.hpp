#pragma once

// Domain value types shared by all modules: marginals, plans, potentials,
// observation records and identifiability reports.

#include <algorithm>
#include <cstddef>
#include <optional>
#include <tuple>
#include <string>
#include <utility>
#include <vector>

#include "iot/matrix.hpp"
#include "iot/rational.hpp"

namespace iot {

using Vector = std::vector<Rational>;
using CostMatrix = Matrix<Rational>;
using TransportPlan = Matrix<Rational>;
using Cell = std::pair<std::size_t, std::size_t>;

struct MarginalPair {
  Vector mu;
  Vector nu;

  std::size_t rows() const { return mu.size(); }
  std::size_t cols() const { return nu.size(); }
  friend bool operator==(const MarginalPair&, const MarginalPair&) = default;
  friend bool operator<(const MarginalPair& a, const MarginalPair& b) {
    return std::tie(a.mu, a.nu) < std::tie(b.mu, b.nu);
  }
};

struct PotentialPair {
  Vector f;
  Vector g;
  friend bool operator==(const PotentialPair&, const PotentialPair&) = default;
};

enum class ClassKind { general, monge, sym0, box };

struct CostClass {
  ClassKind kind = ClassKind::general;
  Rational box_bound;  // C0, only meaningful for ClassKind::box

  static CostClass general() { return {}; }
  static CostClass monge() { return {ClassKind::monge, {}}; }
  static CostClass sym0() { return {ClassKind::sym0, {}}; }
  static CostClass box(Rational c0) { return {ClassKind::box, std::move(c0)}; }
  friend bool operator==(const CostClass&, const CostClass&) = default;
};

inline std::string to_string(ClassKind k) {
  switch (k) {
    case ClassKind::general: return "general";
    case ClassKind::monge: return "monge";
    case ClassKind::sym0: return "sym0";
    case ClassKind::box: return "box";
  }
  return "general";
}

inline ClassKind parse_class_kind(const std::string& s) {
  if (s == "general") return ClassKind::general;
  if (s == "monge") return ClassKind::monge;
  if (s == "sym0") return ClassKind::sym0;
  if (s == "box") return ClassKind::box;
  throw ParseError("unknown cost class '" + s + "'");
}

struct ObservationRecord {
  MarginalPair marginals;
  std::optional<Rational> alpha;
  std::optional<TransportPlan> plan;
  std::optional<PotentialPair> potentials;

  friend bool operator==(const ObservationRecord&, const ObservationRecord&) = default;
};

struct ObservationSet {
  std::vector<ObservationRecord> records;
  CostClass cost_class;

  std::size_t rows() const { return records.empty() ? 0 : records.front().marginals.rows(); }
  std::size_t cols() const { return records.empty() ? 0 : records.front().marginals.cols(); }
  friend bool operator==(const ObservationSet&, const ObservationSet&) = default;
};

// ---------------------------------------------------------------------------
// Plan helpers

inline Vector row_sums(const Matrix<Rational>& m) {
  Vector r(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) r[i] += m(i, j);
  return r;
}

inline Vector col_sums(const Matrix<Rational>& m) {
  Vector c(m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) c[j] += m(i, j);
  return c;
}

inline std::vector<Cell> support(const TransportPlan& plan) {
  std::vector<Cell> s;
  for (std::size_t j = 0; j < plan.cols(); ++j)
    for (std::size_t i = 0; i < plan.rows(); ++i)
      if (plan(i, j).sign() > 0) s.emplace_back(i, j);
  return s;
}

inline bool support_subset(const TransportPlan& inner, const TransportPlan& outer) {
  for (std::size_t i = 0; i < inner.rows(); ++i)
    for (std::size_t j = 0; j < inner.cols(); ++j)
      if (inner(i, j).sign() > 0 && outer(i, j).sign() <= 0) return false;
  return true;
}

/// Exact membership in the transportation polytope of `marg`.
inline bool in_polytope(const TransportPlan& plan, const MarginalPair& marg) {
  if (plan.rows() != marg.rows() || plan.cols() != marg.cols()) return false;
  for (std::size_t i = 0; i < plan.rows(); ++i)
    for (std::size_t j = 0; j < plan.cols(); ++j)
      if (plan(i, j).sign() < 0) return false;
  return row_sums(plan) == marg.mu && col_sums(plan) == marg.nu;
}

inline Rational frobenius(const Matrix<Rational>& a, const Matrix<Rational>& b) {
  Rational s;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (!b(i, j).is_zero()) s += a(i, j) * b(i, j);
  return s;
}

inline Rational dot(const Vector& a, const Vector& b) {
  Rational s;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!a[i].is_zero() && !b[i].is_zero()) s += a[i] * b[i];
  return s;
}

/// f (+) g = [f_i + g_j].
inline CostMatrix outer_sum(const Vector& f, const Vector& g) {
  CostMatrix m(f.size(), g.size());
  for (std::size_t i = 0; i < f.size(); ++i)
    for (std::size_t j = 0; j < g.size(); ++j) m(i, j) = f[i] + g[j];
  return m;
}

// ---------------------------------------------------------------------------
// Reports

enum class Verdict { identifiable, identifiable_in_quotient, ambiguous, inconsistent, undecided_cap };

inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::identifiable: return "identifiable";
    case Verdict::identifiable_in_quotient: return "identifiable_in_quotient";
    case Verdict::ambiguous: return "ambiguous";
    case Verdict::inconsistent: return "inconsistent";
    case Verdict::undecided_cap: return "undecided_cap";
  }
  return "ambiguous";
}

inline Verdict parse_verdict(const std::string& s) {
  for (Verdict v : {Verdict::identifiable, Verdict::identifiable_in_quotient, Verdict::ambiguous,
                    Verdict::inconsistent, Verdict::undecided_cap})
    if (to_string(v) == s) return v;
  throw ParseError("unknown verdict '" + s + "'");
}

/// Closed interval with possibly infinite endpoints (nullopt = unbounded).
struct Range {
  std::optional<Rational> lo;
  std::optional<Rational> hi;

  bool is_point() const { return lo && hi && *lo == *hi; }
  bool contains(const Rational& x) const { return (!lo || *lo <= x) && (!hi || x <= *hi); }
  friend bool operator==(const Range&, const Range&) = default;
};

/// Affine description of a set of cost vectors (column-major): base point
/// plus free directions. Shift directions a (+) b are listed separately;
/// alternatives hold further isolated candidate points.
struct AffineClassDescription {
  Vector base;
  std::vector<Vector> directions;
  std::vector<Vector> shift_directions;
  std::vector<Vector> alternatives;

  friend bool operator==(const AffineClassDescription&, const AffineClassDescription&) = default;
};

struct IdentifiabilityReport {
  Verdict verdict = Verdict::ambiguous;
  std::optional<CostMatrix> recovered_cost;
  std::optional<AffineClassDescription> ambiguity;
  std::optional<long> residual_dimension;
  std::vector<Range> coordinate_ranges;  // column-major, empty when not computed
  std::optional<long> achieved_rank;
  std::optional<bool> sufficient_condition_met;  // set by the sufficient-only checks
  std::vector<std::string> diagnostics;

  friend bool operator==(const IdentifiabilityReport&, const IdentifiabilityReport&) = default;
};

// ---------------------------------------------------------------------------
// Validation

struct Violation {
  long record = -1;  // -1 for set-level violations
  std::string invariant;
  std::string detail;
  friend bool operator==(const Violation&, const Violation&) = default;
};

inline void check_marginal(const Vector& v, const char* name, long k, std::vector<Violation>& out) {
  Rational sum;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i].sign() < 0)
      out.push_back({k, "negativity", std::string(name) + "[" + std::to_string(i) + "] < 0"});
    sum += v[i];
  }
  if (sum != Rational(1))
    out.push_back({k, "sum-not-one", std::string(name) + " sums to " + sum.str()});
}

/// All invariant violations of an observation set; empty when well formed.
inline std::vector<Violation> validate_observation_set(const ObservationSet& obs) {
  std::vector<Violation> out;
  if (obs.records.empty()) {
    out.push_back({-1, "empty", "observation set has no records"});
    return out;
  }
  const std::size_t n = obs.rows();
  const std::size_t m = obs.cols();
  if (n == 0 || m == 0) out.push_back({-1, "shape", "marginals must be non-empty"});
  if (obs.cost_class.kind == ClassKind::sym0 && n != m)
    out.push_back({-1, "shape", "sym0 class requires N == M"});
  if (obs.cost_class.kind == ClassKind::box && obs.cost_class.box_bound.sign() < 0)
    out.push_back({-1, "box-bound", "box bound must be nonnegative"});

  const auto mode = [](const ObservationRecord& r) {
    return std::make_tuple(r.alpha.has_value(), r.plan.has_value(), r.potentials.has_value());
  };
  for (std::size_t k = 0; k < obs.records.size(); ++k) {
    const auto& r = obs.records[k];
    const long kk = static_cast<long>(k);
    if (r.marginals.rows() != n || r.marginals.cols() != m) {
      out.push_back({kk, "shape", "marginal lengths differ from record 0"});
      continue;
    }
    check_marginal(r.marginals.mu, "mu", kk, out);
    check_marginal(r.marginals.nu, "nu", kk, out);
    if (!r.alpha && !r.plan && !r.potentials)
      out.push_back({kk, "no-information", "record carries no alpha, plan or potentials"});
    if (mode(r) != mode(obs.records.front()))
      out.push_back({kk, "mixed-mode", "record populates a different field subset than record 0"});
    if (r.plan) {
      const auto& p = *r.plan;
      if (p.rows() != n || p.cols() != m) {
        out.push_back({kk, "shape", "plan shape differs from marginals"});
      } else {
        bool negative = false;
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < m; ++j) negative = negative || p(i, j).sign() < 0;
        if (negative) out.push_back({kk, "negativity", "plan has a negative entry"});
        if (row_sums(p) != r.marginals.mu || col_sums(p) != r.marginals.nu)
          out.push_back({kk, "plan-marginals", "plan row/column sums differ from marginals"});
      }
    }
    if (r.potentials && (r.potentials->f.size() != n || r.potentials->g.size() != m))
      out.push_back({kk, "shape", "potential lengths differ from marginals"});
  }
  return out;
}

}  // namespace iot
