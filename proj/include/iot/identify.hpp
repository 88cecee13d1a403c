#pragma once

// Identifiability procedures. Each operation consumes an ObservationSet in
// one information mode (total costs, potentials, plans, costs and plans, or
// everything) and returns an IdentifiabilityReport. Cost vectors are
// column-major: entry (i, j) sits at i + j * N.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "iot/forward.hpp"
#include "iot/linalg.hpp"
#include "iot/lp.hpp"
#include "iot/polytope.hpp"
#include "iot/types.hpp"

namespace iot {

class ConflictingObservationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct IdentifyOptions {
  std::uint64_t cap = 1000000;     // LP evaluations allowed in a combination sweep
  bool reduce_constraints = false;
  bool vertex_only = false;
  EnumerationOptions enumeration;
};

// ---------------------------------------------------------------------------
// Shared plumbing

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

inline void require_field(const ObservationSet& obs, bool alpha, bool plan, bool potentials, const char* mode) {
  require(!obs.records.empty(), std::string(mode) + ": observation set is empty");
  for (std::size_t k = 0; k < obs.records.size(); ++k) {
    const auto& r = obs.records[k];
    const std::string where = std::string(mode) + ": record " + std::to_string(k);
    require(!alpha || r.alpha.has_value(), where + " has no total cost");
    require(!plan || r.plan.has_value(), where + " has no plan");
    require(!potentials || r.potentials.has_value(), where + " has no potentials");
    require(r.marginals.rows() == obs.rows() && r.marginals.cols() == obs.cols(), where + " has a different shape");
  }
}

/// Vertex sets shared between records with identical marginals.
class VertexCache {
 public:
  explicit VertexCache(EnumerationOptions opts) : opts_(opts) {}
  const ExtremePointSet& get(const MarginalPair& m) {
    auto it = cache_.find(m);
    if (it == cache_.end()) it = cache_.emplace(m, enumerate_extreme_points(m, opts_)).first;
    return it->second;
  }

 private:
  EnumerationOptions opts_;
  std::map<MarginalPair, ExtremePointSet> cache_;
};

inline Vector unit(std::size_t dim, std::size_t d, Rational v = 1) {
  Vector e(dim);
  e[d] = std::move(v);
  return e;
}

/// Linear constraints describing a cost class on N x M cost vectors.
inline void add_class_constraints(LinearSystem& sys, const CostClass& cls, std::size_t n, std::size_t m) {
  const std::size_t dim = n * m;
  switch (cls.kind) {
    case ClassKind::general:
      break;
    case ClassKind::box:
      sys.set_box(Rational(0), cls.box_bound);
      break;
    case ClassKind::monge:
      // c_{i,j+1} + c_{i+1,j} - c_{i,j} - c_{i+1,j+1} >= 0
      for (std::size_t i = 0; i + 1 < n; ++i)
        for (std::size_t j = 0; j + 1 < m; ++j) {
          Vector row(dim);
          row[cell_index(i, j + 1, n)] += 1;
          row[cell_index(i + 1, j, n)] += 1;
          row[cell_index(i, j, n)] -= 1;
          row[cell_index(i + 1, j + 1, n)] -= 1;
          sys.add_inequality(std::move(row), 0);
        }
      break;
    case ClassKind::sym0:
      if (n != m) throw std::invalid_argument("sym0 class requires N == M");
      for (std::size_t i = 0; i < n; ++i) {
        sys.add_equality(unit(dim, cell_index(i, i, n)), 0);
        for (std::size_t j = i + 1; j < n; ++j) {
          Vector row(dim);
          row[cell_index(i, j, n)] = 1;
          row[cell_index(j, i, n)] = -1;
          sys.add_equality(std::move(row), 0);
        }
      }
      break;
  }
}

inline CostMatrix to_cost(const Vector& v, std::size_t n, std::size_t m) { return CostMatrix::from_vector(v, n, m); }

inline IdentifiabilityReport report_from_solution_set(const LinearSystem& sys, const SolutionSetDescription& desc,
                                                      std::size_t n, std::size_t m) {
  IdentifiabilityReport rep;
  switch (desc.status) {
    case SolutionStatus::infeasible:
      rep.verdict = Verdict::inconsistent;
      rep.diagnostics.push_back("no cost matrix satisfies the observed constraints");
      break;
    case SolutionStatus::unique_point:
      rep.verdict = Verdict::identifiable;
      rep.recovered_cost = to_cost(*desc.point, n, m);
      rep.coordinate_ranges = desc.ranges;
      break;
    case SolutionStatus::nonunique: {
      rep.verdict = Verdict::ambiguous;
      auto [base, dirs] = affine_hull(sys, desc);
      AffineClassDescription amb;
      amb.base = std::move(base);
      amb.directions = std::move(dirs);
      rep.residual_dimension = static_cast<long>(amb.directions.size());
      rep.ambiguity = std::move(amb);
      rep.coordinate_ranges = desc.ranges;
      break;
    }
  }
  return rep;
}

/// Folded coordinates of a symmetric zero-diagonal cost: one per pair i < j,
/// ordered by (j, i) so that the order follows the column-major layout.
inline std::vector<std::pair<std::size_t, std::size_t>> sym_pairs(std::size_t n) {
  std::vector<std::pair<std::size_t, std::size_t>> p;
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < j; ++i) p.emplace_back(i, j);
  return p;
}

/// [utr + ltr] x: x_ij + x_ji for every pair i < j.
inline Vector fold(const Matrix<Rational>& x) {
  Vector out;
  for (const auto& [i, j] : sym_pairs(x.rows())) out.push_back(x(i, j) + x(j, i));
  return out;
}

inline CostMatrix unfold(const Vector& t, std::size_t n) {
  CostMatrix c(n, n);
  const auto pairs = sym_pairs(n);
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    c(pairs[p].first, pairs[p].second) = t[p];
    c(pairs[p].second, pairs[p].first) = t[p];
  }
  return c;
}

/// Basis of the shift subspace {a (+) b}: e_i (+) 0 for every row and
/// 0 (+) e_j for columns after the first.
inline std::vector<Vector> shift_basis(std::size_t n, std::size_t m) {
  std::vector<Vector> out;
  for (std::size_t i = 0; i < n; ++i) {
    Vector a(n), b(m);
    a[i] = 1;
    out.push_back(outer_sum(a, b).vectorize());
  }
  for (std::size_t j = 1; j < m; ++j) {
    Vector a(n), b(m);
    b[j] = 1;
    out.push_back(outer_sum(a, b).vectorize());
  }
  return out;
}

/// Vertices of the minimal face of each plan (a single vertex of it in
/// vertex-only mode).
inline std::vector<std::vector<TransportPlan>> face_vertices(const ObservationSet& obs, VertexCache& cache,
                                                             bool vertex_only, std::vector<Face>* faces = nullptr) {
  std::vector<std::vector<TransportPlan>> out;
  for (const auto& r : obs.records) {
    const auto& eps = cache.get(r.marginals);
    Face f = minimal_face(*r.plan, eps);
    if (vertex_only) f = make_face({f.vertex_indices.front()}, eps);
    std::vector<TransportPlan> vs;
    for (auto k : f.vertex_indices) vs.push_back(eps.vertices[k]);
    out.push_back(std::move(vs));
    if (faces) faces->push_back(std::move(f));
  }
  return out;
}

inline void ensure_plans_valid(const ObservationSet& obs) {
  for (std::size_t k = 0; k < obs.records.size(); ++k)
    if (!in_polytope(*obs.records[k].plan, obs.records[k].marginals))
      throw std::invalid_argument("record " + std::to_string(k) + ": plan does not have the record's marginals");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Consistency

struct RecordCheck {
  std::size_t record = 0;
  bool pass = true;
  Rational ot_value;                  // OT value under the tested cost
  std::optional<bool> alpha_ok;
  std::optional<bool> plan_ok;
  std::optional<bool> potentials_ok;
};

/// Checks every populated field of every record against the forward
/// problem for cost c.
inline std::vector<RecordCheck> verify_consistency(const CostMatrix& c, const ObservationSet& obs) {
  std::vector<RecordCheck> out;
  for (std::size_t k = 0; k < obs.records.size(); ++k) {
    const auto& r = obs.records[k];
    RecordCheck chk;
    chk.record = k;
    chk.ot_value = ot_value(c, r.marginals);
    if (r.alpha) chk.alpha_ok = *r.alpha == chk.ot_value;
    if (r.plan) chk.plan_ok = in_polytope(*r.plan, r.marginals) && frobenius(c, *r.plan) == chk.ot_value;
    if (r.potentials)
      chk.potentials_ok = dual_feasible(c, *r.potentials) && dual_value(*r.potentials, r.marginals) == chk.ot_value;
    chk.pass = chk.alpha_ok.value_or(true) && chk.plan_ok.value_or(true) && chk.potentials_ok.value_or(true);
    out.push_back(std::move(chk));
  }
  return out;
}

inline bool all_pass(const std::vector<RecordCheck>& checks) {
  for (const auto& c : checks)
    if (!c.pass) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Repeated marginals and the shift kernel

/// Records with equal marginals are merged in first-occurrence order; the
/// merged plan is the average of the group's plans, potentials are those of
/// the first record. Differing total costs within a group are an error.
inline ObservationSet merge_repeated_marginals(const ObservationSet& obs) {
  ObservationSet out;
  out.cost_class = obs.cost_class;
  std::map<MarginalPair, std::size_t> slot;
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t k = 0; k < obs.records.size(); ++k) {
    auto [it, fresh] = slot.emplace(obs.records[k].marginals, groups.size());
    if (fresh) groups.emplace_back();
    groups[it->second].push_back(k);
  }
  for (const auto& g : groups) {
    ObservationRecord merged = obs.records[g.front()];
    for (std::size_t idx = 1; idx < g.size(); ++idx) {
      const auto& r = obs.records[g[idx]];
      if (merged.alpha.has_value() != r.alpha.has_value() || (merged.alpha && *merged.alpha != *r.alpha))
        throw ConflictingObservationError("records " + std::to_string(g.front()) + " and " + std::to_string(g[idx]) +
                                          " share marginals but report different total costs");
    }
    if (merged.plan && g.size() > 1) {
      TransportPlan avg(merged.plan->rows(), merged.plan->cols());
      const Rational w(mpz_class(1), mpz_class(static_cast<unsigned long>(g.size())));
      for (auto k : g) {
        const auto& p = *obs.records[k].plan;
        for (std::size_t i = 0; i < avg.rows(); ++i)
          for (std::size_t j = 0; j < avg.cols(); ++j) avg(i, j) += w * p(i, j);
      }
      merged.plan = std::move(avg);
    }
    out.records.push_back(std::move(merged));
  }
  return out;
}

struct ShiftKernelResult {
  bool trivial = true;
  long dimension = 0;           // dimension of {a (+) b : <a,mu_k> + <b,nu_k> = 0 for all k}
  std::optional<Vector> a;      // witness when nontrivial
  std::optional<Vector> b;
};

/// Nonzero shifts a (+) b with <a, mu_k> + <b, nu_k> = 0 for every record.
/// The direction (1, -1) always solves the equations but is the zero
/// shift, so it is divided out by fixing b_1 = 0.
inline ShiftKernelResult shift_kernel_check(const std::vector<MarginalPair>& marginals) {
  if (marginals.empty()) throw std::invalid_argument("shift kernel check needs at least one record");
  const std::size_t n = marginals.front().rows(), m = marginals.front().cols();
  std::vector<Vector> rows;
  for (const auto& mg : marginals) {
    Vector row(mg.mu);
    row.insert(row.end(), mg.nu.begin(), mg.nu.end());
    rows.push_back(std::move(row));
  }
  rows.push_back(detail::unit(n + m, n));
  const auto kernel = nullspace_basis(rows, n + m);
  ShiftKernelResult res;
  res.dimension = static_cast<long>(kernel.size());
  res.trivial = kernel.empty();
  if (!res.trivial) {
    res.a = Vector(kernel.front().begin(), kernel.front().begin() + static_cast<long>(n));
    res.b = Vector(kernel.front().begin() + static_cast<long>(n), kernel.front().end());
  }
  return res;
}

inline ShiftKernelResult shift_kernel_check(const ObservationSet& obs) {
  std::vector<MarginalPair> ms;
  for (const auto& r : obs.records) ms.push_back(r.marginals);
  return shift_kernel_check(ms);
}

// ---------------------------------------------------------------------------
// Combination sweep

/// Odometer over one vertex choice per record. advance(depth) moves to the
/// next tuple that differs in positions <= depth (positions after depth
/// reset to zero) and returns the position that changed.
class CombinationCursor {
 public:
  explicit CombinationCursor(std::vector<std::size_t> sizes) : sizes_(std::move(sizes)), index_(sizes_.size(), 0) {
    for (auto s : sizes_)
      if (s == 0) throw std::invalid_argument("record without candidate vertices");
  }

  const std::vector<std::size_t>& index() const { return index_; }
  std::size_t size() const { return sizes_.size(); }

  std::optional<std::size_t> advance(std::size_t depth) {
    for (std::size_t d = depth + 1; d < index_.size(); ++d) index_[d] = 0;
    for (std::size_t d = depth + 1; d-- > 0;) {
      if (++index_[d] < sizes_[d]) return d;
      index_[d] = 0;
    }
    return std::nullopt;
  }

  /// Total number of tuples (saturating).
  std::uint64_t total() const {
    std::uint64_t t = 1;
    for (auto s : sizes_) t = (t > UINT64_MAX / s) ? UINT64_MAX : t * s;
    return t;
  }

 private:
  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> index_;
};

namespace detail {

/// One equality per record selected by the cursor, on top of a fixed base
/// system. Prefixes are checked for feasibility before going deeper.
struct SweepInput {
  LinearSystem base;
  std::vector<std::vector<LinearSystem>> per_choice;  // [record][vertex] extra constraints
  std::size_t n = 0, m = 0;
};

inline LinearSystem assemble(const SweepInput& in, const std::vector<std::size_t>& idx, std::size_t depth) {
  LinearSystem sys = in.base;
  for (std::size_t k = 0; k <= depth; ++k) {
    const auto& extra = in.per_choice[k][idx[k]];
    for (const auto& c : extra.equalities) sys.equalities.push_back(c);
    for (const auto& c : extra.inequalities) sys.inequalities.push_back(c);
  }
  return sys;
}

inline IdentifiabilityReport run_sweep(const SweepInput& in, std::uint64_t cap, bool assume_consistent) {
  std::vector<std::size_t> sizes;
  for (const auto& c : in.per_choice) sizes.push_back(c.size());
  CombinationCursor cursor(sizes);
  std::uint64_t evaluations = 0;
  std::uint64_t feasible = 0;
  std::vector<Vector> points;  // distinct unique solutions, in discovery order
  std::optional<IdentifiabilityReport> nonunique;
  bool capped = false;

  std::size_t depth = 0;
  for (;;) {
    if (++evaluations > cap) {
      capped = true;
      break;
    }
    const LinearSystem sys = assemble(in, cursor.index(), depth);
    bool descend = false;
    if (depth + 1 < cursor.size()) {
      descend = check_feasible(sys).has_value();
      if (descend) {
        ++depth;
        continue;
      }
    } else {
      const auto desc = solution_set(sys);
      if (desc.status == SolutionStatus::nonunique) {
        nonunique = report_from_solution_set(sys, desc, in.n, in.m);
        ++feasible;
        break;
      }
      if (desc.status == SolutionStatus::unique_point) {
        ++feasible;
        bool seen = false;
        for (const auto& p : points) seen = seen || p == *desc.point;
        if (!seen) points.push_back(*desc.point);
      }
    }
    const auto next = cursor.advance(depth);
    if (!next) break;
    depth = *next;
  }

  IdentifiabilityReport rep;
  const std::string tally = "combinations: " + std::to_string(cursor.total()) + ", LP evaluations: " +
                            std::to_string(std::min(evaluations, cap)) + ", feasible leaves: " + std::to_string(feasible);
  if (nonunique) {
    rep = std::move(*nonunique);
    rep.diagnostics.push_back("a feasible combination admits more than one cost matrix");
  } else if (points.size() > 1) {
    rep.verdict = Verdict::ambiguous;
    AffineClassDescription amb;
    amb.base = points.front();
    for (std::size_t p = 1; p < points.size(); ++p) {
      Vector d(points[p].size());
      for (std::size_t i = 0; i < d.size(); ++i) d[i] = points[p][i] - points.front()[i];
      amb.directions.push_back(std::move(d));
      amb.alternatives.push_back(points[p]);
    }
    rep.ambiguity = std::move(amb);
    rep.diagnostics.push_back("different combinations give different unique solutions");
  } else if (capped) {
    rep.verdict = Verdict::undecided_cap;
    rep.diagnostics.push_back("combination cap of " + std::to_string(cap) + " LP evaluations reached");
  } else if (points.empty()) {
    rep.verdict = Verdict::inconsistent;
    rep.diagnostics.push_back(assume_consistent ? "no combination yields a consistent equality system"
                                                : "no combination of vertices yields a feasible system");
  } else {
    rep.verdict = Verdict::identifiable;
    rep.recovered_cost = to_cost(points.front(), in.n, in.m);
    for (const auto& x : points.front()) rep.coordinate_ranges.push_back({x, x});
  }
  if (capped && rep.verdict != Verdict::undecided_cap) rep.diagnostics.push_back("sweep stopped at the cap");
  rep.diagnostics.push_back(tally);
  return rep;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Total costs only

/// For every choice of one vertex u_k per record: <c, u_k> = alpha_k and
/// <c, v> >= alpha_k on all vertices v, plus the class constraints. The
/// inequalities do not depend on the choice and sit in the base system.
inline IdentifiabilityReport identify_costs_only(const ObservationSet& obs, const IdentifyOptions& opts = {}) {
  detail::require_field(obs, true, false, false, "costs");
  const std::size_t n = obs.rows(), m = obs.cols();
  detail::VertexCache cache(opts.enumeration);
  detail::SweepInput in;
  in.n = n;
  in.m = m;
  in.base = LinearSystem(n * m);
  detail::add_class_constraints(in.base, obs.cost_class, n, m);
  for (const auto& r : obs.records) {
    const auto& eps = cache.get(r.marginals);
    std::vector<LinearSystem> choices;
    for (const auto& u : eps.vertices) {
      in.base.add_inequality(u.vectorize(), *r.alpha);
      LinearSystem extra(n * m);
      extra.add_equality(u.vectorize(), *r.alpha);
      choices.push_back(std::move(extra));
    }
    in.per_choice.push_back(std::move(choices));
  }
  return detail::run_sweep(in, opts.cap, false);
}

/// Equality-only variant: a sufficient check that assumes a consistent cost
/// exists. Failure to certify is reported as ambiguous with
/// sufficient_condition_met = false.
inline IdentifiabilityReport identify_costs_only_equality_sufficient(const ObservationSet& obs,
                                                                     const IdentifyOptions& opts = {}) {
  detail::require_field(obs, true, false, false, "costs");
  const std::size_t n = obs.rows(), m = obs.cols();
  detail::VertexCache cache(opts.enumeration);
  detail::SweepInput in;
  in.n = n;
  in.m = m;
  in.base = LinearSystem(n * m);
  for (const auto& r : obs.records) {
    std::vector<LinearSystem> choices;
    for (const auto& u : cache.get(r.marginals).vertices) {
      LinearSystem extra(n * m);
      extra.add_equality(u.vectorize(), *r.alpha);
      choices.push_back(std::move(extra));
    }
    in.per_choice.push_back(std::move(choices));
  }
  IdentifiabilityReport rep = detail::run_sweep(in, opts.cap, true);
  rep.diagnostics.push_back("equality-only check: existence of a consistent cost is assumed, not verified");
  if (rep.verdict == Verdict::identifiable) {
    rep.sufficient_condition_met = true;
  } else if (rep.verdict == Verdict::ambiguous) {
    rep.sufficient_condition_met = false;
    rep.diagnostics.push_back("not decidable by the equality-only check");
  }
  return rep;
}

/// Monge class: the northwest monotone plan is optimal for every record, so
/// a single system decides.
inline IdentifiabilityReport identify_costs_monge(const ObservationSet& obs) {
  detail::require_field(obs, true, false, false, "costs (monge)");
  const std::size_t n = obs.rows(), m = obs.cols();
  LinearSystem sys(n * m);
  detail::add_class_constraints(sys, CostClass::monge(), n, m);
  for (const auto& r : obs.records) sys.add_equality(northwest_monotone_plan(r.marginals).vectorize(), *r.alpha);
  return detail::report_from_solution_set(sys, solution_set(sys), n, m);
}

// ---------------------------------------------------------------------------
// Potentials

namespace detail {

inline Rational alpha_or_dual(const ObservationRecord& r) {
  return r.alpha ? *r.alpha : dual_value(*r.potentials, r.marginals);
}

/// c >= max_k f_k (+) g_k as coordinate lower bounds, on top of the class.
inline LinearSystem potential_base(const ObservationSet& obs) {
  const std::size_t n = obs.rows(), m = obs.cols();
  LinearSystem sys(n * m);
  add_class_constraints(sys, obs.cost_class, n, m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      std::optional<Rational> lo = sys.lower_bound(cell_index(i, j, n));
      for (const auto& r : obs.records) {
        const Rational v = r.potentials->f[i] + r.potentials->g[j];
        if (!lo || v > *lo) lo = v;
      }
      sys.set_lower(cell_index(i, j, n), *lo);
    }
  return sys;
}

inline LinearSystem potential_choice(const ObservationRecord& r, const TransportPlan& u, const Rational& alpha) {
  const std::size_t n = u.rows(), m = u.cols();
  LinearSystem extra(n * m);
  extra.add_equality(u.vectorize(), alpha);
  for (const auto& [i, j] : support(u)) extra.add_equality(unit(n * m, cell_index(i, j, n)), r.potentials->f[i] + r.potentials->g[j]);
  return extra;
}

inline void check_potential_shapes(const ObservationSet& obs) {
  for (const auto& r : obs.records)
    require(r.potentials->f.size() == obs.rows() && r.potentials->g.size() == obs.cols(),
            "potential lengths differ from marginals");
}

}  // namespace detail

/// Combination sweep with c >= f_k (+) g_k everywhere and equality on
/// supp u_k. A missing total cost is taken as <f, mu> + <g, nu>.
inline IdentifiabilityReport identify_potentials(const ObservationSet& obs, const IdentifyOptions& opts = {}) {
  detail::require_field(obs, false, false, true, "potentials");
  detail::check_potential_shapes(obs);
  const std::size_t n = obs.rows(), m = obs.cols();
  detail::VertexCache cache(opts.enumeration);
  detail::SweepInput in;
  in.n = n;
  in.m = m;
  in.base = detail::potential_base(obs);
  for (const auto& r : obs.records) {
    const Rational alpha = detail::alpha_or_dual(r);
    std::vector<LinearSystem> choices;
    for (const auto& u : cache.get(r.marginals).vertices) {
      in.base.add_inequality(u.vectorize(), alpha);
      choices.push_back(detail::potential_choice(r, u, alpha));
    }
    in.per_choice.push_back(std::move(choices));
  }
  return detail::run_sweep(in, opts.cap, false);
}

inline IdentifiabilityReport identify_potentials_monge(const ObservationSet& obs) {
  detail::require_field(obs, false, false, true, "potentials (monge)");
  detail::check_potential_shapes(obs);
  ObservationSet as_monge = obs;
  as_monge.cost_class = CostClass::monge();
  LinearSystem sys = detail::potential_base(as_monge);
  for (const auto& r : obs.records) {
    const auto extra = detail::potential_choice(r, northwest_monotone_plan(r.marginals), detail::alpha_or_dual(r));
    for (const auto& c : extra.equalities) sys.equalities.push_back(c);
  }
  return detail::report_from_solution_set(sys, solution_set(sys), obs.rows(), obs.cols());
}

/// Every cell (i, j) is covered when some record has
/// max(A_{i-1}, B_{j-1}) < min(A_i, B_j) on its cumulative sums.
inline bool monge_support_cover_sufficient(const std::vector<MarginalPair>& marginals) {
  if (marginals.empty()) return false;
  const std::size_t n = marginals.front().rows(), m = marginals.front().cols();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      bool covered = false;
      for (const auto& mg : marginals) {
        const Vector a = cumulative(mg.mu), b = cumulative(mg.nu);
        if (max(a[i], b[j]) < min(a[i + 1], b[j + 1])) {
          covered = true;
          break;
        }
      }
      if (!covered) return false;
    }
  return true;
}

inline bool monge_support_cover_sufficient(const ObservationSet& obs) {
  std::vector<MarginalPair> ms;
  for (const auto& r : obs.records) ms.push_back(r.marginals);
  return monge_support_cover_sufficient(ms);
}

// ---------------------------------------------------------------------------
// Plans only

/// Rows of E_K: pi_k - u for every vertex u of pi_k's minimal face.
inline std::vector<Vector> plan_difference_rows(const ObservationSet& merged, const IdentifyOptions& opts) {
  detail::VertexCache cache(opts.enumeration);
  const auto faces = detail::face_vertices(merged, cache, opts.vertex_only);
  std::vector<Vector> rows;
  for (std::size_t k = 0; k < merged.records.size(); ++k) {
    const Vector pi = opts.vertex_only ? faces[k].front().vectorize() : merged.records[k].plan->vectorize();
    for (const auto& u : faces[k]) {
      const Vector uv = u.vectorize();
      Vector d(pi.size());
      bool zero = true;
      for (std::size_t i = 0; i < d.size(); ++i) {
        d[i] = pi[i] - uv[i];
        zero = zero && d[i].is_zero();
      }
      if (!zero) rows.push_back(std::move(d));
    }
  }
  return rows;
}

/// Cost identified up to shifts and the span of S further directions,
/// S = (N-1)(M-1) - rank E_K.
inline IdentifiabilityReport identify_plans_only(const ObservationSet& obs, const IdentifyOptions& opts = {}) {
  detail::require_field(obs, false, true, false, "plans");
  detail::ensure_plans_valid(obs);
  const std::size_t n = obs.rows(), m = obs.cols(), dim = n * m;
  const ObservationSet merged = merge_repeated_marginals(obs);
  const auto rows = plan_difference_rows(merged, opts);
  const long r = static_cast<long>(rank(rows, dim));
  const long s = static_cast<long>((n - 1) * (m - 1)) - r;

  // Kernel of E_K in canonical coordinates: c_{i,1} = 0 and c_{1,j} = 0.
  std::vector<Vector> pinned = rows;
  for (std::size_t i = 0; i < n; ++i) pinned.push_back(detail::unit(dim, cell_index(i, 0, n)));
  for (std::size_t j = 1; j < m; ++j) pinned.push_back(detail::unit(dim, cell_index(0, j, n)));
  const auto extra = nullspace_basis(pinned, dim);

  IdentifiabilityReport rep;
  rep.achieved_rank = r;
  rep.residual_dimension = s;
  AffineClassDescription amb;
  amb.base = Vector(dim);
  amb.directions = extra;
  amb.shift_directions = detail::shift_basis(n, m);
  if (s == 0) {
    rep.verdict = Verdict::identifiable_in_quotient;
    rep.recovered_cost = CostMatrix(n, m);
    rep.diagnostics.push_back("S = 0: the cost is shift-equivalent to the zero matrix");
  } else {
    rep.verdict = Verdict::ambiguous;
    if (s == 1) rep.diagnostics.push_back("S = 1: scale class, cost determined up to shifts and a positive multiple");
    rep.diagnostics.push_back("no stronger conclusion possible from the observed faces");
  }
  rep.ambiguity = std::move(amb);
  return rep;
}

/// Symmetric zero-diagonal class: differences are folded onto the N(N-1)/2
/// pair coordinates; shifts play no role there.
inline IdentifiabilityReport identify_plans_only_sym(const ObservationSet& obs, const IdentifyOptions& opts = {}) {
  detail::require_field(obs, false, true, false, "plans (sym0)");
  const std::size_t n = obs.rows();
  if (n != obs.cols()) throw std::invalid_argument("sym0 class requires N == M");
  detail::ensure_plans_valid(obs);
  const ObservationSet merged = merge_repeated_marginals(obs);
  std::vector<Vector> folded;
  for (const auto& d : plan_difference_rows(merged, opts)) folded.push_back(detail::fold(CostMatrix::from_vector(d, n, n)));
  const std::size_t p = n * (n - 1) / 2;
  const long r = static_cast<long>(rank(folded, p));
  const long s = static_cast<long>(p) - r;
  IdentifiabilityReport rep;
  rep.achieved_rank = r;
  rep.residual_dimension = s;
  if (s == 0) {
    rep.verdict = Verdict::identifiable;
    rep.recovered_cost = CostMatrix(n, n);
    rep.diagnostics.push_back("S = 0: the only symmetric zero-diagonal cost compatible with the faces is 0");
  } else {
    rep.verdict = Verdict::ambiguous;
    AffineClassDescription amb;
    amb.base = Vector(n * n);
    for (const auto& t : nullspace_basis(folded, p)) amb.directions.push_back(detail::unfold(t, n).vectorize());
    rep.ambiguity = std::move(amb);
    if (s == 1) rep.diagnostics.push_back("S = 1: scale class, cost determined up to a positive multiple");
    rep.diagnostics.push_back("no stronger conclusion possible from the observed faces");
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Total costs and plans

/// Single system: <c, u> = alpha_k on the minimal face of pi_k and
/// <c, v> >= alpha_k on the remaining vertices (or the reduced set).
inline IdentifiabilityReport identify_costs_plans(const ObservationSet& obs, const IdentifyOptions& opts = {}) {
  detail::require_field(obs, true, true, false, "costs+plans");
  detail::ensure_plans_valid(obs);
  const std::size_t n = obs.rows(), m = obs.cols();
  ObservationSet merged;
  try {
    merged = merge_repeated_marginals(obs);
  } catch (const ConflictingObservationError& e) {
    IdentifiabilityReport rep;
    rep.verdict = Verdict::inconsistent;
    rep.diagnostics.push_back(e.what());
    return rep;
  }
  detail::VertexCache cache(opts.enumeration);
  std::vector<Face> faces;
  detail::face_vertices(merged, cache, opts.vertex_only, &faces);
  LinearSystem sys(n * m);
  detail::add_class_constraints(sys, obs.cost_class, n, m);
  std::vector<Vector> stacked;
  for (std::size_t k = 0; k < merged.records.size(); ++k) {
    const auto& eps = cache.get(merged.records[k].marginals);
    const Rational& alpha = *merged.records[k].alpha;
    std::vector<std::size_t> ineq;
    if (opts.reduce_constraints) {
      ineq = reduced_constraint_set(faces[k], eps).inequality_vertices;
    } else {
      const std::set<std::size_t> in_face(faces[k].vertex_indices.begin(), faces[k].vertex_indices.end());
      for (std::size_t v = 0; v < eps.vertices.size(); ++v)
        if (!in_face.count(v)) ineq.push_back(v);
    }
    for (auto v : faces[k].vertex_indices) {
      stacked.push_back(eps.vertices[v].vectorize());
      sys.add_equality(stacked.back(), alpha);
    }
    for (auto v : ineq) sys.add_inequality(eps.vertices[v].vectorize(), alpha);
  }
  IdentifiabilityReport rep = detail::report_from_solution_set(sys, solution_set(sys), n, m);
  rep.achieved_rank = static_cast<long>(affine_rank(stacked));
  if (rep.verdict == Verdict::ambiguous) {
    const auto sk = shift_kernel_check(merged);
    if (!sk.trivial) {
      rep.ambiguity->shift_directions.push_back(outer_sum(*sk.a, *sk.b).vectorize());
      rep.diagnostics.push_back("the marginals admit a nonzero shift preserving every total cost");
    }
  }
  return rep;
}

/// Sufficient rank criterion: NM independent minimal-face vertices pin c by
/// equalities alone. The equality solution is then checked against the
/// forward problem; a failed check gives an inconsistent verdict that still
/// carries the equality solution.
inline IdentifiabilityReport identify_costs_plans_rank(const ObservationSet& obs, const IdentifyOptions& opts = {}) {
  detail::require_field(obs, true, true, false, "costs+plans (rank)");
  detail::ensure_plans_valid(obs);
  const std::size_t n = obs.rows(), m = obs.cols(), dim = n * m;
  ObservationSet merged;
  try {
    merged = merge_repeated_marginals(obs);
  } catch (const ConflictingObservationError& e) {
    IdentifiabilityReport rep;
    rep.verdict = Verdict::inconsistent;
    rep.diagnostics.push_back(e.what());
    return rep;
  }
  detail::VertexCache cache(opts.enumeration);
  const auto faces = detail::face_vertices(merged, cache, opts.vertex_only);
  std::vector<Vector> rows;
  Vector rhs;
  for (std::size_t k = 0; k < merged.records.size(); ++k)
    for (const auto& u : faces[k]) {
      rows.push_back(u.vectorize());
      rhs.push_back(*merged.records[k].alpha);
    }
  IdentifiabilityReport rep;
  const long r = static_cast<long>(rank(rows, dim));
  rep.achieved_rank = r;
  rep.diagnostics.push_back("rank of stacked face vertices: " + std::to_string(r) + " of " + std::to_string(dim));
  const auto sol = solve_linear(rows, rhs, dim);
  if (!sol) {
    rep.verdict = Verdict::inconsistent;
    rep.sufficient_condition_met = false;
    rep.diagnostics.push_back("the equality system has no solution");
    return rep;
  }
  if (!sol->unique()) {
    rep.verdict = Verdict::ambiguous;
    rep.sufficient_condition_met = false;
    AffineClassDescription amb;
    amb.base = sol->particular;
    amb.directions = sol->kernel;
    rep.residual_dimension = static_cast<long>(sol->kernel.size());
    rep.ambiguity = std::move(amb);
    rep.diagnostics.push_back("rank below NM: the sufficient condition does not apply");
    return rep;
  }
  const CostMatrix c = detail::to_cost(sol->particular, n, m);
  rep.recovered_cost = c;
  rep.sufficient_condition_met = true;
  rep.diagnostics.push_back("existence of a consistent cost is assumed by the rank criterion; verifying");
  const auto checks = verify_consistency(c, obs);
  if (all_pass(checks)) {
    rep.verdict = Verdict::identifiable;
    for (const auto& x : sol->particular) rep.coordinate_ranges.push_back({x, x});
    rep.diagnostics.push_back("consistency check passed");
  } else {
    rep.verdict = Verdict::inconsistent;
    for (const auto& chk : checks)
      if (!chk.pass)
        rep.diagnostics.push_back("consistency check failed at record " + std::to_string(chk.record) +
                                  ": OT value " + chk.ot_value.str() + " vs observed " +
                                  obs.records[chk.record].alpha->str());
  }
  return rep;
}

/// Symmetric zero-diagonal rank criterion on folded face vertices.
inline IdentifiabilityReport identify_costs_plans_sym(const ObservationSet& obs, const IdentifyOptions& opts = {}) {
  detail::require_field(obs, true, true, false, "costs+plans (sym0)");
  const std::size_t n = obs.rows();
  if (n != obs.cols()) throw std::invalid_argument("sym0 class requires N == M");
  detail::ensure_plans_valid(obs);
  ObservationSet merged;
  try {
    merged = merge_repeated_marginals(obs);
  } catch (const ConflictingObservationError& e) {
    IdentifiabilityReport rep;
    rep.verdict = Verdict::inconsistent;
    rep.diagnostics.push_back(e.what());
    return rep;
  }
  detail::VertexCache cache(opts.enumeration);
  const auto faces = detail::face_vertices(merged, cache, opts.vertex_only);
  const std::size_t p = n * (n - 1) / 2;
  std::vector<Vector> rows;
  Vector rhs;
  for (std::size_t k = 0; k < merged.records.size(); ++k)
    for (const auto& u : faces[k]) {
      rows.push_back(detail::fold(u));
      rhs.push_back(*merged.records[k].alpha);
    }
  IdentifiabilityReport rep;
  const long r = static_cast<long>(rank(rows, p));
  rep.achieved_rank = r;
  rep.residual_dimension = static_cast<long>(p) - r;
  const auto sol = solve_linear(rows, rhs, p);
  if (!sol) {
    rep.verdict = Verdict::inconsistent;
    rep.diagnostics.push_back("the folded equality system has no solution");
    return rep;
  }
  if (!sol->unique()) {
    rep.verdict = Verdict::ambiguous;
    rep.sufficient_condition_met = false;
    AffineClassDescription amb;
    amb.base = detail::unfold(sol->particular, n).vectorize();
    for (const auto& t : sol->kernel) amb.directions.push_back(detail::unfold(t, n).vectorize());
    rep.ambiguity = std::move(amb);
    rep.diagnostics.push_back("folded rank below N(N-1)/2");
    return rep;
  }
  const CostMatrix c = detail::unfold(sol->particular, n);
  rep.recovered_cost = c;
  rep.sufficient_condition_met = true;
  const auto checks = verify_consistency(c, obs);
  if (all_pass(checks)) {
    rep.verdict = Verdict::identifiable;
  } else {
    rep.verdict = Verdict::inconsistent;
    rep.diagnostics.push_back("the folded equality solution is not consistent with the observations");
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Full information

/// Plans and potentials together pin c on the union of the supports, where
/// c equals the cellwise maximum of the outer sums f_k (+) g_k. Cells off
/// every support only get that maximum as a lower bound.
inline IdentifiabilityReport identify_full(const ObservationSet& obs) {
  detail::require_field(obs, false, true, true, "full");
  detail::check_potential_shapes(obs);
  detail::ensure_plans_valid(obs);
  const std::size_t n = obs.rows(), m = obs.cols(), dim = n * m;
  IdentifiabilityReport rep;
  std::vector<std::optional<Rational>> best(dim);
  std::vector<bool> covered(dim, false);
  for (const auto& r : obs.records) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) {
        const Rational v = r.potentials->f[i] + r.potentials->g[j];
        auto& b = best[cell_index(i, j, n)];
        if (!b || v > *b) b = v;
      }
    for (const auto& [i, j] : support(*r.plan)) covered[cell_index(i, j, n)] = true;
  }
  for (std::size_t k = 0; k < obs.records.size(); ++k) {
    const auto& r = obs.records[k];
    for (const auto& [i, j] : support(*r.plan))
      if (r.potentials->f[i] + r.potentials->g[j] != *best[cell_index(i, j, n)]) {
        rep.verdict = Verdict::inconsistent;
        rep.diagnostics.push_back("record " + std::to_string(k) + ": slackness fails at cell (" + std::to_string(i + 1) +
                                  "," + std::to_string(j + 1) + ") against another record's potentials");
        return rep;
      }
    const Rational dv = dual_value(*r.potentials, r.marginals);
    if (r.alpha && *r.alpha != dv) {
      rep.verdict = Verdict::inconsistent;
      rep.diagnostics.push_back("record " + std::to_string(k) + ": total cost differs from the dual value " + dv.str());
      return rep;
    }
  }
  Vector base(dim);
  AffineClassDescription amb;
  for (std::size_t d = 0; d < dim; ++d) {
    base[d] = *best[d];
    if (covered[d]) {
      rep.coordinate_ranges.push_back({base[d], base[d]});
    } else {
      rep.coordinate_ranges.push_back({base[d], std::nullopt});
      amb.directions.push_back(detail::unit(dim, d));
    }
  }
  if (amb.directions.empty()) {
    rep.verdict = Verdict::identifiable;
    rep.recovered_cost = detail::to_cost(base, n, m);
  } else {
    rep.verdict = Verdict::ambiguous;
    amb.base = std::move(base);
    rep.residual_dimension = static_cast<long>(amb.directions.size());
    rep.ambiguity = std::move(amb);
    rep.diagnostics.push_back(std::to_string(*rep.residual_dimension) +
                              " cells lie outside every support and are bounded below only");
  }
  return rep;
}

}  // namespace iot
