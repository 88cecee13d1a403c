#pragma once

// Combinatorics of the transportation polytope Pi(mu, nu): vertex
// enumeration, minimal faces, facets containing a face and the reduced
// inequality set used when total costs and plans are observed.

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "iot/linalg.hpp"
#include "iot/types.hpp"

namespace iot {

class SizeGuardError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// N*M guard for vertex enumeration; IOT_MAX_CELLS overrides the default 36.
inline std::size_t default_max_cells() {
  if (const char* env = std::getenv("IOT_MAX_CELLS")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return v;
  }
  return 36;
}

struct EnumerationOptions {
  std::size_t max_cells = default_max_cells();
  std::size_t vertex_cap = 100000;
};

struct ExtremePointSet {
  MarginalPair marginals;
  std::vector<TransportPlan> vertices;  // sorted by column-major vectorization
};

struct Face {
  std::vector<std::size_t> vertex_indices;  // ascending
  long dimension = 0;
  friend bool operator==(const Face&, const Face&) = default;
};

namespace detail {

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[a] = b;
    return true;
  }
};

inline void validate_marginals(const MarginalPair& marg) {
  if (marg.mu.empty() || marg.nu.empty()) throw std::invalid_argument("marginals must be non-empty");
  Rational sm, sn;
  for (const auto& v : marg.mu) {
    if (v.sign() < 0) throw std::invalid_argument("negative marginal entry");
    sm += v;
  }
  for (const auto& v : marg.nu) {
    if (v.sign() < 0) throw std::invalid_argument("negative marginal entry");
    sn += v;
  }
  if (sm != Rational(1) || sn != Rational(1))
    throw std::invalid_argument("marginals must each sum to one");
}

/// Is there a plan in Pi(mu, nu) vanishing outside `allowed`? Max-flow on the
/// bipartite network source -> rows -> allowed cells -> columns -> sink.
inline bool transport_feasible(const MarginalPair& marg, const std::vector<bool>& allowed) {
  const std::size_t n = marg.rows(), m = marg.cols();
  const std::size_t nodes = n + m + 2, s = n + m, t = n + m + 1;
  std::vector<std::vector<Rational>> cap(nodes, std::vector<Rational>(nodes));
  for (std::size_t i = 0; i < n; ++i) cap[s][i] = marg.mu[i];
  for (std::size_t j = 0; j < m; ++j) cap[n + j][t] = marg.nu[j];
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j)
      if (allowed[cell_index(i, j, n)]) cap[i][n + j] = min(marg.mu[i], marg.nu[j]);
  Rational flow;
  for (;;) {
    std::vector<long> prev(nodes, -1);
    prev[s] = static_cast<long>(s);
    std::vector<std::size_t> queue{s};
    for (std::size_t qi = 0; qi < queue.size() && prev[t] < 0; ++qi) {
      const std::size_t u = queue[qi];
      for (std::size_t v = 0; v < nodes; ++v)
        if (prev[v] < 0 && cap[u][v].sign() > 0) {
          prev[v] = static_cast<long>(u);
          queue.push_back(v);
        }
    }
    if (prev[t] < 0) break;
    Rational bottleneck;
    bool first = true;
    for (std::size_t v = t; v != s; v = static_cast<std::size_t>(prev[v])) {
      const auto u = static_cast<std::size_t>(prev[v]);
      if (first || cap[u][v] < bottleneck) bottleneck = cap[u][v];
      first = false;
    }
    for (std::size_t v = t; v != s; v = static_cast<std::size_t>(prev[v])) {
      const auto u = static_cast<std::size_t>(prev[v]);
      cap[u][v] -= bottleneck;
      cap[v][u] += bottleneck;
    }
    flow += bottleneck;
  }
  return flow == Rational(1);
}

/// Unique solution of the marginal equations on a spanning tree, by leaf
/// peeling. Returns false as soon as a negative entry appears.
inline bool solve_on_tree(const MarginalPair& marg, const std::vector<std::size_t>& tree_cells,
                          TransportPlan& out) {
  const std::size_t n = marg.rows(), m = marg.cols();
  out = TransportPlan(n, m);
  Vector remaining(marg.mu);
  remaining.insert(remaining.end(), marg.nu.begin(), marg.nu.end());
  std::vector<std::vector<std::size_t>> incident(n + m);
  std::vector<bool> used(tree_cells.size(), false);
  std::vector<std::size_t> degree(n + m, 0);
  for (std::size_t e = 0; e < tree_cells.size(); ++e) {
    const std::size_t i = tree_cells[e] % n, j = tree_cells[e] / n;
    incident[i].push_back(e);
    incident[n + j].push_back(e);
    ++degree[i];
    ++degree[n + j];
  }
  std::vector<std::size_t> leaves;
  for (std::size_t v = 0; v < n + m; ++v)
    if (degree[v] == 1) leaves.push_back(v);
  std::size_t assigned = 0;
  while (!leaves.empty() && assigned < tree_cells.size()) {
    const std::size_t v = leaves.back();
    leaves.pop_back();
    if (degree[v] != 1) continue;
    std::size_t edge = tree_cells.size();
    for (std::size_t e : incident[v])
      if (!used[e]) edge = e;
    const std::size_t i = tree_cells[edge] % n, j = tree_cells[edge] / n;
    const std::size_t other = (v == i) ? n + j : i;
    const Rational value = remaining[v];
    if (value.sign() < 0) return false;
    out(i, j) = value;
    remaining[other] -= value;
    remaining[v] = 0;
    used[edge] = true;
    ++assigned;
    --degree[v];
    if (--degree[other] == 1) leaves.push_back(other);
  }
  for (const auto& r : remaining)
    if (!r.is_zero()) return false;
  return assigned == tree_cells.size();
}

class TreeEnumerator {
 public:
  TreeEnumerator(const MarginalPair& marg, std::size_t cap)
      : marg_(marg), n_(marg.rows()), m_(marg.cols()), cells_(n_ * m_), cap_(cap),
        allowed_(cells_, true) {}

  std::set<std::vector<Rational>> run() {
    UnionFind uf(n_ + m_);
    std::vector<std::size_t> chosen;
    recurse(0, uf, chosen);
    return std::move(found_);
  }

 private:
  const MarginalPair& marg_;
  std::size_t n_, m_, cells_, cap_;
  std::vector<bool> allowed_;
  std::set<std::vector<Rational>> found_;

  std::size_t needed() const { return n_ + m_ - 1; }

  bool can_still_span(std::size_t next, const UnionFind& base) const {
    UnionFind uf = base;
    std::size_t comps = 0;
    for (std::size_t v = 0; v < n_ + m_; ++v) comps += uf.find(v) == v;
    for (std::size_t c = next; c < cells_ && comps > 1; ++c)
      if (allowed_[c] && uf.unite(c % n_, n_ + c / n_)) --comps;
    return comps == 1;
  }

  void recurse(std::size_t next, const UnionFind& uf, std::vector<std::size_t>& chosen) {
    if (chosen.size() == needed()) {
      TransportPlan plan;
      if (solve_on_tree(marg_, chosen, plan)) {
        found_.insert(plan.vectorize());
        if (found_.size() > cap_)
          throw SizeGuardError("vertex cap of " + std::to_string(cap_) + " exceeded");
      }
      return;
    }
    if (next == cells_ || cells_ - next < needed() - chosen.size()) return;
    const std::size_t i = next % n_, j = next / n_;
    {
      UnionFind with = uf;
      if (with.unite(i, n_ + j)) {
        chosen.push_back(next);
        recurse(next + 1, with, chosen);
        chosen.pop_back();
      }
    }
    allowed_[next] = false;
    if (can_still_span(next + 1, uf) && transport_feasible(marg_, allowed_))
      recurse(next + 1, uf, chosen);
    allowed_[next] = true;
  }
};

}  // namespace detail

/// All vertices of Pi(mu, nu). Every vertex is the unique solution of the
/// marginal equations on some spanning tree of K_{N,M}; spanning trees are
/// built cell by cell with acyclicity, connectivity and flow-feasibility
/// pruning, and degenerate duplicates collapse in an ordered set.
inline ExtremePointSet enumerate_extreme_points(const MarginalPair& marg,
                                                const EnumerationOptions& opts = {}) {
  detail::validate_marginals(marg);
  const std::size_t n = marg.rows(), m = marg.cols();
  if (n * m > opts.max_cells)
    throw SizeGuardError("N*M = " + std::to_string(n * m) + " exceeds size guard " +
                         std::to_string(opts.max_cells));
  detail::TreeEnumerator walker(marg, opts.vertex_cap);
  ExtremePointSet eps;
  eps.marginals = marg;
  for (const auto& v : walker.run()) eps.vertices.push_back(TransportPlan::from_vector(v, n, m));
  return eps;
}

inline long face_dimension(const std::vector<TransportPlan>& vertices) {
  std::vector<Vector> pts;
  for (const auto& v : vertices) pts.push_back(v.vectorize());
  return affine_dimension(pts);
}

inline long face_dimension(const Face& face, const ExtremePointSet& eps) {
  if (face.vertex_indices.empty()) throw std::invalid_argument("face without vertices");
  std::vector<TransportPlan> vs;
  for (auto k : face.vertex_indices) vs.push_back(eps.vertices.at(k));
  return face_dimension(vs);
}

inline Face make_face(std::vector<std::size_t> indices, const ExtremePointSet& eps) {
  Face f;
  f.vertex_indices = std::move(indices);
  f.dimension = face_dimension(f, eps);
  return f;
}

/// Smallest face containing `plan`: the vertices whose support lies inside
/// supp(plan).
inline Face minimal_face(const TransportPlan& plan, const ExtremePointSet& eps) {
  if (!in_polytope(plan, eps.marginals)) throw std::invalid_argument("plan is not in the transportation polytope");
  std::vector<std::size_t> idx;
  for (std::size_t k = 0; k < eps.vertices.size(); ++k)
    if (support_subset(eps.vertices[k], plan)) idx.push_back(k);
  return make_face(std::move(idx), eps);
}

inline Face whole_polytope(const ExtremePointSet& eps) {
  std::vector<std::size_t> idx(eps.vertices.size());
  std::iota(idx.begin(), idx.end(), 0);
  return make_face(std::move(idx), eps);
}

/// Faces of maximal dimension among the proper faces containing `face`
/// (the facets through it). Empty when `face` is the whole polytope.
inline std::vector<Face> maximal_proper_faces_containing(const Face& face, const ExtremePointSet& eps) {
  const std::size_t n = eps.marginals.rows(), m = eps.marginals.cols();
  std::vector<bool> in_support(n * m, false);
  for (auto k : face.vertex_indices)
    for (const auto& [i, j] : support(eps.vertices.at(k))) in_support[cell_index(i, j, n)] = true;

  std::set<std::vector<std::size_t>> candidates;
  for (std::size_t c = 0; c < n * m; ++c) {
    if (in_support[c]) continue;
    std::vector<std::size_t> idx;
    for (std::size_t k = 0; k < eps.vertices.size(); ++k)
      if (eps.vertices[k](c % n, c / n).is_zero()) idx.push_back(k);
    if (idx.size() == eps.vertices.size()) continue;  // cell vanishes on all of Pi
    candidates.insert(std::move(idx));
  }
  std::vector<Face> faces;
  long best = -1;
  for (const auto& idx : candidates) {
    Face f = make_face(idx, eps);
    if (f.dimension > best) {
      best = f.dimension;
      faces.clear();
    }
    if (f.dimension == best) faces.push_back(std::move(f));
  }
  return faces;
}

struct ReducedConstraintSet {
  std::vector<std::size_t> equality_vertices;
  std::vector<std::size_t> inequality_vertices;
};

/// Vertices needed for the inequalities <c, v> >= alpha once <c, u> = alpha
/// holds on `face`: the union of the facets through the face minus the
/// face, or (when the face is itself a facet) the first vertex outside it.
inline ReducedConstraintSet reduced_constraint_set(const Face& face, const ExtremePointSet& eps) {
  ReducedConstraintSet out;
  out.equality_vertices = face.vertex_indices;
  const std::set<std::size_t> in_face(face.vertex_indices.begin(), face.vertex_indices.end());
  const auto facets = maximal_proper_faces_containing(face, eps);
  if (facets.empty()) return out;
  if (facets.size() == 1) {
    for (std::size_t k = 0; k < eps.vertices.size(); ++k)
      if (!in_face.count(k)) {
        out.inequality_vertices.push_back(k);
        break;
      }
    return out;
  }
  std::set<std::size_t> g;
  for (const auto& f : facets)
    for (auto k : f.vertex_indices)
      if (!in_face.count(k)) g.insert(k);
  out.inequality_vertices.assign(g.begin(), g.end());
  return out;
}

}  // namespace iot
