#pragma once

// Test-side helpers: literal builders, seeded generators for property tests
// and independent brute-force oracles. Nothing here calls into the code
// under test except for value types.

#include <algorithm>
#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "iot/types.hpp"

namespace iot::testing {

inline Rational q(const char* s) { return parse_rational(s); }

inline Vector vec(std::initializer_list<const char*> xs) {
  Vector v;
  for (auto x : xs) v.push_back(parse_rational(x));
  return v;
}

inline Matrix<Rational> mat(std::initializer_list<std::initializer_list<const char*>> rows) {
  std::vector<std::vector<Rational>> tmp;
  for (const auto& r : rows) {
    std::vector<Rational> row;
    for (auto x : r) row.push_back(parse_rational(x));
    tmp.push_back(std::move(row));
  }
  Matrix<Rational> m(tmp.size(), tmp.empty() ? 0 : tmp.front().size());
  for (std::size_t i = 0; i < tmp.size(); ++i)
    for (std::size_t j = 0; j < tmp[i].size(); ++j) m(i, j) = tmp[i][j];
  return m;
}

inline MarginalPair marg(std::initializer_list<const char*> mu, std::initializer_list<const char*> nu) {
  return {vec(mu), vec(nu)};
}

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  long integer(long lo, long hi) { return std::uniform_int_distribution<long>(lo, hi)(rng_); }
  bool coin(double p = 0.5) { return std::bernoulli_distribution(p)(rng_); }
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(integer(0, static_cast<long>(n) - 1)); }

  Rational rational(long num_range, long max_den) {
    return Rational(mpz_class(integer(-num_range, num_range)), mpz_class(integer(1, max_den)));
  }

  /// Probability vector from integer weights in [0, max_w]; zeros allowed
  /// when `zeros` is set (but never all zero).
  Vector simplex(std::size_t n, long max_w = 6, bool zeros = false) {
    std::vector<long> w(n);
    long total = 0;
    do {
      total = 0;
      for (auto& x : w) {
        x = integer(zeros ? 0 : 1, max_w);
        total += x;
      }
    } while (total == 0);
    Vector v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = Rational(mpz_class(w[i]), mpz_class(total));
    return v;
  }

  MarginalPair marginals(std::size_t n, std::size_t m, bool zeros = false) {
    return {simplex(n, 6, zeros), simplex(m, 6, zeros)};
  }

  Matrix<Rational> cost(std::size_t n, std::size_t m, long range = 9, long max_den = 4) {
    Matrix<Rational> c(n, m);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) c(i, j) = rational(range, max_den);
    return c;
  }

  /// Monge cost |x_i - y_j|^2 on sorted integer points.
  Matrix<Rational> monge_cost(std::size_t n, std::size_t m) {
    std::vector<long> x(n), y(m);
    for (auto& v : x) v = integer(-6, 6);
    for (auto& v : y) v = integer(-6, 6);
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    Matrix<Rational> c(n, m);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) c(i, j) = Rational((x[i] - y[j]) * (x[i] - y[j]));
    return c;
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

// ---------------------------------------------------------------------------
// Small dense Gaussian elimination, independent of iot/linalg.hpp.

struct DenseSolve {
  bool unique = false;
  std::vector<Rational> x;
};

inline DenseSolve gauss_square(std::vector<std::vector<Rational>> a, std::vector<Rational> b) {
  const std::size_t n = a.size();
  DenseSolve out;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t p = col;
    while (p < n && a[p][col].is_zero()) ++p;
    if (p == n) return out;
    std::swap(a[p], a[col]);
    std::swap(b[p], b[col]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col || a[r][col].is_zero()) continue;
      const Rational f = a[r][col] / a[col][col];
      for (std::size_t k = col; k < n; ++k) a[r][k] -= f * a[col][k];
      b[r] -= f * b[col];
    }
  }
  out.unique = true;
  out.x.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.x[i] = b[i] / a[i][i];
  return out;
}

inline std::size_t dense_rank(std::vector<std::vector<Rational>> a) {
  if (a.empty()) return 0;
  const std::size_t cols = a.front().size();
  std::size_t r = 0;
  for (std::size_t c = 0; c < cols && r < a.size(); ++c) {
    std::size_t p = r;
    while (p < a.size() && a[p][c].is_zero()) ++p;
    if (p == a.size()) continue;
    std::swap(a[p], a[r]);
    for (std::size_t i = r + 1; i < a.size(); ++i) {
      if (a[i][c].is_zero()) continue;
      const Rational f = a[i][c] / a[r][c];
      for (std::size_t k = c; k < cols; ++k) a[i][k] -= f * a[r][k];
    }
    ++r;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Brute-force vertex oracle: every (N+M-1)-subset of cells, kept when its
// bipartite graph is acyclic; the marginal equations restricted to the
// subset (one redundant row dropped) are solved by dense elimination.

inline bool acyclic(const std::vector<std::size_t>& cells, std::size_t n, std::size_t m) {
  std::vector<std::size_t> parent(n + m);
  for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = i;
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x];
    return x;
  };
  for (auto c : cells) {
    const std::size_t a = find(c % n), b = find(n + c / n);
    if (a == b) return false;
    parent[a] = b;
  }
  return true;
}

inline std::set<std::vector<Rational>> brute_force_vertices(const MarginalPair& mg) {
  const std::size_t n = mg.rows(), m = mg.cols(), cells = n * m, k = n + m - 1;
  std::set<std::vector<Rational>> out;
  std::vector<bool> pick(cells, false);
  std::fill(pick.begin(), pick.begin() + static_cast<long>(k), true);
  do {
    std::vector<std::size_t> chosen;
    for (std::size_t c = 0; c < cells; ++c)
      if (pick[c]) chosen.push_back(c);
    if (!acyclic(chosen, n, m)) continue;
    // rows 0..n-1 (row sums) and columns 0..m-2 (column sums); the last
    // column sum follows from the others.
    std::vector<std::vector<Rational>> a;
    std::vector<Rational> b;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<Rational> row(k);
      for (std::size_t t = 0; t < k; ++t)
        if (chosen[t] % n == i) row[t] = 1;
      a.push_back(row);
      b.push_back(mg.mu[i]);
    }
    for (std::size_t j = 0; j + 1 < m; ++j) {
      std::vector<Rational> row(k);
      for (std::size_t t = 0; t < k; ++t)
        if (chosen[t] / n == j) row[t] = 1;
      a.push_back(row);
      b.push_back(mg.nu[j]);
    }
    const auto sol = gauss_square(a, b);
    if (!sol.unique) continue;
    bool nonneg = true;
    for (const auto& v : sol.x) nonneg = nonneg && v.sign() >= 0;
    if (!nonneg) continue;
    std::vector<Rational> x(cells);
    for (std::size_t t = 0; t < k; ++t) x[chosen[t]] = sol.x[t];
    out.insert(x);
  } while (std::prev_permutation(pick.begin(), pick.end()));
  return out;
}

}  // namespace iot::testing
