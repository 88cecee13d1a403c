#pragma once

// Statistical recovery of the cost from noisy total costs with observed
// plans: least squares with normal confidence intervals, the LASSO shifted
// to a baseline b0, the restricted eigenvalue constant and a seeded
// generator of noisy observation sets. Floating point throughout.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>

#include "iot/forward.hpp"
#include "iot/random.hpp"
#include "iot/types.hpp"

namespace iot {

class RankDeficientError : public std::domain_error {
 public:
  RankDeficientError(long kernel_dim, const std::string& what)
      : std::domain_error(what), kernel_dimension(kernel_dim) {}
  long kernel_dimension;
};

class NonConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DesignMatrix {
  Eigen::MatrixXd P;  // K x NM, rows are column-major plans
  Eigen::VectorXd Y;
  std::optional<double> sigma;
  std::size_t n = 0;
  std::size_t m = 0;

  long records() const { return static_cast<long>(P.rows()); }
  long cells() const { return static_cast<long>(P.cols()); }
};

struct Interval {
  double lo = 0;
  double hi = 0;
  double width() const { return hi - lo; }
  bool contains(double x) const { return lo <= x && x <= hi; }
};

struct EstimateReport {
  std::string method;
  std::size_t n = 0;
  std::size_t m = 0;
  Eigen::VectorXd c_hat;
  std::optional<double> sigma;  // known, or the residual estimate
  bool sigma_estimated = false;
  std::optional<Eigen::MatrixXd> covariance;
  std::optional<std::vector<Interval>> ci;
  std::optional<double> level;
  std::optional<double> lambda;
  double b0 = 0;
  long sweeps = 0;

  Eigen::MatrixXd cost() const { return Eigen::Map<const Eigen::MatrixXd>(c_hat.data(), n, m); }
};

inline constexpr double kDesignTolerance = 1e-12;
inline constexpr double kRankTolerance = 1e-10;

/// One row per record; every record needs a plan and an alpha.
inline DesignMatrix build_design(const ObservationSet& obs, std::optional<double> sigma = std::nullopt) {
  if (obs.records.empty()) throw std::invalid_argument("observation set has no records");
  DesignMatrix d;
  d.n = obs.rows();
  d.m = obs.cols();
  d.sigma = sigma;
  const long k = static_cast<long>(obs.records.size()), nm = static_cast<long>(d.n * d.m);
  d.P.resize(k, nm);
  d.Y.resize(k);
  for (long r = 0; r < k; ++r) {
    const auto& rec = obs.records[static_cast<std::size_t>(r)];
    if (!rec.plan || !rec.alpha)
      throw std::invalid_argument("record " + std::to_string(r) + " needs both a plan and alpha for estimation");
    const auto& p = *rec.plan;
    if (p.rows() != d.n || p.cols() != d.m || rec.marginals.rows() != d.n || rec.marginals.cols() != d.m)
      throw std::invalid_argument("record " + std::to_string(r) + " has a different shape");
    for (std::size_t j = 0; j < d.m; ++j)
      for (std::size_t i = 0; i < d.n; ++i) d.P(r, static_cast<long>(cell_index(i, j, d.n))) = p(i, j).to_double();
    d.Y(r) = rec.alpha->to_double();
  }
  return d;
}

/// Checks each row of P against the record marginals within 1e-12.
inline bool design_rows_feasible(const DesignMatrix& d, const std::vector<MarginalPair>& marginals) {
  for (long r = 0; r < d.records(); ++r) {
    const auto& mg = marginals[static_cast<std::size_t>(r)];
    for (std::size_t i = 0; i < d.n; ++i) {
      double s = 0;
      for (std::size_t j = 0; j < d.m; ++j) {
        const double v = d.P(r, static_cast<long>(cell_index(i, j, d.n)));
        if (v < -kDesignTolerance) return false;
        s += v;
      }
      if (std::abs(s - mg.mu[i].to_double()) > kDesignTolerance) return false;
    }
    for (std::size_t j = 0; j < d.m; ++j) {
      double s = 0;
      for (std::size_t i = 0; i < d.n; ++i) s += d.P(r, static_cast<long>(cell_index(i, j, d.n)));
      if (std::abs(s - mg.nu[j].to_double()) > kDesignTolerance) return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Least squares

inline EstimateReport least_squares(const DesignMatrix& d) {
  const long k = d.records(), nm = d.cells();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(d.P, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  long rank = 0;
  const double smax = s.size() ? s(0) : 0.0;
  for (long i = 0; i < s.size(); ++i)
    if (s(i) > kRankTolerance * smax) ++rank;
  if (rank < nm)
    throw RankDeficientError(nm - rank, "design matrix is rank deficient: kernel dimension " + std::to_string(nm - rank));

  EstimateReport rep;
  rep.method = "least_squares";
  rep.n = d.n;
  rep.m = d.m;
  rep.c_hat = svd.solve(d.Y);
  if (d.sigma) {
    rep.sigma = d.sigma;
  } else if (k > nm) {
    rep.sigma = std::sqrt((d.Y - d.P * rep.c_hat).squaredNorm() / static_cast<double>(k - nm));
    rep.sigma_estimated = true;
  }
  if (rep.sigma) {
    // (P^T P)^{-1} = V S^{-2} V^T
    const Eigen::MatrixXd& v = svd.matrixV();
    const Eigen::VectorXd inv2 = s.array().square().inverse();
    rep.covariance = (*rep.sigma * *rep.sigma) * (v * inv2.asDiagonal() * v.transpose());
  }
  return rep;
}

/// Entrywise c_d +- z_{1-gamma/2} sqrt(cov_dd) at confidence `level` = 1 - gamma.
inline std::vector<Interval> asymptotic_ci(const EstimateReport& rep, double level) {
  if (!(level > 0 && level < 1)) throw std::invalid_argument("confidence level must lie in (0, 1)");
  if (!rep.covariance)
    throw std::invalid_argument("no covariance: sigma is unknown and K <= NM leaves no residual degrees of freedom");
  const boost::math::normal_distribution<double> normal;
  const double z = boost::math::quantile(normal, 1.0 - (1.0 - level) / 2.0);
  std::vector<Interval> out;
  for (long d = 0; d < rep.c_hat.size(); ++d) {
    const double half = z * std::sqrt(std::max(0.0, (*rep.covariance)(d, d)));
    out.push_back({rep.c_hat(d) - half, rep.c_hat(d) + half});
  }
  return out;
}

inline EstimateReport with_ci(EstimateReport rep, double level) {
  rep.ci = asymptotic_ci(rep, level);
  rep.level = level;
  return rep;
}

// ---------------------------------------------------------------------------
// Shifted LASSO

struct LassoOptions {
  double tolerance = 1e-10;
  long max_sweeps = 100000;
  std::vector<double>* objective_trace = nullptr;  // objective after each sweep
};

inline double lasso_objective(const DesignMatrix& d, const Eigen::VectorXd& c, double lambda, double b0) {
  return (d.Y - d.P * c).squaredNorm() + lambda * (c.array() - b0).abs().sum();
}

inline double soft_threshold(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

/// argmin ||Y - P c||^2 + lambda ||c - b0||_1 by cyclic coordinate descent
/// on x = c - b0.
inline EstimateReport lasso_shifted(const DesignMatrix& d, double lambda, double b0, const LassoOptions& opts = {}) {
  if (!(lambda >= 0)) throw std::invalid_argument("lambda must be nonnegative");
  const long nm = d.cells();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(nm);
  Eigen::VectorXd r = d.Y - d.P * Eigen::VectorXd::Constant(nm, b0);
  const Eigen::VectorXd col_sq = d.P.colwise().squaredNorm();

  EstimateReport rep;
  rep.method = "lasso";
  rep.n = d.n;
  rep.m = d.m;
  rep.lambda = lambda;
  rep.b0 = b0;
  for (long sweep = 1;; ++sweep) {
    double max_step = 0;
    for (long j = 0; j < nm; ++j) {
      if (col_sq(j) == 0) continue;  // unobserved cell stays at b0
      const double rho = d.P.col(j).dot(r) + col_sq(j) * x(j);
      const double xj = soft_threshold(rho, lambda / 2) / col_sq(j);
      const double step = xj - x(j);
      if (step != 0) {
        r -= step * d.P.col(j);
        x(j) = xj;
        max_step = std::max(max_step, std::abs(step));
      }
    }
    if (opts.objective_trace) opts.objective_trace->push_back(r.squaredNorm() + lambda * x.lpNorm<1>());
    if (max_step < opts.tolerance) {
      rep.sweeps = sweep;
      break;
    }
    if (sweep >= opts.max_sweeps)
      throw NonConvergenceError("coordinate descent did not converge in " + std::to_string(opts.max_sweeps) + " sweeps");
  }
  rep.c_hat = x.array() + b0;
  rep.sigma = d.sigma;
  return rep;
}

inline double log_term(std::size_t n, std::size_t m) {
  return 2.0 * std::log(static_cast<double>(n)) + 2.0 * std::log(static_cast<double>(m));
}

inline double lasso_lambda_rule(double sigma, std::size_t n, std::size_t m, long k, double delta) {
  if (sigma < 0 || n == 0 || m == 0 || k <= 0 || delta < 0) throw std::invalid_argument("lambda rule needs nonnegative inputs and K > 0");
  return 2.0 * sigma * (std::sqrt(log_term(n, m) / static_cast<double>(k)) + delta);
}

inline double lasso_bound(double sigma, double kappa, std::size_t s, std::size_t n, std::size_t m, long k, double delta) {
  if (!(kappa > 0)) throw std::invalid_argument("kappa must be positive");
  return 6.0 * sigma / kappa * std::sqrt(static_cast<double>(s)) * (log_term(n, m) / static_cast<double>(k) + delta);
}

/// 1 - 2 exp(-n delta^2 / 2); n defaults to the number of records.
inline double lasso_bound_probability(double delta, long n) { return 1.0 - 2.0 * std::exp(-static_cast<double>(n) * delta * delta / 2.0); }

// ---------------------------------------------------------------------------
// Restricted eigenvalue constant over the cone ||x_{S^c}||_1 <= 3 ||x_S||_1

struct RepResult {
  double kappa = 0;
  Eigen::VectorXd minimizer;  // unit vector in the cone attaining kappa
  bool exact = true;
  bool heuristic = false;
  long evaluated = 0;  // subspaces (exact) or directions (sampling)
};

inline constexpr std::size_t kRepExactMaxCells = 12;

inline bool in_rep_cone(const Eigen::VectorXd& x, const std::vector<bool>& in_s, double tol = 1e-9) {
  double on = 0, off = 0;
  for (long d = 0; d < x.size(); ++d) (in_s[static_cast<std::size_t>(d)] ? on : off) += std::abs(x(d));
  return off <= 3.0 * on + tol * std::max(1.0, on);
}

namespace detail {

// Smallest Rayleigh quotient of g on the column span of the orthonormal
// basis q, together with a unit minimizer.
inline std::pair<double, Eigen::VectorXd> bottom_eigen(const Eigen::MatrixXd& g, const Eigen::MatrixXd& q) {
  const Eigen::MatrixXd h = q.transpose() * g * q;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
  return {es.eigenvalues()(0), (q * es.eigenvectors().col(0)).normalized()};
}

}  // namespace detail

/// Exact mode: the minimum of the Rayleigh quotient over a polyhedral cone
/// is attained in the relative interior of some face, where the minimizer
/// is a bottom eigenvector of G restricted to the face's span. Faces are
/// spanned by a free coordinate set, optionally cut by the hyperplane
/// sum_{S^c} s_d x_d = 3 sum_S s_d x_d for a sign vector s.
inline RepResult rep_constant(const DesignMatrix& d, const std::vector<std::size_t>& s_cells,
                              std::optional<long> samples = std::nullopt, std::uint64_t seed = 0) {
  if (s_cells.empty()) throw std::invalid_argument("support set S must be non-empty");
  const long nm = d.cells();
  std::vector<bool> in_s(static_cast<std::size_t>(nm), false);
  for (auto c : s_cells) {
    if (c >= static_cast<std::size_t>(nm)) throw std::invalid_argument("support index out of range");
    in_s[c] = true;
  }
  const Eigen::MatrixXd g = d.P.transpose() * d.P / static_cast<double>(d.records());

  RepResult best;
  best.kappa = std::numeric_limits<double>::infinity();
  auto offer = [&](double value, const Eigen::VectorXd& v) {
    if (value < best.kappa && in_rep_cone(v, in_s)) {
      best.kappa = value;
      best.minimizer = v;
    }
  };

  if (static_cast<std::size_t>(nm) <= kRepExactMaxCells && !samples) {
    for (unsigned long mask = 1; mask < (1UL << nm); ++mask) {
      std::vector<long> free;
      for (long c = 0; c < nm; ++c)
        if ((mask >> c) & 1UL) free.push_back(c);
      bool touches_s = false;
      for (auto c : free) touches_s = touches_s || in_s[static_cast<std::size_t>(c)];
      if (!touches_s) continue;  // only x = 0 lies in such a face

      const long f = static_cast<long>(free.size());
      Eigen::MatrixXd q = Eigen::MatrixXd::Zero(nm, f);
      for (long t = 0; t < f; ++t) q(free[static_cast<std::size_t>(t)], t) = 1;
      auto [val, vec] = detail::bottom_eigen(g, q);
      offer(val, vec);
      ++best.evaluated;
      if (f < 2) continue;

      // hyperplane faces; s and -s give the same hyperplane
      for (unsigned long signs = 0; signs < (1UL << (f - 1)); ++signs) {
        Eigen::VectorXd a = Eigen::VectorXd::Zero(nm);
        for (long t = 0; t < f; ++t) {
          const long c = free[static_cast<std::size_t>(t)];
          const double sg = ((signs >> t) & 1UL) ? -1.0 : 1.0;
          a(c) = in_s[static_cast<std::size_t>(c)] ? -3.0 * sg : sg;
        }
        // orthonormal basis of {x in span(q) : a.x = 0}
        const Eigen::VectorXd aq = q.transpose() * a;
        Eigen::FullPivHouseholderQR<Eigen::MatrixXd> qr(aq);
        const Eigen::MatrixXd full = qr.matrixQ();
        const Eigen::MatrixXd sub = q * full.rightCols(f - 1);
        auto [hv, hvec] = detail::bottom_eigen(g, sub);
        offer(hv, hvec);
        ++best.evaluated;
      }
    }
    best.kappa = std::max(0.0, best.kappa);
    return best;
  }

  // Sampling: random cone directions. The minimum over samples bounds the
  // true constant from above, so the result is only a heuristic.
  CounterRng rng(seed, 0x5245);
  const long count = samples.value_or(200000);
  best.exact = false;
  best.heuristic = true;
  for (long t = 0; t < count; ++t) {
    Eigen::VectorXd x(nm);
    double on = 0, off = 0;
    for (long c = 0; c < nm; ++c) {
      x(c) = rng.normal();
      (in_s[static_cast<std::size_t>(c)] ? on : off) += std::abs(x(c));
    }
    if (off > 0) {
      const double scale = 3.0 * on / off * rng.uniform();
      for (long c = 0; c < nm; ++c)
        if (!in_s[static_cast<std::size_t>(c)]) x(c) *= scale;
    }
    x.normalize();
    offer(x.dot(g * x), x);
    ++best.evaluated;
  }
  return best;
}

// ---------------------------------------------------------------------------
// Synthetic noisy observations

using MarginalSampler = std::function<MarginalPair(CounterRng&)>;

/// Integer weights in [1, 6] normalized; fully supported, generically
/// giving nondegenerate vertex plans.
inline MarginalSampler uniform_weight_sampler(std::size_t n, std::size_t m, long max_weight = 6) {
  return [=](CounterRng& rng) {
    auto draw = [&](std::size_t len) {
      std::vector<long> w(len);
      long total = 0;
      for (auto& x : w) total += (x = rng.integer(1, max_weight));
      Vector v(len);
      for (std::size_t i = 0; i < len; ++i) v[i] = Rational(mpz_class(w[i]), mpz_class(total));
      return v;
    };
    MarginalPair mg;
    mg.mu = draw(n);
    mg.nu = draw(m);
    return mg;
  };
}

/// Shortest decimal that reads back as the same double.
inline Rational decimal_rational(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::fixed);
  return parse_rational(std::string(buf, res.ptr));
}

struct NoisyData {
  DesignMatrix design;
  ObservationSet observations;  // alpha holds the noisy value, as a decimal when sigma > 0
  Vector clean_alpha;
  std::vector<double> noise;
};

/// y_k = <c, pi_k> + eps_k with pi_k the forward vertex plan and eps_k
/// i.i.d. N(0, sigma^2), all drawn from stream `stream` under `seed`.
inline NoisyData generate_noisy_observations(const CostMatrix& c, const MarginalSampler& sampler, long k, double sigma,
                                             std::uint64_t seed, std::uint64_t stream = 0) {
  if (!(sigma >= 0)) throw std::invalid_argument("sigma must be nonnegative");
  if (k <= 0) throw std::invalid_argument("K must be positive");
  CounterRng rng(seed, stream);
  NoisyData out;
  out.observations.records.reserve(static_cast<std::size_t>(k));
  for (long r = 0; r < k; ++r) {
    const MarginalPair mg = sampler(rng);
    const ForwardSolution sol = solve_forward(c, mg);
    const double eps = sigma > 0 ? sigma * rng.normal() : 0.0;
    const Rational alpha = sigma > 0 ? decimal_rational(sol.value.to_double() + eps) : sol.value;
    out.clean_alpha.push_back(sol.value);
    out.noise.push_back(eps);
    out.observations.records.push_back({mg, alpha, sol.plan, std::nullopt});
  }
  out.design = build_design(out.observations);
  return out;
}

// ---------------------------------------------------------------------------
// Monte Carlo helper: replicate r gets its own stream, workers split the
// replicate range, results land at their replicate index.

template <class Fn>
auto monte_carlo(long replicates, Fn fn) -> std::vector<decltype(fn(0L))> {
  std::vector<decltype(fn(0L))> out(static_cast<std::size_t>(replicates));
  const long workers = std::max(1L, std::min<long>(replicates, std::thread::hardware_concurrency()));
  if (workers == 1) {
    for (long r = 0; r < replicates; ++r) out[static_cast<std::size_t>(r)] = fn(r);
    return out;
  }
  std::vector<std::thread> pool;
  for (long w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (long r = w; r < replicates; r += workers) out[static_cast<std::size_t>(r)] = fn(r);
    });
  for (auto& t : pool) t.join();
  return out;
}

}  // namespace iot
