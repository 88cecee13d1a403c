#pragma once

// Worked examples used as golden data across the suites.

#include "iot/types.hpp"
#include "support.hpp"

namespace iot::testing {

inline ObservationRecord alpha_record(MarginalPair m, const char* alpha) {
  return {std::move(m), q(alpha), std::nullopt, std::nullopt};
}

inline ObservationRecord plan_record(const TransportPlan& p, std::optional<Rational> alpha = std::nullopt) {
  return {{row_sums(p), col_sums(p)}, std::move(alpha), p, std::nullopt};
}

/// Four (marginals, total cost) records of a 2x2 cost recoverable from
/// total costs alone.
inline ObservationSet costs_only_example() {
  ObservationSet obs;
  obs.records = {alpha_record(marg({"3/4", "1/4"}, {"5/8", "3/8"}), "7/4"),
                 alpha_record(marg({"3/7", "4/7"}, {"1/5", "4/5"}), "1"),
                 alpha_record(marg({"4/5", "1/5"}, {"1/2", "1/2"}), "1"),
                 alpha_record(marg({"3/7", "4/7"}, {"1/2", "1/2"}), "1")};
  return obs;
}
inline CostMatrix costs_only_truth() { return mat({{"9/2", "-2"}, {"13/4", "13/4"}}); }

/// Three records with total costs and potentials, Monge class.
inline ObservationSet potentials_example() {
  ObservationSet obs;
  obs.cost_class = CostClass::monge();
  const MarginalPair m[3] = {marg({"1/2", "1/2"}, {"1", "0"}), marg({"1/3", "2/3"}, {"1", "0"}),
                             marg({"1", "0"}, {"2/5", "3/5"})};
  const char* alpha[3] = {"1", "2/3", "5/3"};
  const PotentialPair pot[3] = {{vec({"0", "-2"}), vec({"2", "0"})},
                                {vec({"0", "-2"}), vec({"2", "0"})},
                                {vec({"2", "0"}), vec({"0", "-5/9"})}};
  for (int k = 0; k < 3; ++k) obs.records.push_back({m[k], q(alpha[k]), std::nullopt, pot[k]});
  return obs;
}
inline CostMatrix potentials_truth() { return mat({{"2", "13/9"}, {"0", "-5/9"}}); }

/// Three plans with total costs; recoverable although K < NM.
inline ObservationSet costs_plans_example() {
  ObservationSet obs;
  obs.records = {plan_record(mat({{"3/20", "1/4"}, {"3/5", "0"}}), q("1/3")),
                 plan_record(mat({{"0", "1/2"}, {"1/2", "0"}}), q("1")),
                 plan_record(mat({{"1/2", "1/10"}, {"0", "2/5"}}), q("1"))};
  return obs;
}
inline CostMatrix costs_plans_truth() { return mat({{"-1/3", "7/3"}, {"-1/3", "7/3"}}); }

/// Four linearly independent plans whose equality system has a unique
/// solution that is not consistent with the observations.
inline ObservationSet inconsistent_example() {
  ObservationSet obs;
  obs.records = {plan_record(mat({{"0", "1/4"}, {"1/2", "1/4"}}), q("1")),
                 plan_record(mat({{"1/3", "0"}, {"1/3", "1/3"}}), q("1")),
                 plan_record(mat({{"1/3", "1/3"}, {"0", "1/3"}}), q("2")),
                 plan_record(mat({{"4/11", "3/11"}, {"4/11", "0"}}), q("2"))};
  return obs;
}
inline CostMatrix inconsistent_equality_solution() { return mat({{"8/3", "10/3"}, {"1/3", "0"}}); }

/// All NM Dirac plans, record k = i + j*N carrying alpha[k].
inline ObservationSet dirac_example(std::size_t n, std::size_t m, const Vector& alpha) {
  ObservationSet obs;
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t i = 0; i < n; ++i) {
      TransportPlan p(n, m);
      p(i, j) = 1;
      obs.records.push_back(plan_record(p, alpha[cell_index(i, j, n)]));
    }
  return obs;
}

}  // namespace iot::testing
