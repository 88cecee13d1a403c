#include <gtest/gtest.h>

#include <algorithm>

#include "fixtures.hpp"
#include "iot/identify.hpp"
#include "support.hpp"

using namespace iot;
using namespace iot::testing;

namespace {

bool has_diagnostic(const IdentifiabilityReport& r, const std::string& needle) {
  for (const auto& d : r.diagnostics)
    if (d.find(needle) != std::string::npos) return true;
  return false;
}

// Exact observation of (alpha, plan) for cost c: the plan is the barycenter
// of the optimal vertex set, or a single optimal vertex.
ObservationRecord observe(const CostMatrix& c, const MarginalPair& mg, bool barycenter) {
  const auto eps = enumerate_extreme_points(mg);
  const Rational value = ot_value(c, mg);
  std::vector<const TransportPlan*> opt;
  for (const auto& v : eps.vertices)
    if (frobenius(c, v) == value) opt.push_back(&v);
  TransportPlan plan = *opt.front();
  if (barycenter) {
    plan = TransportPlan(mg.rows(), mg.cols());
    const Rational w = Rational(1) / Rational(static_cast<long>(opt.size()));
    for (const auto* v : opt)
      for (std::size_t i = 0; i < mg.rows(); ++i)
        for (std::size_t j = 0; j < mg.cols(); ++j) plan(i, j) += w * (*v)(i, j);
  }
  return {mg, value, plan, std::nullopt};
}

bool in_span(const std::vector<Vector>& basis, const Vector& x) {
  if (basis.empty()) {
    for (const auto& v : x)
      if (!v.is_zero()) return false;
    return true;
  }
  auto with = basis;
  with.push_back(x);
  return affine_rank(with) == affine_rank(basis);
}

bool ranges_contain(const IdentifiabilityReport& r, const CostMatrix& c) {
  const auto v = c.vectorize();
  if (r.coordinate_ranges.size() != v.size()) return false;
  for (std::size_t d = 0; d < v.size(); ++d)
    if (!r.coordinate_ranges[d].contains(v[d])) return false;
  return true;
}

ObservationSet dirac_marginal_records(const CostMatrix& c) {
  ObservationSet obs;
  const std::size_t n = c.rows(), m = c.cols();
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t i = 0; i < n; ++i) {
      MarginalPair mg{Vector(n), Vector(m)};
      mg.mu[i] = 1;
      mg.nu[j] = 1;
      obs.records.push_back({mg, c(i, j), std::nullopt, std::nullopt});
    }
  return obs;
}

}  // namespace

// ---------------------------------------------------------------------------
// Total costs only

TEST(CostsOnly, WorkedExampleIsIdentifiable) {
  const auto rep = identify_costs_only(costs_only_example());
  ASSERT_EQ(rep.verdict, Verdict::identifiable);
  EXPECT_EQ(*rep.recovered_cost, costs_only_truth());
  EXPECT_FALSE(rep.ambiguity.has_value());
}

TEST(CostsOnly, SingleRecordIsAmbiguous) {
  ObservationSet obs;
  obs.records.push_back(alpha_record(marg({"1/2", "1/2"}, {"1/2", "1/2"}), "0"));
  const auto rep = identify_costs_only(obs);
  EXPECT_EQ(rep.verdict, Verdict::ambiguous);
  ASSERT_TRUE(rep.ambiguity.has_value());
  EXPECT_GE(rep.ambiguity->directions.size(), 1u);
}

TEST(CostsOnly, BoxMakesAlteredExampleInconsistent) {
  auto obs = costs_only_example();
  obs.records[0].alpha = q("2");  // exceeds <c, u> for every c in [0,1]^4
  obs.cost_class = CostClass::box(Rational(1));
  EXPECT_EQ(identify_costs_only(obs).verdict, Verdict::inconsistent);
}

TEST(CostsOnly, CapYieldsUndecided) {
  IdentifyOptions opts;
  opts.cap = 2;
  const auto rep = identify_costs_only(costs_only_example(), opts);
  EXPECT_EQ(rep.verdict, Verdict::undecided_cap);
}

TEST(CostsOnly, RecordOrderDoesNotChangeVerdict) {
  auto obs = costs_only_example();
  std::vector<std::size_t> perm{0, 1, 2, 3};
  do {
    ObservationSet shuffled;
    for (auto p : perm) shuffled.records.push_back(obs.records[p]);
    const auto rep = identify_costs_only(shuffled);
    ASSERT_EQ(rep.verdict, Verdict::identifiable);
    EXPECT_EQ(*rep.recovered_cost, costs_only_truth());
  } while (std::next_permutation(perm.begin(), perm.end()));
}

TEST(CostsOnly, DiracMarginalsIdentify) {
  Gen g(71);
  const auto c = g.cost(2, 3);
  const auto rep = identify_costs_only(dirac_marginal_records(c));
  ASSERT_EQ(rep.verdict, Verdict::identifiable);
  EXPECT_EQ(*rep.recovered_cost, c);
}

TEST(CostsOnlyEquality, WorkedExampleIsNotDecidable) {
  const auto rep = identify_costs_only_equality_sufficient(costs_only_example());
  EXPECT_NE(rep.verdict, Verdict::identifiable);
  EXPECT_EQ(rep.sufficient_condition_met, false);
  EXPECT_TRUE(has_diagnostic(rep, "not decidable"));
  EXPECT_TRUE(has_diagnostic(rep, "assumed"));
  ASSERT_TRUE(rep.ambiguity.has_value());
  EXPECT_FALSE(rep.ambiguity->alternatives.empty());
}

TEST(CostsOnlyEquality, FullRankAndSingleEquality) {
  Gen g(72);
  const auto c = g.cost(2, 2);
  const auto rep = identify_costs_only_equality_sufficient(dirac_marginal_records(c));
  ASSERT_EQ(rep.verdict, Verdict::identifiable);
  EXPECT_EQ(*rep.recovered_cost, c);
  EXPECT_EQ(rep.sufficient_condition_met, true);

  ObservationSet one;
  one.records.push_back(alpha_record(marg({"1/2", "1/2"}, {"1/2", "1/2"}), "1"));
  EXPECT_EQ(identify_costs_only_equality_sufficient(one).verdict, Verdict::ambiguous);
}

TEST(CostsMonge, RandomMongeCostRecovered) {
  Gen g(73);
  int recovered = 0;
  for (int t = 0; t < 20; ++t) {
    const auto c = g.monge_cost(2, 2);
    ObservationSet obs;
    obs.cost_class = CostClass::monge();
    for (int k = 0; k < 4; ++k) {
      const auto mg = g.marginals(2, 2);
      obs.records.push_back({mg, ot_value(c, mg), std::nullopt, std::nullopt});
    }
    const auto rep = identify_costs_monge(obs);
    ASSERT_NE(rep.verdict, Verdict::inconsistent);
    EXPECT_TRUE(ranges_contain(rep, c));
    if (rep.verdict == Verdict::identifiable) {
      EXPECT_EQ(*rep.recovered_cost, c);
      ++recovered;
    }
  }
  EXPECT_GE(recovered, 15);
}

TEST(CostsMonge, SingleRecordAndInconsistentAlpha) {
  ObservationSet one;
  one.records.push_back(alpha_record(marg({"1/2", "1/2"}, {"1/3", "2/3"}), "1"));
  EXPECT_EQ(identify_costs_monge(one).verdict, Verdict::ambiguous);
  // Dirac marginals fix c = [[1,0],[0,1]], which violates the Monge property
  EXPECT_EQ(identify_costs_monge(dirac_marginal_records(mat({{"1", "0"}, {"0", "1"}}))).verdict,
            Verdict::inconsistent);
}

// ---------------------------------------------------------------------------
// Potentials

TEST(Potentials, WorkedExampleSweepUnderMongeClass) {
  const auto rep = identify_potentials(potentials_example());
  ASSERT_EQ(rep.verdict, Verdict::identifiable);
  EXPECT_EQ(*rep.recovered_cost, potentials_truth());
}

TEST(Potentials, FullSupportVertexGivesOuterSum) {
  ObservationSet obs;
  const PotentialPair p{vec({"3/2"}), vec({"1", "-4"})};
  obs.records.push_back({marg({"1"}, {"1/2", "1/2"}), std::nullopt, std::nullopt, p});
  const auto rep = identify_potentials(obs);
  ASSERT_EQ(rep.verdict, Verdict::identifiable);
  EXPECT_EQ(*rep.recovered_cost, outer_sum(p.f, p.g));
}

TEST(Potentials, DualInfeasibleEverywhereIsInconsistent) {
  ObservationSet obs;
  obs.records.push_back({marg({"1/2", "1/2"}, {"1/2", "1/2"}), q("0"), std::nullopt,
                         PotentialPair{vec({"1", "1"}), vec({"1", "1"})}});
  EXPECT_EQ(identify_potentials(obs).verdict, Verdict::inconsistent);
}

TEST(PotentialsMonge, WorkedExample) {
  const auto rep = identify_potentials_monge(potentials_example());
  ASSERT_EQ(rep.verdict, Verdict::identifiable);
  EXPECT_EQ(*rep.recovered_cost, potentials_truth());
  EXPECT_FALSE(monge_support_cover_sufficient(potentials_example()));
}

TEST(PotentialsMonge, DroppingThirdRecordLeavesCellFree) {
  auto obs = potentials_example();
  obs.records.pop_back();
  const auto rep = identify_potentials_monge(obs);
  ASSERT_EQ(rep.verdict, Verdict::ambiguous);
  EXPECT_FALSE(rep.coordinate_ranges[cell_index(0, 1, 2)].is_point());
  EXPECT_TRUE(ranges_contain(rep, potentials_truth()));
}

TEST(PotentialsMonge, ZeroPotentialsSingleRecord) {
  ObservationSet obs;
  obs.records.push_back({marg({"1/2", "1/2"}, {"1/2", "1/2"}), std::nullopt, std::nullopt,
                         PotentialPair{vec({"0", "0"}), vec({"0", "0"})}});
  EXPECT_EQ(identify_potentials_monge(obs).verdict, Verdict::ambiguous);
}

TEST(MongeCover, Examples) {
  EXPECT_FALSE(monge_support_cover_sufficient(std::vector<MarginalPair>{marg({"1/2", "1/2"}, {"1/3", "2/3"})}));
  std::vector<MarginalPair> dirac;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 3; ++j) {
      MarginalPair mg{Vector(2), Vector(3)};
      mg.mu[i] = 1;
      mg.nu[j] = 1;
      dirac.push_back(mg);
    }
  EXPECT_TRUE(monge_support_cover_sufficient(dirac));
}

TEST(PotentialsProperty, CoverConditionImpliesMongeIdentifiability) {
  Gen g(74);
  int covered = 0;
  for (int t = 0; t < 60; ++t) {
    const auto c = g.monge_cost(2, 3);
    ObservationSet obs;
    obs.cost_class = CostClass::monge();
    for (int k = 0; k < 4; ++k) {
      const auto mg = g.marginals(2, 3);
      const auto s = solve_forward(c, mg);
      obs.records.push_back({mg, s.value, std::nullopt, s.potentials});
    }
    if (!monge_support_cover_sufficient(obs)) continue;
    ++covered;
    const auto rep = identify_potentials_monge(obs);
    ASSERT_EQ(rep.verdict, Verdict::identifiable);
    EXPECT_EQ(*rep.recovered_cost, c);
  }
  EXPECT_GT(covered, 5);
}

// ---------------------------------------------------------------------------
// Plans only

TEST(PlansOnly, UniformInteriorPlan) {
  ObservationSet obs;
  obs.records.push_back(plan_record(mat({{"1/4", "1/4"}, {"1/4", "1/4"}})));
  const auto rep = identify_plans_only(obs);
  EXPECT_EQ(rep.verdict, Verdict::identifiable_in_quotient);
  EXPECT_EQ(rep.residual_dimension, 0);
  EXPECT_EQ(*rep.recovered_cost, CostMatrix(2, 2));
  ASSERT_TRUE(rep.ambiguity.has_value());
  EXPECT_TRUE(rep.ambiguity->directions.empty());
  EXPECT_EQ(rep.ambiguity->shift_directions.size(), 3u);
}

TEST(PlansOnly, VertexPlanLeavesScaleClass) {
  ObservationSet obs;
  obs.records.push_back(plan_record(mat({{"1/2", "0"}, {"0", "1/2"}})));
  const auto rep = identify_plans_only(obs);
  EXPECT_EQ(rep.verdict, Verdict::ambiguous);
  EXPECT_EQ(rep.residual_dimension, 1);
  EXPECT_TRUE(has_diagnostic(rep, "scale"));
  EXPECT_EQ(rep.ambiguity->directions.size(), 1u);
}

TEST(PlansOnly, EmptyObservationThrows) {
  EXPECT_THROW(identify_plans_only(ObservationSet{}), std::invalid_argument);
}

TEST(PlansOnly, VertexOnlyModeIsLeastInformative) {
  ObservationSet obs;
  obs.records.push_back(plan_record(mat({{"1/4", "1/4"}, {"1/4", "1/4"}})));
  IdentifyOptions opts;
  opts.vertex_only = true;
  EXPECT_EQ(identify_plans_only(obs, opts).residual_dimension, 1);
}

TEST(PlansOnlyProperty, TrueCostLiesInReportedClass) {
  Gen g(75);
  for (int t = 0; t < 60; ++t) {
    const std::size_t n = 2 + g.index(2), m = 2 + g.index(2);
    const auto c = g.cost(n, m, 2, 1);  // small integers: ties and large faces are common
    ObservationSet obs;
    const std::size_t k = 1 + g.index(4);
    for (std::size_t r = 0; r < k; ++r) {
      auto rec = observe(c, g.marginals(n, m), g.coin(0.7));
      rec.alpha.reset();
      obs.records.push_back(rec);
    }
    const auto rep = identify_plans_only(obs);
    // E_K c = 0 exactly
    for (const auto& row : plan_difference_rows(merge_repeated_marginals(obs), {}))
      EXPECT_EQ(dot(row, c.vectorize()), Rational(0));
    auto basis = rep.ambiguity->directions;
    for (const auto& s : rep.ambiguity->shift_directions) basis.push_back(s);
    EXPECT_TRUE(in_span(basis, c.vectorize()));
    EXPECT_EQ(*rep.residual_dimension + *rep.achieved_rank, static_cast<long>((n - 1) * (m - 1)));
    EXPECT_EQ(static_cast<long>(rep.ambiguity->directions.size()), *rep.residual_dimension);
    if (rep.verdict == Verdict::identifiable_in_quotient) { EXPECT_EQ(shift_canonical_form(c), CostMatrix(n, m)); }
  }
}

TEST(PlansOnlySym, TwoByTwo) {
  ObservationSet face;
  face.records.push_back(plan_record(mat({{"1/4", "1/4"}, {"1/4", "1/4"}})));
  const auto a = identify_plans_only_sym(face);
  EXPECT_EQ(a.residual_dimension, 0);
  EXPECT_EQ(a.verdict, Verdict::identifiable);
  EXPECT_EQ(*a.recovered_cost, CostMatrix(2, 2));

  ObservationSet vertex;
  vertex.records.push_back(plan_record(mat({{"1/2", "0"}, {"0", "1/2"}})));
  const auto b = identify_plans_only_sym(vertex);
  EXPECT_EQ(b.residual_dimension, 1);
  EXPECT_EQ(b.verdict, Verdict::ambiguous);
}

TEST(PlansOnlySym, ThreeByThreeRichFaceAndShapeError) {
  ObservationSet obs;
  TransportPlan u(3, 3);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) u(i, j) = q("1/9");
  obs.records.push_back(plan_record(u));
  EXPECT_EQ(identify_plans_only_sym(obs).residual_dimension, 0);

  ObservationSet rect;
  rect.records.push_back(plan_record(mat({{"1/4", "1/4"}})));
  EXPECT_THROW(identify_plans_only_sym(rect), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Costs and plans

TEST(CostsPlans, WorkedExampleIsIdentifiable) {
  const auto rep = identify_costs_plans(costs_plans_example());
  ASSERT_EQ(rep.verdict, Verdict::identifiable);
  EXPECT_EQ(*rep.recovered_cost, costs_plans_truth());
}

TEST(CostsPlans, DiracPlans) {
  for (std::size_t n : {2u, 3u}) {
    Gen g(76 + n);
    Vector alpha(n * n);
    for (auto& a : alpha) a = g.rational(20, 7);
    const auto rep = identify_costs_plans(dirac_example(n, n, alpha));
    ASSERT_EQ(rep.verdict, Verdict::identifiable);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) EXPECT_EQ((*rep.recovered_cost)(i, j), alpha[i + j * n]);
  }
}

TEST(CostsPlans, InconsistencyExample) {
  EXPECT_EQ(identify_costs_plans(inconsistent_example()).verdict, Verdict::inconsistent);
}

TEST(CostsPlans, ConflictingRepeatedRecordsAreInconsistent) {
  auto obs = costs_plans_example();
  auto dup = obs.records[0];
  dup.alpha = q("5");
  obs.records.push_back(dup);
  EXPECT_EQ(identify_costs_plans(obs).verdict, Verdict::inconsistent);
}

TEST(CostsPlansRank, InconsistencyExample) {
  const auto rep = identify_costs_plans_rank(inconsistent_example());
  EXPECT_EQ(rep.achieved_rank, 4);
  ASSERT_TRUE(rep.recovered_cost.has_value());
  EXPECT_EQ(*rep.recovered_cost, inconsistent_equality_solution());
  EXPECT_EQ(rep.verdict, Verdict::inconsistent);
  EXPECT_TRUE(has_diagnostic(rep, "3/4"));
  EXPECT_TRUE(has_diagnostic(rep, "19/11"));
}

TEST(CostsPlansRank, DiracAndSingleVertex) {
  Vector alpha = vec({"1", "-2", "7/3", "0"});
  const auto rep = identify_costs_plans_rank(dirac_example(2, 2, alpha));
  ASSERT_EQ(rep.verdict, Verdict::identifiable);
  EXPECT_EQ(rep.recovered_cost->vectorize(), alpha);

  ObservationSet one;
  one.records.push_back(plan_record(mat({{"1/2", "0"}, {"0", "1/2"}}), q("1")));
  const auto amb = identify_costs_plans_rank(one);
  EXPECT_EQ(amb.verdict, Verdict::ambiguous);
  EXPECT_EQ(amb.achieved_rank, 1);
}

TEST(CostsPlansSym, TwoByTwoSingleRecord) {
  ObservationSet obs;
  obs.cost_class = CostClass::sym0();
  obs.records.push_back(plan_record(mat({{"0", "1/2"}, {"1/2", "0"}}), q("-2")));
  const auto rep = identify_costs_plans_sym(obs);
  ASSERT_EQ(rep.verdict, Verdict::identifiable);
  EXPECT_EQ(*rep.recovered_cost, mat({{"0", "-2"}, {"-2", "0"}}));
}

TEST(CostsPlansSym, ThreeByThree) {
  ObservationSet few;
  few.records.push_back(plan_record(mat({{"0", "1/3", "0"}, {"1/3", "0", "0"}, {"0", "0", "1/3"}}), q("1")));
  EXPECT_EQ(identify_costs_plans_sym(few).verdict, Verdict::ambiguous);

  Gen g(77);
  for (int t = 0; t < 10; ++t) {
    CostMatrix c(3, 3);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = i + 1; j < 3; ++j) c(i, j) = c(j, i) = Rational(g.integer(1, 9));
    ObservationSet obs;
    obs.cost_class = CostClass::sym0();
    for (int k = 0; k < 200; ++k) {
      obs.records.push_back(observe(c, g.marginals(3, 3, true), g.coin()));
      if (identify_costs_plans_sym(obs).achieved_rank == 3) break;
    }
    const auto rep = identify_costs_plans_sym(obs);
    ASSERT_EQ(rep.verdict, Verdict::identifiable);
    EXPECT_EQ(*rep.recovered_cost, c);
  }
}

TEST(CostsPlansProperty, RoundTripOnForwardGeneratedData) {
  Gen g(78);
  int identified = 0;
  for (int t = 0; t < 120; ++t) {
    const std::size_t n = 2 + g.index(2), m = 2 + g.index(2);
    const auto c = g.cost(n, m, 6, 2);
    ObservationSet obs;
    const std::size_t k = 1 + g.index(2 * n * m);
    for (std::size_t r = 0; r < k; ++r) obs.records.push_back(observe(c, g.marginals(n, m, g.coin(0.2)), g.coin()));
    const auto rep = identify_costs_plans(obs);
    ASSERT_NE(rep.verdict, Verdict::inconsistent);
    EXPECT_TRUE(all_pass(verify_consistency(c, obs)));
    if (rep.verdict == Verdict::identifiable) {
      ++identified;
      EXPECT_EQ(*rep.recovered_cost, c);
      EXPECT_TRUE(all_pass(verify_consistency(*rep.recovered_cost, obs)));
    } else {
      EXPECT_TRUE(ranges_contain(rep, c));
      // c - base lies in the direction span
      Vector diff = c.vectorize();
      for (std::size_t d = 0; d < diff.size(); ++d) diff[d] -= rep.ambiguity->base[d];
      EXPECT_TRUE(in_span(rep.ambiguity->directions, diff));
    }
  }
  EXPECT_GT(identified, 10);
}

TEST(CostsPlansProperty, ReductionToggleGivesSameAnswer) {
  Gen g(79);
  for (int t = 0; t < 40; ++t) {
    const auto c = g.cost(2, 3, 3, 1);
    ObservationSet obs;
    for (int k = 0; k < 3; ++k) obs.records.push_back(observe(c, g.marginals(2, 3), g.coin()));
    IdentifyOptions on;
    on.reduce_constraints = true;
    const auto a = identify_costs_plans(obs), b = identify_costs_plans(obs, on);
    EXPECT_EQ(a.verdict, b.verdict);
    EXPECT_EQ(a.coordinate_ranges, b.coordinate_ranges);
  }
}

TEST(CostsPlansProperty, MoreInformationKeepsIdentifiability) {
  // the worked costs-only example, augmented with the optimal plans
  auto obs = costs_only_example();
  for (auto& r : obs.records) r.plan = solve_forward(costs_only_truth(), r.marginals).plan;
  const auto rep = identify_costs_plans(obs);
  ASSERT_EQ(rep.verdict, Verdict::identifiable);
  EXPECT_EQ(*rep.recovered_cost, costs_only_truth());

  Gen g(80);
  int checked = 0;
  for (int t = 0; t < 40 && checked < 8; ++t) {
    const auto c = g.cost(2, 2, 4, 1);
    ObservationSet only;
    for (int k = 0; k < 4; ++k) {
      const auto mg = g.marginals(2, 2);
      only.records.push_back({mg, ot_value(c, mg), std::nullopt, std::nullopt});
    }
    const auto a = identify_costs_only(only);
    if (a.verdict != Verdict::identifiable) continue;
    ++checked;
    ObservationSet both = only;
    for (auto& r : both.records) r.plan = observe(c, r.marginals, true).plan;
    const auto b = identify_costs_plans(both);
    ASSERT_EQ(b.verdict, Verdict::identifiable);
    EXPECT_EQ(*b.recovered_cost, *a.recovered_cost);
  }
}

TEST(CostsPlansProperty, ShiftWitnessPreservesConsistency) {
  Gen g(81);
  for (int t = 0; t < 40; ++t) {
    const std::size_t n = 2 + g.index(2), m = 2 + g.index(2);
    const auto c = g.cost(n, m);
    ObservationSet obs;
    const std::size_t k = 1 + g.index(n + m - 2);
    for (std::size_t r = 0; r < k; ++r) obs.records.push_back(observe(c, g.marginals(n, m), g.coin()));
    const auto sk = shift_kernel_check(obs);
    ASSERT_FALSE(sk.trivial);  // fewer than N+M-1 records
    ASSERT_TRUE(all_pass(verify_consistency(c, obs)));
    EXPECT_TRUE(all_pass(verify_consistency(shift(c, *sk.a, *sk.b), obs)));
    EXPECT_NE(shift(c, *sk.a, *sk.b), c);
  }
}

// ---------------------------------------------------------------------------
// Full information

TEST(Full, FullSupportZeroPotentials) {
  ObservationSet obs;
  obs.records.push_back({marg({"1/2", "1/2"}, {"1/2", "1/2"}), q("0"), mat({{"1/4", "1/4"}, {"1/4", "1/4"}}),
                         PotentialPair{vec({"0", "0"}), vec({"0", "0"})}});
  const auto rep = identify_full(obs);
  ASSERT_EQ(rep.verdict, Verdict::identifiable);
  EXPECT_EQ(*rep.recovered_cost, CostMatrix(2, 2));
}

TEST(Full, SingleRecordPinsItsSupport) {
  const auto ex = potentials_example();
  ObservationSet obs;
  auto r = ex.records[2];
  r.plan = mat({{"2/5", "3/5"}, {"0", "0"}});
  obs.records.push_back(r);
  const auto rep = identify_full(obs);
  ASSERT_EQ(rep.verdict, Verdict::ambiguous);
  EXPECT_EQ(rep.coordinate_ranges[cell_index(0, 0, 2)], (Range{q("2"), q("2")}));
  EXPECT_EQ(rep.coordinate_ranges[cell_index(0, 1, 2)], (Range{q("13/9"), q("13/9")}));
  EXPECT_FALSE(rep.coordinate_ranges[cell_index(1, 1, 2)].hi.has_value());
}

TEST(Full, CoveringSupportsRecoverCellwiseMaximum) {
  Gen g(82);
  int done = 0;
  for (int t = 0; t < 200 && done < 20; ++t) {
    const auto c = g.cost(2, 2);
    ObservationSet obs;
    for (int k = 0; k < 2; ++k) {
      const auto mg = g.marginals(2, 2);
      const auto s = solve_forward(c, mg);
      obs.records.push_back({mg, s.value, s.plan, s.potentials});
    }
    const auto rep = identify_full(obs);
    ASSERT_NE(rep.verdict, Verdict::inconsistent);
    if (rep.verdict != Verdict::identifiable) continue;
    ++done;
    EXPECT_EQ(*rep.recovered_cost, c);
    // normalizing potentials by (f + t, g - t) changes nothing
    auto moved = obs;
    for (auto& r : moved.records) {
      const Rational s = g.rational(5, 3);
      for (auto& x : r.potentials->f) x += s;
      for (auto& x : r.potentials->g) x -= s;
    }
    EXPECT_EQ(identify_full(moved).recovered_cost, rep.recovered_cost);
  }
  EXPECT_GT(done, 5);
}

TEST(Full, SlacknessConflictIsInconsistent) {
  ObservationSet obs;
  obs.records.push_back({marg({"1/2", "1/2"}, {"1/2", "1/2"}), std::nullopt, mat({{"1/4", "1/4"}, {"1/4", "1/4"}}),
                         PotentialPair{vec({"0", "0"}), vec({"0", "0"})}});
  obs.records.push_back({marg({"1", "0"}, {"1", "0"}), std::nullopt, mat({{"1", "0"}, {"0", "0"}}),
                         PotentialPair{vec({"1", "0"}), vec({"0", "0"})}});
  EXPECT_EQ(identify_full(obs).verdict, Verdict::inconsistent);
}

// ---------------------------------------------------------------------------
// Shift kernel, merging, consistency

TEST(ShiftKernel, Examples) {
  const auto one = shift_kernel_check(std::vector<MarginalPair>{marg({"1/2", "1/2"}, {"1/3", "2/3"})});
  EXPECT_FALSE(one.trivial);
  EXPECT_EQ(one.dimension, 2);

  std::vector<MarginalPair> dirac;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      MarginalPair mg{Vector(2), Vector(2)};
      mg.mu[i] = 1;
      mg.nu[j] = 1;
      dirac.push_back(mg);
    }
  EXPECT_TRUE(shift_kernel_check(dirac).trivial);
  // exact rank oracle: trivial iff stacked [mu, nu] has rank N+M-1
  std::vector<std::vector<Rational>> rows;
  for (const auto& mg : dirac) {
    std::vector<Rational> r(mg.mu);
    r.insert(r.end(), mg.nu.begin(), mg.nu.end());
    rows.push_back(r);
  }
  EXPECT_EQ(dense_rank(rows), 3u);

  auto doubled = dirac;
  doubled.insert(doubled.end(), dirac.begin(), dirac.end());
  EXPECT_EQ(shift_kernel_check(doubled).dimension, shift_kernel_check(dirac).dimension);
}

TEST(ShiftKernelProperty, WitnessIsNonzeroShiftInKernel) {
  Gen g(83);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 1 + g.index(4), m = 1 + g.index(4), k = 1 + g.index(6);
    std::vector<MarginalPair> ms;
    std::vector<std::vector<Rational>> rows;
    for (std::size_t r = 0; r < k; ++r) {
      ms.push_back(g.marginals(n, m, true));
      std::vector<Rational> row(ms.back().mu);
      row.insert(row.end(), ms.back().nu.begin(), ms.back().nu.end());
      rows.push_back(row);
    }
    const auto res = shift_kernel_check(ms);
    EXPECT_EQ(res.trivial, dense_rank(rows) == n + m - 1);
    if (res.trivial) continue;
    for (const auto& mg : ms) EXPECT_EQ(dot(*res.a, mg.mu) + dot(*res.b, mg.nu), Rational(0));
    EXPECT_NE(outer_sum(*res.a, *res.b), CostMatrix(n, m));
  }
}

TEST(Merge, Examples) {
  auto ex = costs_plans_example();
  ObservationSet twice;
  twice.records = {ex.records[0], ex.records[0]};
  const auto a = merge_repeated_marginals(twice);
  ASSERT_EQ(a.records.size(), 1u);
  EXPECT_EQ(*a.records[0].plan, *ex.records[0].plan);

  ObservationSet two;
  two.records.push_back(plan_record(mat({{"1/2", "0"}, {"0", "1/2"}}), q("1")));
  two.records.push_back(plan_record(mat({{"0", "1/2"}, {"1/2", "0"}}), q("1")));
  const auto b = merge_repeated_marginals(two);
  ASSERT_EQ(b.records.size(), 1u);
  EXPECT_EQ(*b.records[0].plan, mat({{"1/4", "1/4"}, {"1/4", "1/4"}}));

  EXPECT_EQ(merge_repeated_marginals(ex), ex);

  two.records[1].alpha = q("2");
  EXPECT_THROW(merge_repeated_marginals(two), ConflictingObservationError);
}

TEST(Verify, Examples) {
  const auto ok = verify_consistency(costs_only_truth(), costs_only_example());
  EXPECT_TRUE(all_pass(ok));

  const auto bad = verify_consistency(inconsistent_equality_solution(), inconsistent_example());
  ASSERT_EQ(bad.size(), 4u);
  EXPECT_FALSE(bad[0].pass);
  EXPECT_TRUE(bad[1].pass);
  EXPECT_TRUE(bad[2].pass);
  EXPECT_FALSE(bad[3].pass);
  EXPECT_EQ(bad[0].ot_value, q("3/4"));
  EXPECT_EQ(bad[1].ot_value, q("1"));
  EXPECT_EQ(bad[2].ot_value, q("2"));
  EXPECT_EQ(bad[3].ot_value, q("19/11"));

  Gen g(84);
  const auto c = g.cost(3, 2);
  ObservationSet obs;
  for (int k = 0; k < 5; ++k) {
    const auto mg = g.marginals(3, 2);
    const auto s = solve_forward(c, mg);
    obs.records.push_back({mg, s.value, s.plan, s.potentials});
  }
  EXPECT_TRUE(all_pass(verify_consistency(c, obs)));
}

TEST(IdentifyProperty, IdentifiableVerdictsPassVerification) {
  Gen g(85);
  for (int t = 0; t < 30; ++t) {
    const auto c = g.cost(2, 2, 4, 1);
    ObservationSet obs;
    for (int k = 0; k < 4; ++k) {
      const auto mg = g.marginals(2, 2);
      obs.records.push_back({mg, ot_value(c, mg), std::nullopt, std::nullopt});
    }
    const auto rep = identify_costs_only(obs);
    ASSERT_NE(rep.verdict, Verdict::inconsistent);
    if (rep.verdict == Verdict::identifiable) {
      EXPECT_EQ(*rep.recovered_cost, c);
      EXPECT_TRUE(all_pass(verify_consistency(*rep.recovered_cost, obs)));
    }
  }
}
