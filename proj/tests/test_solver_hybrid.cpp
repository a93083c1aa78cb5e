#include "swipt/solver_hybrid.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "swipt/solver_sum.hpp"

namespace swipt {
namespace {

using test::oracle_max_eigenvalue;
using test::oracle_min_eigenvalue;
using test::oracle_waterfill_capacity_bits;

// harvest floors set to a fraction of what the identity start collects, so
// they are feasible with known slack
Scenario scenario_with_floors(std::uint64_t seed, int n_tx, int num_info,
                              int num_harvest, double fraction) {
  Scenario sc = make_scenario(seed, n_tx, std::vector<Index>(num_info, 2),
                              std::vector<Index>(num_harvest, 2));
  const CovarianceTuple id = scaled_identity_tuple(sc);
  for (int j = 0; j < num_harvest; ++j) {
    sc.harvest_targets[j] = fraction * harvested_power(sc, id, j);
  }
  return sc;
}

TEST(FeasibleStart, MeetsFloorsOrThrowsCertificate) {
  Scenario sc = scenario_with_floors(71, 4, 2, 2, 0.6);
  const CovarianceTuple start = find_feasible_start(sc);
  EXPECT_TRUE(check_feasibility(sc, start, true, 1e-7).feasible);

  // floors above the spectral bound P * lambda_max(H^H H) are unattainable
  Scenario bad = sc;
  const ComplexMatrix& h = bad.harvest_channel(0);
  bad.harvest_targets[0] =
      1.01 * bad.total_power * oracle_max_eigenvalue(h.adjoint() * h);
  try {
    find_feasible_start(bad);
    FAIL() << "expected infeasibility";
  } catch (const InfeasibleError& e) {
    EXPECT_LT(e.max_slack, 0.0);
  }
}

TEST(MaxHarvestSlack, CertifiesTheReportedSlack) {
  Scenario sc = scenario_with_floors(72, 4, 2, 2, 0.5);
  const FeasibilityCertificate cert = max_harvest_slack(sc);
  EXPECT_GT(cert.max_slack, 0.0);
  for (int j = 0; j < sc.num_harvest; ++j) {
    EXPECT_GE(harvested_power(sc, cert.point, j) - sc.harvest_targets[j],
              cert.max_slack - 1e-6 * std::max(1.0, cert.max_slack));
  }
  EXPECT_LE(total_transmit_power(cert.point), sc.total_power + 1e-7);
}

TEST(InteriorTuple, StrictlyInsideTheConstraintSet) {
  Scenario sc = scenario_with_floors(73, 4, 2, 2, 0.7);
  const CovarianceTuple anchor = find_feasible_start(sc);
  std::vector<double> slack;
  for (int j = 0; j < sc.num_harvest; ++j) {
    slack.push_back(harvested_power(sc, anchor, j) - sc.harvest_targets[j]);
  }
  CovarianceTuple interior;
  ASSERT_TRUE(make_interior_tuple(sc, anchor, slack, interior));
  EXPECT_LT(total_transmit_power(interior), sc.total_power);
  for (int j = 0; j < sc.num_harvest; ++j) {
    EXPECT_GT(harvested_power(sc, interior, j), sc.harvest_targets[j]);
  }
  for (const ComplexMatrix& m : interior) {
    EXPECT_GT(oracle_min_eigenvalue(hermitian_part(m)), 0.0);
  }
}

TEST(QuadSubproblemSolve, BarrierAndSplittingAgree) {
  std::mt19937_64 rng(74);
  for (int trial = 0; trial < 4; ++trial) {
    Scenario sc = scenario_with_floors(rng(), 4, 2, 2, 0.6);
    const CovarianceTuple anchor = find_feasible_start(sc);
    std::vector<double> slack;
    for (int j = 0; j < sc.num_harvest; ++j) {
      slack.push_back(harvested_power(sc, anchor, j) - sc.harvest_targets[j]);
    }
    CovarianceTuple interior;
    ASSERT_TRUE(make_interior_tuple(sc, anchor, slack, interior));

    const HybridSurrogate hs = hybrid_surrogate(sc, anchor, 1e-6);
    const QuadSubproblem qp = build_quad_subproblem(sc, hs);

    SplitQpOptions opts;
    opts.tol = 1e-9;
    opts.max_iters = 200000;
    const QuadSolve via_barrier =
        solve_quad_subproblem(qp, opts, &anchor, &interior);
    const QuadSolve via_split = solve_quad_subproblem(qp, opts, &anchor, nullptr);

    const double f_barrier =
        qp.quadratic_value(stack_tuple(via_barrier.covariances));
    const double f_split = qp.quadratic_value(stack_tuple(via_split.covariances));
    EXPECT_NEAR(f_barrier, f_split, 1e-4 * std::max(1.0, std::abs(f_split)));
    EXPECT_GE(via_barrier.power_dual, -1e-10);
  }
}

TEST(SolveHybrid, MonotoneFeasibleTraceAndActivity) {
  std::mt19937_64 rng(75);
  for (int trial = 0; trial < 3; ++trial) {
    Scenario sc = scenario_with_floors(rng(), 4, 2, 2, 0.75);
    HybridSolverOptions opts;
    const HybridResult res = solve_hybrid(sc, opts);
    EXPECT_TRUE(res.trace.converged);

    double prev = -1e300;
    const double slack_budget = 1e-9 + 10.0 * opts.inner_tol;
    for (const IterationRecord& it : res.trace.iterations) {
      EXPECT_GE(it.objective_nats, prev - slack_budget * std::max(1.0, std::abs(prev)));
      EXPECT_LE(it.power, sc.total_power + 1e-8);
      for (int j = 0; j < sc.num_harvest; ++j) {
        EXPECT_GE(it.harvests[j], sc.harvest_targets[j] - 1e-7 * std::max(1.0, sc.harvest_targets[j]));
      }
      prev = it.objective_nats;
    }
    EXPECT_TRUE(check_feasibility(sc, res.covariances, true, 1e-7).feasible);
    ASSERT_EQ(res.activity.harvest_slacks.size(),
              static_cast<std::size_t>(sc.num_harvest));
    for (int j = 0; j < sc.num_harvest; ++j) {
      EXPECT_GE(res.activity.harvest_duals[j], -1e-9);
      EXPECT_GE(res.activity.harvest_slacks[j], -1e-7);
    }
  }
}

TEST(SolveHybrid, NoFloorsReducesToUnconstrainedRateProblem) {
  // with zero floors the hybrid problem is the weighted sum rate under the
  // power budget alone; compare against the sum solver with zero alphas
  Scenario sc = make_scenario(76, 4, {2, 2}, {2});
  const HybridResult hybrid = solve_hybrid(sc, {});
  Scenario sum_sc = sc;
  sum_sc.harvest_weights = {0.0};
  const SolveResult sum = solve_sum(sum_sc);
  const double a = weighted_sum_rate_nats(sc, hybrid.covariances);
  const double b = weighted_sum_rate_nats(sc, sum.covariances);
  EXPECT_NEAR(a, b, 0.01 * std::max(1.0, std::abs(b)));
}

TEST(SolveHybrid, SingleUserNoHarvestIsWaterFilling) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 3; ++trial) {
    Scenario sc = make_scenario(rng(), 4, {3}, {});
    const HybridResult res = solve_hybrid(sc, {});
    const double expected = oracle_waterfill_capacity_bits(sc.info_channel(0), 1.0);
    EXPECT_NEAR(sum_rate_bits(sc, res.covariances), expected, 1e-3);
  }
}

TEST(SolveHybrid, TightFloorsNearTheSlackCeilingStillSolve) {
  // floors at 99% of the maximal uniform slack: the sliver regime that the
  // interior-point subproblem path exists for
  Scenario sc = scenario_with_floors(78, 4, 2, 2, 0.01);
  const FeasibilityCertificate cert = max_harvest_slack(sc);
  for (int j = 0; j < sc.num_harvest; ++j) {
    sc.harvest_targets[j] += 0.99 * cert.max_slack;
  }
  const HybridResult res = solve_hybrid(sc, {});
  EXPECT_TRUE(check_feasibility(sc, res.covariances, true, 1e-7).feasible);
  double prev = -1e300;
  for (const IterationRecord& it : res.trace.iterations) {
    EXPECT_GE(it.objective_nats, prev - 1e-6 * std::max(1.0, std::abs(prev)));
    prev = it.objective_nats;
  }
}

TEST(SolveHybrid, WarmStartSpeedsConvergence) {
  Scenario sc = scenario_with_floors(79, 4, 2, 2, 0.7);
  const HybridResult cold = solve_hybrid(sc, {});
  const HybridResult warm = solve_hybrid(sc, {}, &cold.covariances);
  EXPECT_LE(warm.trace.iterations.size(), cold.trace.iterations.size());
  const double a = cold.trace.iterations.back().objective_nats;
  const double b = warm.trace.iterations.back().objective_nats;
  EXPECT_NEAR(a, b, 1e-4 * std::max(1.0, std::abs(a)));
}

}  // namespace
}  // namespace swipt
