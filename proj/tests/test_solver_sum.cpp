#include "swipt/solver_sum.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"

namespace swipt {
namespace {

using test::oracle_min_eigenvalue;
using test::oracle_waterfill_capacity_bits;
using test::random_psd;

TEST(WaterfillMu, SatisfiesPowerEquationWhenPositive) {
  std::mt19937_64 rng(61);
  std::uniform_real_distribution<double> u(0.1, 4.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<RealVector> levels;
    double top = 0.0;
    for (int i = 0; i < 3; ++i) {
      RealVector v(3);
      for (int k = 0; k < 3; ++k) {
        v(k) = u(rng);
        top = std::max(top, v(k));
      }
      levels.push_back(v);
    }
    const double target = 0.5;  // small enough that the cap binds
    const double mu = waterfill_mu(levels, target);
    ASSERT_GT(mu, 0.0);
    double mass = 0.0;
    for (const RealVector& v : levels) {
      for (int k = 0; k < 3; ++k) mass += std::max(0.0, v(k) - mu);
    }
    EXPECT_NEAR(mass, target, 1e-8 * target);
  }
}

TEST(WaterfillMu, ZeroWhenBudgetIsSlack) {
  RealVector v(2);
  v << 1.0, 0.5;
  const double mu = waterfill_mu({v}, 100.0);
  EXPECT_EQ(mu, 0.0);
  EXPECT_THROW(waterfill_mu({}, 1.0), std::invalid_argument);
  EXPECT_THROW(waterfill_mu({v}, 0.0), std::invalid_argument);
}

TEST(MmSumStep, AscendsAndStaysFeasible) {
  std::mt19937_64 rng(62);
  for (int trial = 0; trial < 10; ++trial) {
    Scenario sc = make_scenario(rng(), 4, {2, 2}, {2});
    sc.harvest_weights = {1.0};
    CovarianceTuple s = scaled_identity_tuple(sc);
    double prev = weighted_rate_harvest_objective_nats(sc, s);
    for (int k = 0; k < 5; ++k) {
      auto [next, mu] = mm_sum_step(sc, s);
      const double now = weighted_rate_harvest_objective_nats(sc, next);
      EXPECT_GE(now, prev - 1e-9 * std::max(1.0, std::abs(prev)));
      EXPECT_LE(total_transmit_power(next), sc.total_power + 1e-8);
      EXPECT_GE(mu, 0.0);
      for (const ComplexMatrix& m : next) {
        EXPECT_GE(oracle_min_eigenvalue(hermitian_part(m)), -1e-9);
      }
      s = std::move(next);
      prev = now;
    }
  }
}

TEST(ProjectPowerPsd, ClipsAndCaps) {
  std::mt19937_64 rng(63);
  CovarianceTuple s{random_psd(rng, 3, 3.0), random_psd(rng, 3, 3.0)};
  double shift = 0.0;
  const CovarianceTuple p = project_power_psd(s, 1.0, &shift);
  EXPECT_LE(total_transmit_power(p), 1.0 + 1e-9);
  EXPECT_GE(shift, 0.0);
  for (const ComplexMatrix& m : p) {
    EXPECT_GE(oracle_min_eigenvalue(hermitian_part(m)), -1e-10);
  }
  // projecting a feasible tuple is the identity
  CovarianceTuple inside{ComplexMatrix(0.1 * ComplexMatrix::Identity(3, 3))};
  const CovarianceTuple q = project_power_psd(inside, 1.0);
  EXPECT_LE((q[0] - inside[0]).norm(), 1e-10);
}

TEST(SolveSum, MonotoneTraceFullPowerAndConvergence) {
  std::mt19937_64 rng(64);
  for (int trial = 0; trial < 5; ++trial) {
    Scenario sc = make_scenario(rng(), 4, {2, 2}, {2, 2});
    sc.harvest_weights = {1.0, 3.0};
    const SolveResult res = solve_sum(sc);
    EXPECT_TRUE(res.trace.converged);
    ASSERT_GE(res.trace.iterations.size(), 2u);
    double prev = -1e300;
    for (const IterationRecord& it : res.trace.iterations) {
      EXPECT_GE(it.objective_nats, prev - 1e-9 * std::max(1.0, std::abs(prev)));
      EXPECT_LE(it.power, sc.total_power + 1e-8);
      prev = it.objective_nats;
    }
    // the harvest term grows with power, so the budget is spent completely
    EXPECT_NEAR(res.trace.iterations.back().power, sc.total_power, 1e-6);
  }
}

TEST(SolveSum, SingleUserNoHarvestIsWaterFilling) {
  std::mt19937_64 rng(65);
  for (int trial = 0; trial < 5; ++trial) {
    Scenario sc = make_scenario(rng(), 4, {3}, {});
    const SolveResult res = solve_sum(sc);
    const double expected = oracle_waterfill_capacity_bits(sc.info_channel(0), 1.0);
    EXPECT_NEAR(sum_rate_bits(sc, res.covariances), expected, 1e-3);
  }
}

TEST(SolveSum, HarvestOnlyPutsPowerOnTopEigenvector) {
  // zero rate weights: the objective is linear, and the optimum puts the
  // whole budget on the top eigenvector of the weighted harvest gram
  Scenario sc = make_scenario(66, 4, {2}, {2});
  sc.rate_weights = {0.0};
  sc.harvest_weights = {2.0};
  const SolveResult res = solve_sum(sc);
  const ComplexMatrix& h = sc.harvest_channel(0);
  const double top = test::oracle_max_eigenvalue(
      ComplexMatrix(2.0 * h.adjoint() * h));
  const double expected = sc.total_power * top;
  EXPECT_NEAR(res.trace.iterations.back().objective_nats, expected,
              1e-6 * std::max(1.0, expected));
}

TEST(SolveSum, WarmStartAndDeterminism) {
  Scenario sc = make_scenario(67, 4, {2, 2}, {2});
  sc.harvest_weights = {1.0};
  const SolveResult a = solve_sum(sc);
  const SolveResult b = solve_sum(sc);
  ASSERT_EQ(a.trace.iterations.size(), b.trace.iterations.size());
  for (std::size_t k = 0; k < a.trace.iterations.size(); ++k) {
    EXPECT_EQ(a.trace.iterations[k].objective_nats,
              b.trace.iterations[k].objective_nats);
  }
  const CovarianceTuple warm = a.covariances;
  const SolveResult c = solve_sum(sc, {}, &warm);
  EXPECT_LE(c.trace.iterations.size(), a.trace.iterations.size());
  EXPECT_GE(c.trace.iterations.back().objective_nats,
            a.trace.iterations.back().objective_nats -
                1e-8 * std::max(1.0, std::abs(a.trace.iterations.back().objective_nats)));
}

}  // namespace
}  // namespace swipt
