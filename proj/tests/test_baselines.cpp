#include "swipt/baselines.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "swipt/solver_sum.hpp"

namespace swipt {
namespace {

using test::central_difference;
using test::oracle_min_eigenvalue;
using test::oracle_waterfill_capacity_bits;
using test::random_hermitian;
using test::random_psd;

Scenario floored_scenario(std::uint64_t seed, double fraction) {
  Scenario sc = make_scenario(seed, 4, {2, 2}, {2});
  const CovarianceTuple id = scaled_identity_tuple(sc);
  sc.harvest_targets[0] = fraction * harvested_power(sc, id, 0);
  return sc;
}

CovarianceTuple random_direction(std::mt19937_64& rng, const Scenario& sc) {
  CovarianceTuple d;
  double norm_sq = 0.0;
  for (int i = 0; i < sc.num_info; ++i) {
    d.push_back(random_hermitian(rng, sc.n_tx()));
    norm_sq += d.back().squaredNorm();
  }
  const double inv = 1.0 / std::sqrt(norm_sq);
  for (ComplexMatrix& m : d) m *= inv;
  return d;
}

TEST(ObjectiveGradient, MatchesCentralDifferencesBothForms) {
  std::mt19937_64 rng(81);
  for (Formulation form : {Formulation::kSum, Formulation::kHybrid}) {
    for (int trial = 0; trial < 10; ++trial) {
      Scenario sc = make_scenario(rng(), 4, {2, 2}, {2});
      sc.harvest_weights = {1.5};
      CovarianceTuple s{random_psd(rng, 4, 0.4), random_psd(rng, 4, 0.4)};
      const CovarianceTuple g = objective_gradient(sc, s, form);
      const CovarianceTuple d = random_direction(rng, sc);
      double pairing = 0.0;
      for (int i = 0; i < sc.num_info; ++i) {
        pairing += real_trace_product(g[i], d[i]);
      }
      const double fd = central_difference(
          [&](double t) {
            CovarianceTuple moved = s;
            for (int i = 0; i < sc.num_info; ++i) moved[i] += t * d[i];
            return objective_nats(sc, moved, form);
          },
          1e-6);
      EXPECT_NEAR(pairing, fd, 1e-5 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST(ProjectFeasible, HybridOutputsFeasibleFixedPoints) {
  std::mt19937_64 rng(82);
  Scenario sc = floored_scenario(83, 0.8);
  ProjectionState st = make_projection_state(sc);
  EXPECT_FALSE(st.interior.empty());

  CovarianceTuple wild{random_hermitian(rng, 4, 2.0), random_hermitian(rng, 4, 2.0)};
  const CovarianceTuple p = project_feasible(sc, wild, Formulation::kHybrid, &st);
  EXPECT_TRUE(check_feasibility(sc, p, true, 1e-6).feasible);

  // projecting the projection moves (almost) nothing
  const CovarianceTuple q = project_feasible(sc, p, Formulation::kHybrid, &st);
  double dist = 0.0, norm = 0.0;
  for (int i = 0; i < sc.num_info; ++i) {
    dist += (q[i] - p[i]).squaredNorm();
    norm += p[i].squaredNorm();
  }
  EXPECT_LE(std::sqrt(dist), 1e-4 * std::max(1.0, std::sqrt(norm)));
}

TEST(ProjectFeasible, BarrierAndSplittingPathsAgree) {
  std::mt19937_64 rng(84);
  Scenario sc = floored_scenario(85, 0.7);
  ProjectionState with_interior = make_projection_state(sc);
  ASSERT_FALSE(with_interior.interior.empty());
  ProjectionState splitting_only = with_interior;
  splitting_only.interior.clear();

  for (int trial = 0; trial < 3; ++trial) {
    CovarianceTuple x{random_hermitian(rng, 4, 1.0), random_hermitian(rng, 4, 1.0)};
    const CovarianceTuple a = project_feasible(sc, x, Formulation::kHybrid, &with_interior);
    const CovarianceTuple b = project_feasible(sc, x, Formulation::kHybrid, &splitting_only);
    double dist = 0.0;
    for (int i = 0; i < sc.num_info; ++i) dist += (a[i] - b[i]).squaredNorm();
    EXPECT_LE(std::sqrt(dist), 1e-4);
  }
}

TEST(ProjectedGradient, SingleUserSumIsWaterFilling) {
  std::mt19937_64 rng(86);
  for (int trial = 0; trial < 3; ++trial) {
    Scenario sc = make_scenario(rng(), 4, {3}, {});
    GradientOptions opts;
    opts.formulation = Formulation::kSum;
    const SolveResult res = solve_projected_gradient(sc, opts);
    const double expected = oracle_waterfill_capacity_bits(sc.info_channel(0), 1.0);
    EXPECT_NEAR(sum_rate_bits(sc, res.covariances), expected, 1e-3);
  }
}

TEST(ProjectedGradient, BothInitsAscendAndStampSolverIds) {
  Scenario sc = make_scenario(87, 4, {2, 2}, {2});
  sc.harvest_weights = {2.0};
  for (GradientInit init : {GradientInit::kIdentity, GradientInit::kAllOnes}) {
    GradientOptions opts;
    opts.formulation = Formulation::kSum;
    opts.init = init;
    const SolveResult res = solve_projected_gradient(sc, opts);
    const std::string expected_id = init == GradientInit::kIdentity
                                        ? "grad-sum-identity"
                                        : "grad-sum-ones";
    EXPECT_EQ(res.trace.solver, expected_id);
    double prev = -1e300;
    for (const IterationRecord& it : res.trace.iterations) {
      EXPECT_GE(it.objective_nats, prev - 1e-9 * std::max(1.0, std::abs(prev)));
      prev = it.objective_nats;
    }
  }
}

TEST(ProjectedGradient, HybridIteratesStayFeasible) {
  Scenario sc = floored_scenario(88, 0.75);
  GradientOptions opts;
  opts.formulation = Formulation::kHybrid;
  const SolveResult res = solve_projected_gradient(sc, opts);
  for (const IterationRecord& it : res.trace.iterations) {
    EXPECT_LE(it.power, sc.total_power + 1e-6);
    EXPECT_GE(it.harvests[0], sc.harvest_targets[0] - 1e-6);
  }
  EXPECT_TRUE(check_feasibility(sc, res.covariances, true, 1e-6).feasible);
}

TEST(MmLinear, MonotoneTracesBothForms) {
  for (Formulation form : {Formulation::kSum, Formulation::kHybrid}) {
    Scenario sc = floored_scenario(89, form == Formulation::kHybrid ? 0.7 : 0.0);
    sc.harvest_weights = {1.0};
    MmLinearOptions opts;
    opts.formulation = form;
    const SolveResult res = solve_mm_linear(sc, opts);
    EXPECT_EQ(res.trace.solver,
              form == Formulation::kSum ? "mml-sum" : "mml-hybrid");
    double prev = -1e300;
    for (const IterationRecord& it : res.trace.iterations) {
      EXPECT_GE(it.objective_nats, prev - 1e-6 * std::max(1.0, std::abs(prev)));
      prev = it.objective_nats;
    }
    EXPECT_TRUE(check_feasibility(sc, res.covariances,
                                  form == Formulation::kHybrid, 1e-6)
                    .feasible);
  }
}

TEST(MmLinear, SingleUserReducesToWaterFilling) {
  Scenario sc = make_scenario(90, 4, {3}, {});
  MmLinearOptions opts;
  opts.formulation = Formulation::kSum;
  const SolveResult res = solve_mm_linear(sc, opts);
  const double expected = oracle_waterfill_capacity_bits(sc.info_channel(0), 1.0);
  EXPECT_NEAR(sum_rate_bits(sc, res.covariances), expected, 1e-3);
}

TEST(BlockDiagonalization, RejectsInsufficientAntennas) {
  // with two transmit antennas, a 2-antenna peer's channel already spans the
  // whole space, leaving no null dimensions to signal in
  Scenario sc = make_scenario(91, 2, {2, 2}, {});
  EXPECT_THROW(solve_block_diagonalization(sc, {}), BdDimensionError);
}

TEST(BlockDiagonalization, CancelsInterUserInterference) {
  Scenario sc = make_scenario(92, 4, {2, 2}, {2});
  const SolveResult res = solve_block_diagonalization(sc, {});
  const CovarianceTuple& s = res.covariances;
  for (int i = 0; i < 2; ++i) {
    const ComplexMatrix& other = sc.info_channel(1 - i);
    EXPECT_LE((other * s[i] * other.adjoint()).norm(), 1e-9);
    EXPECT_GE(oracle_min_eigenvalue(hermitian_part(s[i])), -1e-9);
  }
  EXPECT_LE(total_transmit_power(s), sc.total_power + 1e-8);
}

TEST(BlockDiagonalization, OrthogonalChannelsMatchUnconstrainedOptimum) {
  // construct two users whose row spaces are orthogonal complements: BD's
  // null-space restriction then costs nothing
  Scenario sc = make_scenario(93, 4, {2, 2}, {});
  // replace user 2's rows with an orthonormal basis of user 1's null space
  const ComplexMatrix basis = null_space_basis(sc.info_channel(0));
  sc.channels.channels[1] = basis.adjoint();

  const SolveResult bd = solve_block_diagonalization(sc, {});
  const SolveResult mm = solve_sum(sc);
  EXPECT_NEAR(sum_rate_bits(sc, bd.covariances), sum_rate_bits(sc, mm.covariances),
              1e-3);
}

TEST(BlockDiagonalization, FlooredVariantStaysFeasibleAndBelowMm) {
  Scenario sc = floored_scenario(94, 0.3);
  const SolveResult bd = solve_block_diagonalization(sc, {});
  EXPECT_TRUE(check_feasibility(sc, bd.covariances, true, 1e-6).feasible);
  const HybridResult mm = solve_hybrid(sc, {});
  EXPECT_GE(weighted_sum_rate_nats(sc, mm.covariances),
            weighted_sum_rate_nats(sc, bd.covariances) - 1e-6);
}

TEST(BlockDiagonalization, InfeasibleRestrictedFloorsThrow) {
  Scenario sc = floored_scenario(95, 0.3);
  sc.harvest_targets[0] = 100.0;  // unattainable inside the null spaces
  EXPECT_THROW(solve_block_diagonalization(sc, {}), InfeasibleError);
}

TEST(BestAscentGain, NearZeroAtOptimumPositiveElsewhere) {
  Scenario sc = make_scenario(96, 4, {2, 2}, {2});
  sc.harvest_weights = {1.0};
  const SolveResult opt = solve_sum(sc);
  const double at_opt =
      best_ascent_gain(sc, opt.covariances, Formulation::kSum, 1e-3, 20, 5);
  EXPECT_LE(at_opt, 1e-4);
  const double at_start = best_ascent_gain(sc, scaled_identity_tuple(sc),
                                           Formulation::kSum, 1e-3, 20, 5);
  EXPECT_GT(at_start, at_opt);
}

}  // namespace
}  // namespace swipt
