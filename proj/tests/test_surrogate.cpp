#include "swipt/surrogate.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"

namespace swipt {
namespace {

using test::central_difference;
using test::oracle_sigma_max;
using test::random_hermitian;
using test::random_psd;

Scenario random_scenario(std::mt19937_64& rng, int max_tx = 4) {
  std::uniform_int_distribution<int> tx_dist(2, max_tx);
  const int n_tx = tx_dist(rng);
  std::uniform_int_distribution<int> n_dist(1, 3);
  const int num_info = n_dist(rng);
  std::uniform_int_distribution<int> m_dist(0, 2);
  const int num_harvest = m_dist(rng);
  std::vector<Index> info_rx(num_info, 2);
  std::vector<Index> harvest_rx(num_harvest, 2);
  Scenario sc = make_scenario(rng(), n_tx, info_rx, harvest_rx, 1.0);
  std::uniform_real_distribution<double> w_dist(0.25, 2.0);
  for (double& w : sc.rate_weights) w = w_dist(rng);
  for (double& a : sc.harvest_weights) a = w_dist(rng);
  return sc;
}

CovarianceTuple random_tuple(std::mt19937_64& rng, const Scenario& sc, double scale) {
  CovarianceTuple s;
  for (int i = 0; i < sc.num_info; ++i) {
    s.push_back(random_psd(rng, sc.n_tx(), scale));
  }
  return s;
}

CovarianceTuple random_hermitian_direction(std::mt19937_64& rng, const Scenario& sc) {
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

CovarianceTuple shifted(const CovarianceTuple& s, const CovarianceTuple& d, double t) {
  CovarianceTuple out = s;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += t * d[i];
  return out;
}

TEST(SignalCurvature, HalfFourthPowerOfTopSingularValue) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 10; ++trial) {
    const ComplexMatrix h = test::random_gaussian(rng, 2, 4);
    const double smax = oracle_sigma_max(h);
    EXPECT_NEAR(signal_curvature(h), 0.5 * smax * smax * smax * smax,
                1e-8 * std::max(1.0, smax));
  }
}

TEST(DecoupledCurvature, ScalesWithUserCountSquared) {
  std::mt19937_64 rng(42);
  const ComplexMatrix h = test::random_gaussian(rng, 2, 4);
  for (int n : {1, 2, 3}) {
    EXPECT_NEAR(decoupled_curvature(h, n),
                static_cast<double>(n) * n * signal_curvature(h), 1e-12);
  }
}

TEST(HybridSurrogate, TangentMinorantWithMatchingSlope) {
  std::mt19937_64 rng(43);
  int fd_checks = 0;
  for (int trial = 0; trial < 40; ++trial) {
    Scenario sc = random_scenario(rng);
    const CovarianceTuple s0 = random_tuple(rng, sc, 0.5);
    const HybridSurrogate hs = hybrid_surrogate(sc, s0, 1e-6);

    const double f0 = weighted_sum_rate_nats(sc, s0);
    EXPECT_NEAR(hs.value(sc, s0), f0, 1e-9 * std::max(1.0, std::abs(f0)));

    for (int probe = 0; probe < 5; ++probe) {
      const CovarianceTuple s = random_tuple(rng, sc, 0.5);
      const double truth = weighted_sum_rate_nats(sc, s);
      EXPECT_LE(hs.value(sc, s), truth + 1e-9 * std::max(1.0, std::abs(truth)));
    }

    if (trial % 4 == 0) {
      const CovarianceTuple dir = random_hermitian_direction(rng, sc);
      const double analytic = central_difference(
          [&](double t) { return hs.value(sc, shifted(s0, dir, t)); }, 1e-6);
      const double truth_slope = central_difference(
          [&](double t) { return weighted_sum_rate_nats(sc, shifted(s0, dir, t)); },
          1e-6);
      EXPECT_NEAR(analytic, truth_slope,
                  1e-5 * std::max(1.0, std::abs(truth_slope)));
      ++fd_checks;
    }
  }
  EXPECT_GE(fd_checks, 10);
}

TEST(SumSurrogate, TangentMinorantWithMatchingSlope) {
  std::mt19937_64 rng(44);
  for (int trial = 0; trial < 40; ++trial) {
    Scenario sc = random_scenario(rng);
    const CovarianceTuple s0 = random_tuple(rng, sc, 0.5);
    const SumSurrogate ss = sum_surrogate(sc, s0);

    const double f0 = weighted_rate_harvest_objective_nats(sc, s0);
    EXPECT_NEAR(ss.value(s0), f0, 1e-9 * std::max(1.0, std::abs(f0)));

    for (int probe = 0; probe < 5; ++probe) {
      const CovarianceTuple s = random_tuple(rng, sc, 0.5);
      const double truth = weighted_rate_harvest_objective_nats(sc, s);
      EXPECT_LE(ss.value(s), truth + 1e-9 * std::max(1.0, std::abs(truth)));
    }

    if (trial % 4 == 0) {
      const CovarianceTuple dir = random_hermitian_direction(rng, sc);
      const double surrogate_slope = central_difference(
          [&](double t) { return ss.value(shifted(s0, dir, t)); }, 1e-6);
      const double truth_slope = central_difference(
          [&](double t) {
            return weighted_rate_harvest_objective_nats(sc, shifted(s0, dir, t));
          },
          1e-6);
      EXPECT_NEAR(surrogate_slope, truth_slope,
                  1e-5 * std::max(1.0, std::abs(truth_slope)));
    }
  }
}

TEST(LinearInterferenceBound, UpperBoundsTheSubtractedTerm) {
  std::mt19937_64 rng(45);
  for (int trial = 0; trial < 20; ++trial) {
    Scenario sc = random_scenario(rng);
    if (sc.num_info < 2) continue;
    const CovarianceTuple s0 = random_tuple(rng, sc, 0.5);
    const InterferenceBound ib = linear_interference_bound(sc, s0, 0);

    // exact at the expansion point
    const ComplexMatrix omega0 = interference_covariance(sc, s0, 0);
    const ComplexMatrix total0 = covariance_sum(s0);
    const double at0 =
        real_trace_product(ib.price, total0 - s0[0]) + ib.offset;
    EXPECT_NEAR(at0, logdet_hpd(omega0), 1e-9 * std::max(1.0, std::abs(at0)));

    // linearization of a concave function stays above it everywhere
    for (int probe = 0; probe < 5; ++probe) {
      const CovarianceTuple s = random_tuple(rng, sc, 0.5);
      const ComplexMatrix omega = interference_covariance(sc, s, 0);
      const ComplexMatrix total = covariance_sum(s);
      const double lin = real_trace_product(ib.price, total - s[0]) + ib.offset;
      EXPECT_GE(lin, logdet_hpd(omega) - 1e-9);
    }
  }
}

TEST(QuadSubproblem, VectorizedFormMatchesSurrogate) {
  std::mt19937_64 rng(46);
  for (int trial = 0; trial < 10; ++trial) {
    Scenario sc = random_scenario(rng);
    const CovarianceTuple s0 = random_tuple(rng, sc, 0.5);
    const HybridSurrogate hs = hybrid_surrogate(sc, s0, 1e-6);
    const QuadSubproblem qp = build_quad_subproblem(sc, hs);
    for (int probe = 0; probe < 5; ++probe) {
      const CovarianceTuple s = random_tuple(rng, sc, 0.5);
      const double via_qp = qp.quadratic_value(stack_tuple(s)) + qp.constant;
      const double via_surrogate = hs.value(sc, s);
      EXPECT_NEAR(via_qp, via_surrogate,
                  1e-9 * std::max(1.0, std::abs(via_surrogate)));
    }
  }
}

TEST(QuadSubproblem, CurvatureMatrixMatchesQuadraticValue) {
  std::mt19937_64 rng(47);
  Scenario sc = random_scenario(rng);
  const CovarianceTuple s0 = random_tuple(rng, sc, 0.5);
  const HybridSurrogate hs = hybrid_surrogate(sc, s0, 1e-6);
  const QuadSubproblem qp = build_quad_subproblem(sc, hs);
  const ComplexMatrix big = qp.curvature_matrix();
  for (int probe = 0; probe < 5; ++probe) {
    const ComplexVector x = stack_tuple(random_tuple(rng, sc, 0.5));
    const double via_matrix =
        -std::real(Complex(x.dot(big * x))) + 2.0 * qp.linear.dot(x).real();
    EXPECT_NEAR(via_matrix, qp.quadratic_value(x),
                1e-9 * std::max(1.0, std::abs(via_matrix)));
  }
}

TEST(HybridSurrogate, RejectsMismatchedTuple) {
  std::mt19937_64 rng(48);
  Scenario sc = make_scenario(rng(), 4, {2, 2}, {2});
  CovarianceTuple wrong{random_psd(rng, 4)};
  EXPECT_THROW(hybrid_surrogate(sc, wrong, 1e-6), std::invalid_argument);
  EXPECT_THROW(sum_surrogate(sc, wrong), std::invalid_argument);
}

}  // namespace
}  // namespace swipt
