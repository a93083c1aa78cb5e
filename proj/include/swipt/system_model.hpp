#pragma once

#include "swipt/matrix_kernel.hpp"

#include <cstdint>
#include <vector>

namespace swipt {

// One transmit covariance per information user, each n_tx x n_tx Hermitian
// PSD (eigenvalues >= -1e-9 tolerated as round-off).
using CovarianceTuple = std::vector<ComplexMatrix>;

// Downlink with one multi-antenna transmitter and K receivers. Users are
// indexed info users first (0..num_info-1), then energy-harvesting users
// (num_info..num_info+num_harvest-1). Channel k maps transmit antennas to
// user k's receive antennas.
struct ChannelSet {
  int n_tx = 0;
  std::vector<ComplexMatrix> channels;

  int user_count() const { return static_cast<int>(channels.size()); }
  Index rx_antennas(int k) const { return channels.at(k).rows(); }
};

// Scenario = channel realization plus the objective/constraint data. Harvest
// targets are the effective minima already divided by the rectifier
// efficiencies, so solvers never see the efficiencies themselves.
struct Scenario {
  ChannelSet channels;
  int num_info = 0;
  int num_harvest = 0;

  double total_power = 1.0;
  std::vector<double> rate_weights;      // one per info user, >= 0
  std::vector<double> harvest_weights;   // one per harvest user (weighted-sum objective)
  std::vector<double> harvest_targets;   // one per harvest user (constrained objective)
  std::vector<double> efficiencies;      // rectifier efficiencies, reporting only
  std::uint64_t seed = 0;

  const ComplexMatrix& info_channel(int i) const { return channels.channels.at(i); }
  const ComplexMatrix& harvest_channel(int j) const {
    return channels.channels.at(num_info + j);
  }
  Index n_tx() const { return channels.n_tx; }

  // Throws std::invalid_argument on inconsistent sizes, negative weights,
  // or non-positive power budget.
  void validate() const;
};

// i.i.d. circularly symmetric unit-variance complex Gaussian entries, then
// channel k is multiplied by norm_scales[k]. Deterministic for a fixed seed.
ChannelSet generate_channels(std::uint64_t seed, int n_tx,
                             const std::vector<Index>& rx_antennas,
                             const std::vector<double>& norm_scales);

// Convenience builder used by the CLI and tests: draws channels from the
// seed and fills defaults (unit weights/efficiencies, empty targets).
Scenario make_scenario(std::uint64_t seed, int n_tx,
                       const std::vector<Index>& info_rx,
                       const std::vector<Index>& harvest_rx,
                       double total_power = 1.0,
                       const std::vector<double>& norm_scales = {});

ComplexMatrix covariance_sum(const CovarianceTuple& s);

// Sum of traces across the tuple (transmit power).
double total_transmit_power(const CovarianceTuple& s);

// Noise-plus-interference covariance seen by info user i: identity plus the
// channel-compressed sum of every other user's covariance. Its eigenvalues
// are always >= 1. Throws std::out_of_range for a non-info index.
ComplexMatrix interference_covariance(const Scenario& sc, const CovarianceTuple& s, int i);

// Achievable rate of info user i. Bits per channel use.
// Throws std::invalid_argument if S_i is non-PSD beyond tolerance.
double user_rate(const Scenario& sc, const CovarianceTuple& s, int i);

// Same quantity in nats; the solvers work in nats throughout and convert at
// the reporting boundary.
double user_rate_nats(const Scenario& sc, const CovarianceTuple& s, int i);

// RF power collected by harvest user j (unit noise power normalization).
double harvested_power(const Scenario& sc, const CovarianceTuple& s, int j);

// sum_i rate_weights[i] * rate_i, in nats.
double weighted_sum_rate_nats(const Scenario& sc, const CovarianceTuple& s);

// weighted_sum_rate_nats plus sum_j harvest_weights[j] * harvested_power_j.
double weighted_rate_harvest_objective_nats(const Scenario& sc, const CovarianceTuple& s);

// Unweighted sum rate in bits, for reporting.
double sum_rate_bits(const Scenario& sc, const CovarianceTuple& s);

struct FeasibilityReport {
  bool feasible = true;
  double power_excess = 0.0;               // max(0, total power - budget)
  double min_eigenvalue = 0.0;             // most negative eigenvalue across the tuple
  std::vector<double> harvest_shortfalls;  // max(0, target_j - harvested_j)
};

// Power + PSD (+ harvest targets when check_harvest) within tol.
FeasibilityReport check_feasibility(const Scenario& sc, const CovarianceTuple& s,
                                    bool check_harvest, double tol = 1e-8);

// Factor B with S = B B^H, columns spanning the numerical range of S:
// eigenvalues below rank_tol * max(1, largest) are dropped.
ComplexMatrix recover_precoder(const ComplexMatrix& s, double rank_tol = 1e-9);

// Scaled-identity tuple: every info user gets (power / (N * n_tx)) I, so the
// power budget is met with equality.
CovarianceTuple scaled_identity_tuple(const Scenario& sc);

}  // namespace swipt
