#include "swipt/system_model.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <random>
#include <string>

namespace swipt {

namespace {

constexpr double kLn2 = 0.6931471805599453;

// Uniform (0,1) from the top 53 bits, offset so 0 and 1 are unreachable.
double uniform_open(std::mt19937_64& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
}

// One CN(0,1) draw: independent real and imaginary parts of variance 1/2.
Complex complex_gaussian(std::mt19937_64& rng) {
  const double u1 = uniform_open(rng);
  const double u2 = uniform_open(rng);
  const double r = std::sqrt(-std::log(u1));  // includes the 1/sqrt(2) factor
  return {r * std::cos(2.0 * M_PI * u2), r * std::sin(2.0 * M_PI * u2)};
}

void require_info_index(const Scenario& sc, int i, const char* who) {
  if (i < 0 || i >= sc.num_info) {
    throw std::out_of_range(std::string(who) + ": info user index " + std::to_string(i) +
                            " outside [0, " + std::to_string(sc.num_info) + ")");
  }
}

void require_psd_tuple_entry(const ComplexMatrix& s_i, int i) {
  const double scale = std::max(1.0, s_i.cwiseAbs().maxCoeff());
  const double tol = 1e-9 * scale;
  for (Index k = 0; k < s_i.rows(); ++k) {
    if (s_i(k, k).real() < -tol) {
      throw std::invalid_argument("covariance " + std::to_string(i) +
                                  " has negative diagonal entry");
    }
  }
  Eigen::LLT<ComplexMatrix> llt(hermitian_part(s_i) +
                                tol * ComplexMatrix::Identity(s_i.rows(), s_i.cols()));
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument("covariance " + std::to_string(i) +
                                " is not positive semidefinite within tolerance");
  }
}

}  // namespace

void Scenario::validate() const {
  if (channels.n_tx <= 0) throw std::invalid_argument("scenario: need at least one transmit antenna");
  if (num_info <= 0) throw std::invalid_argument("scenario: need at least one info user");
  if (num_harvest < 0) throw std::invalid_argument("scenario: negative harvest user count");
  if (channels.user_count() != num_info + num_harvest) {
    throw std::invalid_argument("scenario: channel count does not match user partition");
  }
  for (int k = 0; k < channels.user_count(); ++k) {
    const ComplexMatrix& h = channels.channels[k];
    if (h.cols() != channels.n_tx || h.rows() < 1) {
      throw std::invalid_argument("scenario: channel " + std::to_string(k) +
                                  " has inconsistent dimensions");
    }
  }
  if (total_power <= 0.0) throw std::invalid_argument("scenario: power budget must be positive");
  if (static_cast<int>(rate_weights.size()) != num_info) {
    throw std::invalid_argument("scenario: rate weight count does not match info users");
  }
  for (double w : rate_weights) {
    if (w < 0.0 || !std::isfinite(w)) throw std::invalid_argument("scenario: invalid rate weight");
  }
  if (!harvest_weights.empty() && static_cast<int>(harvest_weights.size()) != num_harvest) {
    throw std::invalid_argument("scenario: harvest weight count does not match harvest users");
  }
  if (!harvest_targets.empty() && static_cast<int>(harvest_targets.size()) != num_harvest) {
    throw std::invalid_argument("scenario: harvest target count does not match harvest users");
  }
  for (double a : harvest_weights) {
    if (a < 0.0 || !std::isfinite(a)) throw std::invalid_argument("scenario: invalid harvest weight");
  }
  for (double q : harvest_targets) {
    if (!std::isfinite(q)) throw std::invalid_argument("scenario: invalid harvest target");
  }
  if (!efficiencies.empty() && static_cast<int>(efficiencies.size()) != num_harvest) {
    throw std::invalid_argument("scenario: efficiency count does not match harvest users");
  }
}

ChannelSet generate_channels(std::uint64_t seed, int n_tx,
                             const std::vector<Index>& rx_antennas,
                             const std::vector<double>& norm_scales) {
  if (!norm_scales.empty() && norm_scales.size() != rx_antennas.size()) {
    throw std::invalid_argument("generate_channels: scale count does not match user count");
  }
  std::mt19937_64 rng(seed);
  ChannelSet out;
  out.n_tx = n_tx;
  out.channels.reserve(rx_antennas.size());
  for (std::size_t k = 0; k < rx_antennas.size(); ++k) {
    ComplexMatrix h(rx_antennas[k], n_tx);
    for (Index c = 0; c < h.cols(); ++c) {
      for (Index r = 0; r < h.rows(); ++r) {
        h(r, c) = complex_gaussian(rng);
      }
    }
    if (!norm_scales.empty()) h *= norm_scales[k];
    out.channels.push_back(std::move(h));
  }
  return out;
}

Scenario make_scenario(std::uint64_t seed, int n_tx, const std::vector<Index>& info_rx,
                       const std::vector<Index>& harvest_rx, double total_power,
                       const std::vector<double>& norm_scales) {
  std::vector<Index> all_rx = info_rx;
  all_rx.insert(all_rx.end(), harvest_rx.begin(), harvest_rx.end());
  Scenario sc;
  sc.channels = generate_channels(seed, n_tx, all_rx, norm_scales);
  sc.num_info = static_cast<int>(info_rx.size());
  sc.num_harvest = static_cast<int>(harvest_rx.size());
  sc.total_power = total_power;
  sc.rate_weights.assign(info_rx.size(), 1.0);
  sc.harvest_weights.assign(harvest_rx.size(), 0.0);
  sc.harvest_targets.assign(harvest_rx.size(), 0.0);
  sc.efficiencies.assign(harvest_rx.size(), 1.0);
  sc.seed = seed;
  sc.validate();
  return sc;
}

ComplexMatrix covariance_sum(const CovarianceTuple& s) {
  if (s.empty()) throw std::invalid_argument("covariance_sum: empty tuple");
  ComplexMatrix acc = s[0];
  for (std::size_t i = 1; i < s.size(); ++i) acc += s[i];
  return acc;
}

double total_transmit_power(const CovarianceTuple& s) {
  double p = 0.0;
  for (const ComplexMatrix& m : s) p += m.trace().real();
  return p;
}

ComplexMatrix interference_covariance(const Scenario& sc, const CovarianceTuple& s, int i) {
  require_info_index(sc, i, "interference_covariance");
  const ComplexMatrix& h = sc.info_channel(i);
  ComplexMatrix others = covariance_sum(s) - s.at(i);
  return ComplexMatrix::Identity(h.rows(), h.rows()) + h * others * h.adjoint();
}

double user_rate_nats(const Scenario& sc, const CovarianceTuple& s, int i) {
  require_info_index(sc, i, "user_rate");
  require_psd_tuple_entry(s.at(i), i);
  const ComplexMatrix& h = sc.info_channel(i);
  const ComplexMatrix omega = interference_covariance(sc, s, i);
  const ComplexMatrix full = omega + h * s[i] * h.adjoint();
  return logdet_hpd(full) - logdet_hpd(omega);
}

double user_rate(const Scenario& sc, const CovarianceTuple& s, int i) {
  return user_rate_nats(sc, s, i) / kLn2;
}

double harvested_power(const Scenario& sc, const CovarianceTuple& s, int j) {
  if (j < 0 || j >= sc.num_harvest) {
    throw std::out_of_range("harvested_power: harvest user index out of range");
  }
  const ComplexMatrix& h = sc.harvest_channel(j);
  return (h * covariance_sum(s) * h.adjoint()).trace().real();
}

double weighted_sum_rate_nats(const Scenario& sc, const CovarianceTuple& s) {
  double acc = 0.0;
  for (int i = 0; i < sc.num_info; ++i) acc += sc.rate_weights[i] * user_rate_nats(sc, s, i);
  return acc;
}

double weighted_rate_harvest_objective_nats(const Scenario& sc, const CovarianceTuple& s) {
  double acc = weighted_sum_rate_nats(sc, s);
  for (int j = 0; j < sc.num_harvest; ++j) {
    acc += sc.harvest_weights.at(j) * harvested_power(sc, s, j);
  }
  return acc;
}

double sum_rate_bits(const Scenario& sc, const CovarianceTuple& s) {
  double acc = 0.0;
  for (int i = 0; i < sc.num_info; ++i) acc += user_rate_nats(sc, s, i);
  return acc / kLn2;
}

FeasibilityReport check_feasibility(const Scenario& sc, const CovarianceTuple& s,
                                    bool check_harvest, double tol) {
  if (static_cast<int>(s.size()) != sc.num_info) {
    throw std::invalid_argument("check_feasibility: tuple size does not match info users");
  }
  FeasibilityReport rep;
  rep.power_excess = std::max(0.0, total_transmit_power(s) - sc.total_power);
  rep.min_eigenvalue = 0.0;
  for (const ComplexMatrix& m : s) {
    const EigenPair ep = hermitian_evd(hermitian_part(m));
    rep.min_eigenvalue = std::min(rep.min_eigenvalue, ep.eigenvalues(ep.eigenvalues.size() - 1));
  }
  if (check_harvest) {
    for (int j = 0; j < sc.num_harvest; ++j) {
      const double target = sc.harvest_targets.empty() ? 0.0 : sc.harvest_targets[j];
      rep.harvest_shortfalls.push_back(std::max(0.0, target - harvested_power(sc, s, j)));
    }
  }
  rep.feasible = rep.power_excess <= tol && rep.min_eigenvalue >= -tol;
  for (double v : rep.harvest_shortfalls) rep.feasible = rep.feasible && v <= tol;
  return rep;
}

ComplexMatrix recover_precoder(const ComplexMatrix& s, double rank_tol) {
  const EigenPair ep = hermitian_evd(s, 1e-9);
  const double cutoff = rank_tol * std::max(1.0, ep.eigenvalues.size() > 0 ? ep.eigenvalues(0) : 0.0);
  Index rank = 0;
  for (Index k = 0; k < ep.eigenvalues.size(); ++k) {
    if (ep.eigenvalues(k) > cutoff) ++rank;
  }
  ComplexMatrix b(s.rows(), rank);
  for (Index k = 0; k < rank; ++k) {
    b.col(k) = ep.eigenvectors.col(k) * std::sqrt(ep.eigenvalues(k));
  }
  return b;
}

CovarianceTuple scaled_identity_tuple(const Scenario& sc) {
  const double scale = sc.total_power / (sc.num_info * static_cast<double>(sc.n_tx()));
  return CovarianceTuple(sc.num_info, scale * ComplexMatrix::Identity(sc.n_tx(), sc.n_tx()));
}

}  // namespace swipt
