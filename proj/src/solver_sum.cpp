#include "swipt/solver_sum.hpp"

#include <chrono>
#include <cmath>

namespace swipt {

namespace {

constexpr double kLn2 = 0.6931471805599453;

double clipped_mass(const std::vector<RealVector>& eigenvalues, double mu) {
  double acc = 0.0;
  for (const RealVector& w : eigenvalues) {
    acc += (w.array() - mu).cwiseMax(0.0).sum();
  }
  return acc;
}

}  // namespace

IterationRecord make_record(const Scenario& sc, const CovarianceTuple& s, int iter,
                            double time_s, double objective_nats, double multiplier) {
  IterationRecord rec;
  rec.iter = iter;
  rec.time_s = time_s;
  rec.objective_nats = objective_nats;
  rec.sum_rate_bits = 0.0;
  rec.power = total_transmit_power(s);
  rec.multiplier = multiplier;
  for (int i = 0; i < sc.num_info; ++i) {
    rec.rates_bits.push_back(user_rate_nats(sc, s, i) / kLn2);
    rec.sum_rate_bits += rec.rates_bits.back();
  }
  for (int j = 0; j < sc.num_harvest; ++j) {
    rec.harvests.push_back(harvested_power(sc, s, j));
  }
  return rec;
}

double waterfill_mu(const std::vector<RealVector>& eigenvalues, double target,
                    double bracket_tol) {
  if (eigenvalues.empty()) {
    throw std::invalid_argument("waterfill_mu: empty eigenvalue set");
  }
  std::size_t modes = 0;
  double w_max = -std::numeric_limits<double>::infinity();
  for (const RealVector& w : eigenvalues) {
    modes += static_cast<std::size_t>(w.size());
    if (w.size() > 0) w_max = std::max(w_max, w.maxCoeff());
  }
  if (modes == 0) throw std::invalid_argument("waterfill_mu: empty eigenvalue set");
  if (!(target > 0.0)) throw std::invalid_argument("waterfill_mu: target must be positive");

  if (clipped_mass(eigenvalues, 0.0) <= target) return 0.0;

  double lo = 0.0, hi = w_max;
  double mu = 0.5 * hi;
  for (int it = 0; it < 200; ++it) {
    mu = 0.5 * (lo + hi);
    const double mass = clipped_mass(eigenvalues, mu);
    if (mass > target) {
      lo = mu;
    } else {
      hi = mu;
    }
    if (hi - lo <= bracket_tol && std::abs(mass - target) <= 1e-9 * target) break;
  }
  return mu;
}

std::pair<CovarianceTuple, double> mm_sum_step(const Scenario& sc, const CovarianceTuple& s) {
  const SumSurrogate sur = sum_surrogate(sc, s);

  if (sur.curvature <= 0.0) {
    // All rate weights vanish: the objective is linear in the covariances
    // and the maximizer concentrates the budget on the top eigenvector of
    // the harvest gram.
    const EigenPair ep = hermitian_evd(sur.harvest_gram);
    const double top = ep.eigenvalues.size() > 0 ? ep.eigenvalues(0) : 0.0;
    if (top <= 1e-15) return {s, 0.0};
    const ComplexVector v = ep.eigenvectors.col(0);
    const ComplexMatrix share =
        (sc.total_power / sc.num_info) * (v * v.adjoint());
    return {CovarianceTuple(sc.num_info, share), top};
  }

  std::vector<EigenPair> decomps;
  std::vector<RealVector> spectra;
  for (int i = 0; i < sc.num_info; ++i) {
    decomps.push_back(hermitian_evd(sur.linear[i], 1e-9));
    spectra.push_back(decomps.back().eigenvalues);
  }
  const double target = 2.0 * sur.curvature * sc.total_power;
  const double mu = waterfill_mu(spectra, target);

  CovarianceTuple next;
  for (int i = 0; i < sc.num_info; ++i) {
    const RealVector w =
        (decomps[i].eigenvalues.array() - mu).cwiseMax(0.0) / (2.0 * sur.curvature);
    next.push_back(decomps[i].eigenvectors * w.asDiagonal() *
                   decomps[i].eigenvectors.adjoint());
    next.back() = hermitian_part(next.back());
  }
  return {next, mu};
}

CovarianceTuple project_power_psd(const CovarianceTuple& s, double budget, double* shift_out) {
  std::vector<EigenPair> decomps;
  std::vector<RealVector> spectra;
  for (const ComplexMatrix& m : s) {
    decomps.push_back(hermitian_evd(hermitian_part(m)));
    spectra.push_back(decomps.back().eigenvalues);
  }
  const double shift = waterfill_mu(spectra, budget);
  if (shift_out) *shift_out = shift;
  CovarianceTuple out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const RealVector w = (decomps[i].eigenvalues.array() - shift).cwiseMax(0.0);
    out.push_back(hermitian_part(decomps[i].eigenvectors * w.asDiagonal() *
                                 decomps[i].eigenvectors.adjoint()));
  }
  return out;
}

SolveResult solve_sum(const Scenario& sc, const SumSolverOptions& opts,
                      const CovarianceTuple* warm_start) {
  sc.validate();
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&]() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  SolveResult res;
  res.trace.solver = "mmq-sum";
  CovarianceTuple s = warm_start ? *warm_start : scaled_identity_tuple(sc);
  double obj = weighted_rate_harvest_objective_nats(sc, s);
  res.trace.iterations.push_back(make_record(sc, s, 0, elapsed(), obj, 0.0));

  for (int k = 1; k <= opts.max_iters; ++k) {
    auto [next, mu] = mm_sum_step(sc, s);
    const double obj_next = weighted_rate_harvest_objective_nats(sc, next);
    s = std::move(next);
    res.trace.iterations.push_back(make_record(sc, s, k, elapsed(), obj_next, mu));
    const bool done = std::abs(obj_next - obj) <= opts.objective_tol * std::max(1.0, std::abs(obj));
    obj = obj_next;
    if (done) {
      res.trace.converged = true;
      break;
    }
  }
  res.trace.total_time_s = elapsed();
  res.covariances = std::move(s);
  return res;
}

}  // namespace swipt
