#pragma once

#include "swipt/run_trace.hpp"
#include "swipt/surrogate.hpp"

#include <utility>

namespace swipt {

struct SumSolverOptions {
  int max_iters = 2000;
  double objective_tol = 1e-6;   // relative change of the true objective
  double bisection_tol = 1e-10;  // absolute bracket width on the multiplier
};

// Shared multiplier mu >= 0 with sum_i sum_k max(0, w_ik - mu) = target,
// or mu = 0 when the unshifted positive mass already fits under the target.
// Bisection over [0, max w]; both the bracket width and the relative value
// residual are driven below tolerance. Throws std::invalid_argument on an
// empty eigenvalue set or a nonpositive target.
double waterfill_mu(const std::vector<RealVector>& eigenvalues, double target,
                    double bracket_tol = 1e-10);

// One majorize-maximize step on the weighted rate-plus-harvest objective:
// builds the separable quadratic minorant at `s` and maximizes it in closed
// form under the power budget. Returns the new tuple and the multiplier.
// The new tuple is PSD with total power <= budget + 1e-8.
std::pair<CovarianceTuple, double> mm_sum_step(const Scenario& sc, const CovarianceTuple& s);

// Euclidean projection onto {S_i PSD, sum_i tr(S_i) <= budget}: spectral
// clip with a shared shift found by the same bisection. Returns the shift
// through `shift_out` when non-null.
CovarianceTuple project_power_psd(const CovarianceTuple& s, double budget,
                                  double* shift_out = nullptr);

// Ascending majorize-maximize loop from the scaled-identity start (or the
// given warm start). The trace records the true objective at every accepted
// iterate, starting with the initial point.
SolveResult solve_sum(const Scenario& sc, const SumSolverOptions& opts = {},
                      const CovarianceTuple* warm_start = nullptr);

}  // namespace swipt
