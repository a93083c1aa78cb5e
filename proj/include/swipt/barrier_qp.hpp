#pragma once

#include "swipt/split_qp.hpp"

namespace swipt {

// Log-barrier Newton solver for the same problem family as solve_split_qp,
// restricted to problems without free tail coordinates:
//
//   minimize    (1/2) x^H P x + Re<q, x>
//   subject to  unvec(x_i) PSD for each block,  Re<a_m, x> <= rhs_m.
//
// A strictly feasible start is required (positive definite blocks, strictly
// positive halfspace slack). Accuracy is set by the duality gap target and
// does not degrade when the feasible set is thin, which makes this the
// preferred engine for floor-constrained subproblems; the splitting solver
// remains the fallback when no strictly interior point is available.
struct BarrierOptions {
  double gap_tol = 1e-8;     // duality gap, relative to max(1, |objective|)
  double newton_tol = 1e-9;  // centering stop: squared Newton decrement / 2
  int max_newton = 600;      // total Newton steps across all centerings
  double t_init = 1.0;       // initial barrier weight
  double t_scale = 20.0;     // barrier weight growth per centering
};

// Returns the solution with exact-by-construction strict feasibility and
// dual certificates from the final central point. Throws std::invalid_argument
// if the problem has free tail coordinates or the start is not strictly
// feasible; throws InnerSolveError if Newton stalls before reaching the gap.
SplitQpResult solve_barrier_qp(const SplitQpProblem& prob, const BarrierOptions& opts,
                               const ComplexVector& strict_start);

}  // namespace swipt
