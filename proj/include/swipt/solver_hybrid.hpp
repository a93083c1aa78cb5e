#pragma once

#include "swipt/run_trace.hpp"
#include "swipt/split_qp.hpp"
#include "swipt/surrogate.hpp"

namespace swipt {

// Raised when the harvest floors cannot all be met under the power budget.
// `max_slack` is the optimal value of the feasibility program: the largest
// achievable min_j (harvested_j - target_j), negative when infeasible.
class InfeasibleError : public std::runtime_error {
 public:
  InfeasibleError(const std::string& msg, double slack)
      : std::runtime_error(msg), max_slack(slack) {}
  double max_slack;
};

struct HybridSolverOptions {
  int max_iters = 2000;         // outer majorize-maximize iterations
  double objective_tol = 1e-6;  // relative change of the true objective
  double prox_weight = 1e-6;    // keeps the quadratic subproblem strictly convex
  double inner_tol = 1e-7;
  int inner_max_iters = 50000;
};

// Largest uniform harvest slack achievable under the power budget, together
// with an attaining tuple. The program is linear and is solved by the
// operator-splitting solver over a single shared covariance (the harvest
// and power functionals only see the covariance sum).
struct FeasibilityCertificate {
  double max_slack = 0.0;
  CovarianceTuple point;
};

FeasibilityCertificate max_harvest_slack(const Scenario& sc);

// Feasible starting tuple for the constrained problem. Scaled identity when
// no harvest floor is positive; otherwise the max-slack point. Throws
// InfeasibleError when the certificate is negative beyond tolerance.
CovarianceTuple find_feasible_start(const Scenario& sc);

// Tuple strictly inside the constraint set, built from a feasible anchor
// whose per-floor slacks are supplied: a small uniform shrink opens power
// slack and a scaled-identity floor makes every block strictly positive
// definite, with the shrink sized so each harvest floor keeps a strictly
// positive margin. Returns false when the anchor has no usable slack, in
// which case interior-point subproblem solves are unavailable.
bool make_interior_tuple(const Scenario& sc, const CovarianceTuple& anchor,
                         const std::vector<double>& anchor_slack,
                         CovarianceTuple& interior);

// Maximizer of the quadratic minorant over the constraint set. When a
// strictly feasible `interior_start` is supplied the solve runs through the
// interior-point path, whose accuracy does not degrade when the floors cut
// the feasible set down to a sliver; otherwise (or if that path fails) it
// runs through the operator-splitting solver. `opts.tol` is the optimality
// tolerance of either path.
struct QuadSolve {
  CovarianceTuple covariances;
  double power_dual = 0.0;
  std::vector<double> harvest_duals;
  double sigma = 0.0;  // path-dependent warm quantity: splitting penalty or
                       // barrier weight; pass back in for warm-started solves
  int iterations = 0;
};

QuadSolve solve_quad_subproblem(const QuadSubproblem& qp, const SplitQpOptions& opts,
                                const CovarianceTuple* warm_start = nullptr,
                                const CovarianceTuple* interior_start = nullptr);

// Restore exact feasibility of a point whose constraint violations are at an
// inner solver's residual level: a uniform rescale meets the power budget and
// a blend toward an anchor with positive floor slack removes any remaining
// floor shortfall. The objective perturbation is violation/slack-sized.
void repair_feasibility(const Scenario& sc, CovarianceTuple& s,
                        const CovarianceTuple& anchor,
                        const std::vector<double>& anchor_slack);

// Constraint status at the returned solution, from the last subproblem.
struct ConstraintActivity {
  double power_dual = 0.0;
  double power_slack = 0.0;                // budget - consumed power
  std::vector<double> harvest_duals;
  std::vector<double> harvest_slacks;      // harvested - target, per user
  std::vector<bool> harvest_active;        // slack below activity tolerance
};

struct HybridResult {
  CovarianceTuple covariances;
  RunTrace trace;
  ConstraintActivity activity;
};

// Majorize-maximize on the weighted sum rate under harvest floors: each
// outer step rebuilds the quadratic minorant at the current tuple and
// maximizes it over the constraint set. Throws InfeasibleError before
// iterating when the floors are unattainable.
HybridResult solve_hybrid(const Scenario& sc, const HybridSolverOptions& opts = {},
                          const CovarianceTuple* warm_start = nullptr);

}  // namespace swipt
