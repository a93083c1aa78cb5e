#pragma once

#include "swipt/run_trace.hpp"
#include "swipt/solver_hybrid.hpp"
#include "swipt/solver_sum.hpp"

namespace swipt {

// Which scalarization is optimized and over which constraint set:
// kHybrid = weighted sum rate under harvest floors and the power budget;
// kSum    = weighted sum rate plus weighted harvested power under the
//           power budget alone.
enum class Formulation { kHybrid, kSum };

enum class GradientInit { kIdentity, kAllOnes };

// Gradient of the true objective with respect to each covariance (the
// Hermitian matrix pairing d f = sum_i Re tr(grad_i dS_i)).
CovarianceTuple objective_gradient(const Scenario& sc, const CovarianceTuple& s,
                                   Formulation form);

// True objective value in nats for the chosen formulation.
double objective_nats(const Scenario& sc, const CovarianceTuple& s, Formulation form);

// Warm state threaded across repeated nearby projections onto the
// harvest-floor set. `interior` (strictly inside the set) switches the
// projection to the interior-point path, whose accuracy does not degrade
// when the floors cut the set down to a sliver; `anchor` is the max-slack
// point the interior was built from. When `interior` is empty the
// operator-splitting path is used with `sigma` as its penalty warm value.
struct ProjectionState {
  double sigma = 0.0;       // splitting-path penalty, updated per call
  double barrier_t = 0.0;   // interior-point barrier weight at the last exit
  CovarianceTuple anchor;
  CovarianceTuple interior;
  CovarianceTuple prev;     // last projection output, reused as a warm start
};

// Builds the projection state for the hybrid set: solves the max-slack
// program (throwing InfeasibleError when the floors are unattainable) and
// derives the strictly interior point when the slack allows one.
ProjectionState make_projection_state(const Scenario& sc);

// Projection onto the formulation's constraint set. For kSum this is the
// spectral clip with a shared shift; for kHybrid the harvest floors are
// handled by the interior-point solver when `state` carries an interior
// point, by the operator-splitting solver otherwise.
CovarianceTuple project_feasible(const Scenario& sc, const CovarianceTuple& s,
                                 Formulation form, ProjectionState* state = nullptr);

struct GradientOptions {
  Formulation formulation = Formulation::kSum;
  GradientInit init = GradientInit::kIdentity;
  int max_iters = 20000;
  double stationarity_tol = 1e-5;  // norm of the unit-step gradient mapping
  double armijo_slope = 1e-4;
  double initial_step = 1.0;
};

// Projected gradient ascent on the true objective with Armijo backtracking
// (halving). The trace records every accepted iterate.
SolveResult solve_projected_gradient(const Scenario& sc, const GradientOptions& opts = {});

struct MmLinearOptions {
  Formulation formulation = Formulation::kHybrid;
  int max_iters = 2000;            // outer rebuilds of the interference bound
  double objective_tol = 1e-6;
  double prox_weight = 1e-6;
  int max_inner_iters = 400;
  double inner_stationarity_tol = 1e-5;
  double armijo_slope = 1e-4;
  double initial_step = 1.0;
};

// Majorize-maximize with only the interference term bounded (linearized).
// The concave inner problem is solved by projected gradient ascent in the
// weighted-sum form and by frozen-price quadratic-minorant steps under
// harvest floors, where nearest-point projection arcs need not ascend.
// Slower per outer step than the quadratic-minorant solvers but shares
// their monotone ascent.
SolveResult solve_mm_linear(const Scenario& sc, const MmLinearOptions& opts = {},
                            const CovarianceTuple* warm_start = nullptr);

class BdDimensionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct BdOptions {
  double null_tol = 1e-10;         // singular value cutoff for the null basis
  int max_inner_iters = 2000;
  double inner_stationarity_tol = 1e-5;
};

// Zero-forcing benchmark: each info user transmits in the null space of the
// other info users' stacked channels, so interference vanishes and the rate
// problem is concave. Without harvest floors the solution is joint spectral
// water-filling over the effective channels; with floors a projected
// gradient handles the restricted convex program. Throws BdDimensionError
// when a user is left without signaling dimensions, InfeasibleError when
// the floors are unattainable in the restricted space.
SolveResult solve_block_diagonalization(const Scenario& sc, const BdOptions& opts = {});

// Largest objective gain any of `num_dirs` random feasible perturbations of
// length `step` achieves; small at (near-)stationary points. Directions are
// drawn deterministically from `seed`.
double best_ascent_gain(const Scenario& sc, const CovarianceTuple& s, Formulation form,
                        double step, int num_dirs, std::uint64_t seed);

}  // namespace swipt
