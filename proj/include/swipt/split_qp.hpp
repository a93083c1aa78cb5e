#pragma once

#include "swipt/matrix_kernel.hpp"

#include <vector>

namespace swipt {

// Convex program over a stacked complex variable x:
//   minimize   (1/2) x^H P x + Re(q^H x)
//   subject to X_b Hermitian PSD for each leading block b,
//              Re(a_m^H x) <= rhs_m for each halfspace m,
// where block b is an n_b x n_b matrix stored column-major at consecutive
// positions of x, and any trailing entries are free real scalars. P must be
// Hermitian PSD (zero for a pure linear objective).
struct SplitQpProblem {
  ComplexMatrix curvature;                     // P
  ComplexVector linear;                        // q
  std::vector<Index> psd_block_dims;           // n_b per block
  std::vector<ComplexVector> halfspace_normals;
  std::vector<double> halfspace_rhs;

  Index dimension() const { return linear.size(); }
  Index free_tail() const;
  void validate() const;
};

struct SplitQpOptions {
  double tol = 1e-7;            // residual tolerance, scaled by iterate norms
  int max_iters = 20000;
  double sigma = 1.0;           // initial penalty; adapted by residual balancing
  bool adapt_sigma = true;
  double over_relax = 1.7;      // relaxation factor in (0, 2); 1 disables
  double feas_tol = 1e-10;      // halfspace violation at the returned point,
                                // relative to max(1, |rhs|)
  int polish_iters = 300;
};

// Solution report. The returned point has exactly PSD blocks; halfspace
// violations are at most feas_tol * max(1, |rhs_m|) when `polished`.
struct SplitQpResult {
  ComplexVector x;
  bool converged = false;
  bool polished = false;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double sigma = 0.0;                  // final penalty, reusable as warm start
  std::vector<double> halfspace_duals; // nonnegative multipliers
  ComplexVector cone_dual;             // stacked PSD dual certificate
  // KKT residuals at the returned point, normalized by problem scale.
  double kkt_stationarity = 0.0;
  double kkt_complementarity = 0.0;
};

class InnerSolveError : public std::runtime_error {
 public:
  InnerSolveError(const std::string& msg, double primal, double dual)
      : std::runtime_error(msg), primal_residual(primal), dual_residual(dual) {}
  double primal_residual;
  double dual_residual;
};

SplitQpResult solve_split_qp(const SplitQpProblem& prob, const SplitQpOptions& opts,
                             const ComplexVector* warm_start = nullptr);

// Euclidean projection onto the polyhedron {x : Re(a_m^H x) <= rhs_m}. The
// multipliers satisfy x = y - sum_m lambda_m a_m with lambda >= 0 and exact
// complementarity. Exposed for tests. Throws std::invalid_argument beyond 16
// halfspaces (the active-set enumeration is exponential in their count).
ComplexVector project_polyhedron(const std::vector<ComplexVector>& normals,
                                 const std::vector<double>& rhs, const ComplexVector& y,
                                 std::vector<double>* multipliers = nullptr);

// Projection onto the cone part (PSD blocks, real tail) of a split problem.
ComplexVector project_cone(const SplitQpProblem& prob, const ComplexVector& y);

}  // namespace swipt
