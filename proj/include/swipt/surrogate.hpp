#pragma once

#include "swipt/system_model.hpp"

#include <utility>
#include <vector>

namespace swipt {

// Thrown when a quadratic subproblem would not be strictly convex (the
// proximal weight is zero and the curvature structure leaves flat
// directions).
class CurvatureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Linear upper bound on the interference log-det term of info user i around
// the expansion tuple: the bound is tr(price * sum_{k != i} S_k) + offset,
// tight at the expansion point. `price` is Hermitian PSD.
struct InterferenceBound {
  ComplexMatrix price;
  double offset = 0.0;
};

InterferenceBound linear_interference_bound(const Scenario& sc, const CovarianceTuple& s0,
                                            int i);

// Curvature coefficient of the quadratic minorant of user i's signal
// log-det term: half the squared largest eigenvalue of H_i^H H_i (the
// smallest admissible choice).
double signal_curvature(const ComplexMatrix& h);

// Per-user curvature for the decoupled minorant used by the weighted-sum
// solver: N^2 times signal_curvature, N = number of info users.
double decoupled_curvature(const ComplexMatrix& h, int num_info);

// Quadratic minorant of the constrained weighted-rate objective around an
// expansion tuple. In terms of the shared covariance T = sum_i S_i,
//   value(S) = sum_i w_i [ tr(net_linear[i] T) - curvature[i] tr(T^2)
//                          + tr(interference_price[i] S_i) + offset[i] ]
//              - prox_weight * sum_i ||S_i - expansion[i]||_F^2,
// and value(expansion) equals the true objective at the expansion tuple.
struct HybridSurrogate {
  CovarianceTuple expansion;
  std::vector<ComplexMatrix> signal_gradient;      // gradient of the signal term at expansion
  std::vector<ComplexMatrix> interference_price;   // linear interference bound coefficient
  std::vector<ComplexMatrix> shared_linear;        // signal_gradient + 2 curvature expansion-sum
  std::vector<ComplexMatrix> net_linear;           // shared_linear - interference_price
  std::vector<double> curvature;                   // one per info user
  std::vector<double> offset;                      // per-user constant (tangency)
  double prox_weight = 0.0;

  double value(const Scenario& sc, const CovarianceTuple& s) const;
};

// Optional per-user curvature override must match the info user count;
// values below the minimal admissible curvature void the minorant property.
HybridSurrogate hybrid_surrogate(const Scenario& sc, const CovarianceTuple& s0,
                                 double prox_weight,
                                 const std::vector<double>& curvature_override = {});

// Quadratic minorant of the weighted rate-plus-harvest objective that is
// separable across users:
//   value(S) = -curvature * sum_i tr(S_i^2) + sum_i tr(linear[i] S_i) + offset.
// Maximizing it under the power budget decouples into per-user spectral
// water-filling with a shared multiplier.
struct SumSurrogate {
  CovarianceTuple expansion;
  std::vector<ComplexMatrix> linear;  // Hermitian coefficient per info user
  double curvature = 0.0;             // shared scalar, > 0 unless all weights vanish
  ComplexMatrix harvest_gram;         // sum_j harvest_weight_j H_j^H H_j
  double offset = 0.0;

  double value(const CovarianceTuple& s) const;
};

SumSurrogate sum_surrogate(const Scenario& sc, const CovarianceTuple& s0);

// The hybrid minorant rewritten over the stacked vectorization
// x = [vec(S_1); ...; vec(S_N)]: maximizing it equals minimizing
// ||curvature_sqrt * x - target||^2 over the constraint set. curvature_sqrt
// is the PD square root of coupling * (ones kron I) + prox_weight * I.
struct QuadSubproblem {
  Index n_tx = 0;
  int num_info = 0;
  double coupling = 0.0;     // weighted sum of per-user curvatures
  double prox_weight = 0.0;
  ComplexVector linear;      // b with surrogate(x) = -x^H C x + 2 Re(b^H x) + const
  double constant = 0.0;     // surrogate value at x = 0

  double power_budget = 0.0;
  std::vector<double> harvest_targets;
  std::vector<ComplexMatrix> harvest_grams;  // H_j^H H_j per harvest user

  // Dense curvature matrix C (Hermitian PD); small dimensions only.
  ComplexMatrix curvature_matrix() const;
  // C^{1/2} and the least-squares target c = C^{-1/2} b, via the closed
  // two-eigenvalue form of C.
  ComplexMatrix curvature_sqrt() const;
  ComplexVector target() const;
  // Surrogate value at a stacked point (without the per-build constant).
  double quadratic_value(const ComplexVector& x) const;
};

// Throws CurvatureError when prox_weight == 0 leaves the quadratic form
// singular (always the case for two or more info users).
QuadSubproblem build_quad_subproblem(const Scenario& sc, const HybridSurrogate& hs);

// Stacked column-major vectorization of a tuple and its inverse.
ComplexVector stack_tuple(const CovarianceTuple& s);
CovarianceTuple unstack_tuple(const ComplexVector& x, Index n_tx, int num_info);

}  // namespace swipt
