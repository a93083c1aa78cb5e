#pragma once

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>

namespace swipt {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using Index = Eigen::Index;

// Thrown when a matrix required to be invertible / positive definite is
// singular to working precision.
class SingularMatrixError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Eigendecomposition of a Hermitian matrix. Eigenvalues are sorted in
// descending order; eigenvectors.col(k) pairs with eigenvalues(k).
// Invariants: ||U diag(w) U^H - A|| <= 1e-9 * max(1, ||A||),
// ||U^H U - I||_max <= 1e-10.
struct EigenPair {
  RealVector eigenvalues;
  ComplexMatrix eigenvectors;
};

// Relative Hermitian deviation: ||A - A^H||_max / max(1, ||A||_max).
double hermitian_deviation(const ComplexMatrix& a);

bool is_hermitian(const ComplexMatrix& a, double rel_tol = 1e-12);

// (A + A^H) / 2. All decompositions below symmetrize their input first so
// that round-off accumulated by callers cannot leak into eigenvectors.
ComplexMatrix hermitian_part(const ComplexMatrix& a);

// Throws std::invalid_argument if A is not square or deviates from Hermitian
// by more than rel_tol (relative max-norm).
EigenPair hermitian_evd(const ComplexMatrix& a, double rel_tol = 1e-12);

// U diag(max(0, w - shift)) U^H: nearest PSD matrix after subtracting
// `shift` from the spectrum. shift = 0 gives the PSD projection in
// Frobenius norm.
ComplexMatrix psd_clip(const ComplexMatrix& a, double shift = 0.0);

// Largest singular value of a (rectangular) complex matrix.
double max_singular_value(const ComplexMatrix& h);

// Singular values in descending order.
RealVector singular_values(const ComplexMatrix& h);

// Orthonormal basis of the null space of A (columns), determined by singular
// values below rel_tol * sigma_max. For a matrix with zero rows returns the
// identity. The basis may have zero columns when A has full column rank.
ComplexMatrix null_space_basis(const ComplexMatrix& a, double rel_tol = 1e-10);

// A^{-1/2} for Hermitian positive definite A. Throws SingularMatrixError if
// the smallest eigenvalue is <= rel_tol * max(1, largest eigenvalue).
ComplexMatrix inv_sqrt_pd(const ComplexMatrix& a, double rel_tol = 1e-12);

// log det A for Hermitian positive definite A (natural log). Throws
// SingularMatrixError if the Cholesky factorization fails.
double logdet_hpd(const ComplexMatrix& a);

// Column-major vectorization and its inverse.
ComplexVector vec(const ComplexMatrix& a);
ComplexMatrix unvec(const ComplexVector& v, Index rows, Index cols);

// Re tr(A B) for same-size square matrices; exact inner product when both
// arguments are Hermitian.
double real_trace_product(const ComplexMatrix& a, const ComplexMatrix& b);

}  // namespace swipt
