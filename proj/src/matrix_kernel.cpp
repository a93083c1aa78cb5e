#include "swipt/matrix_kernel.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <string>

namespace swipt {

namespace {

void require_square(const ComplexMatrix& a, const char* who) {
  if (a.rows() != a.cols()) {
    throw std::invalid_argument(std::string(who) + ": matrix must be square, got " +
                                std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
  }
}

}  // namespace

double hermitian_deviation(const ComplexMatrix& a) {
  if (a.rows() != a.cols()) return std::numeric_limits<double>::infinity();
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  return (a - a.adjoint()).cwiseAbs().maxCoeff() / scale;
}

bool is_hermitian(const ComplexMatrix& a, double rel_tol) {
  return a.rows() == a.cols() && hermitian_deviation(a) <= rel_tol;
}

ComplexMatrix hermitian_part(const ComplexMatrix& a) {
  return 0.5 * (a + a.adjoint());
}

EigenPair hermitian_evd(const ComplexMatrix& a, double rel_tol) {
  require_square(a, "hermitian_evd");
  if (!is_hermitian(a, rel_tol)) {
    throw std::invalid_argument("hermitian_evd: matrix is not Hermitian (deviation " +
                                std::to_string(hermitian_deviation(a)) + ")");
  }
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(hermitian_part(a));
  if (es.info() != Eigen::Success) {
    throw SingularMatrixError("hermitian_evd: eigensolver failed to converge");
  }
  // Eigen sorts ascending; flip to descending.
  const Index n = a.rows();
  EigenPair out;
  out.eigenvalues = es.eigenvalues().reverse();
  out.eigenvectors.resize(n, n);
  for (Index k = 0; k < n; ++k) {
    out.eigenvectors.col(k) = es.eigenvectors().col(n - 1 - k);
  }
  return out;
}

ComplexMatrix psd_clip(const ComplexMatrix& a, double shift) {
  const EigenPair ep = hermitian_evd(a, 1e-6);
  RealVector w = (ep.eigenvalues.array() - shift).cwiseMax(0.0);
  return ep.eigenvectors * w.asDiagonal() * ep.eigenvectors.adjoint();
}

double max_singular_value(const ComplexMatrix& h) {
  if (h.size() == 0) return 0.0;
  Eigen::JacobiSVD<ComplexMatrix> svd(h);
  return svd.singularValues()(0);
}

RealVector singular_values(const ComplexMatrix& h) {
  Eigen::JacobiSVD<ComplexMatrix> svd(h);
  return svd.singularValues();
}

ComplexMatrix null_space_basis(const ComplexMatrix& a, double rel_tol) {
  const Index n = a.cols();
  if (a.rows() == 0) {
    return ComplexMatrix::Identity(n, n);
  }
  Eigen::JacobiSVD<ComplexMatrix> svd(a, Eigen::ComputeFullV);
  const RealVector sv = svd.singularValues();
  const double cutoff = rel_tol * std::max(sv.size() > 0 ? sv(0) : 0.0, 1e-300);
  Index rank = 0;
  for (Index k = 0; k < sv.size(); ++k) {
    if (sv(k) > cutoff) ++rank;
  }
  return svd.matrixV().rightCols(n - rank);
}

ComplexMatrix inv_sqrt_pd(const ComplexMatrix& a, double rel_tol) {
  const EigenPair ep = hermitian_evd(a);
  const double w_max = ep.eigenvalues(0);
  const double w_min = ep.eigenvalues(ep.eigenvalues.size() - 1);
  if (w_min <= rel_tol * std::max(1.0, w_max)) {
    throw SingularMatrixError("inv_sqrt_pd: matrix is singular or indefinite (min eigenvalue " +
                              std::to_string(w_min) + ")");
  }
  RealVector w = ep.eigenvalues.array().rsqrt();
  return ep.eigenvectors * w.asDiagonal() * ep.eigenvectors.adjoint();
}

double logdet_hpd(const ComplexMatrix& a) {
  require_square(a, "logdet_hpd");
  Eigen::LLT<ComplexMatrix> llt(hermitian_part(a));
  if (llt.info() != Eigen::Success) {
    throw SingularMatrixError("logdet_hpd: matrix is not positive definite");
  }
  double acc = 0.0;
  for (Index k = 0; k < a.rows(); ++k) {
    acc += std::log(llt.matrixL()(k, k).real());
  }
  return 2.0 * acc;
}

ComplexVector vec(const ComplexMatrix& a) {
  return ComplexVector(Eigen::Map<const ComplexVector>(a.data(), a.size()));
}

ComplexMatrix unvec(const ComplexVector& v, Index rows, Index cols) {
  if (v.size() != rows * cols) {
    throw std::invalid_argument("unvec: size mismatch");
  }
  return ComplexMatrix(Eigen::Map<const ComplexMatrix>(v.data(), rows, cols));
}

double real_trace_product(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.rows() != b.cols() || a.cols() != b.rows()) {
    throw std::invalid_argument("real_trace_product: dimension mismatch");
  }
  return a.cwiseProduct(b.transpose()).sum().real();
}

}  // namespace swipt
