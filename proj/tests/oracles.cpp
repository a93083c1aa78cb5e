#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace swipt::test {

RealVector jacobi_eigenvalues(const ComplexMatrix& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("jacobi: square matrix required");
  const Index n = a.rows();
  const Index d = 2 * n;
  Eigen::MatrixXd m(d, d);
  m.topLeftCorner(n, n) = a.real();
  m.topRightCorner(n, n) = -a.imag();
  m.bottomLeftCorner(n, n) = a.imag();
  m.bottomRightCorner(n, n) = a.real();
  m = (0.5 * (m + m.transpose())).eval();

  const double scale = std::max(1.0, m.squaredNorm());
  for (int sweep = 0; sweep < 200; ++sweep) {
    double off = 0.0;
    for (Index p = 0; p < d; ++p) {
      for (Index q = p + 1; q < d; ++q) off += m(p, q) * m(p, q);
    }
    if (off <= 1e-30 * scale) break;
    for (Index p = 0; p < d; ++p) {
      for (Index q = p + 1; q < d; ++q) {
        const double apq = m(p, q);
        if (std::abs(apq) < 1e-300) continue;
        const double phi = 0.5 * std::atan2(2.0 * apq, m(q, q) - m(p, p));
        const double c = std::cos(phi);
        const double s = std::sin(phi);
        for (Index k = 0; k < d; ++k) {
          const double mkp = m(k, p);
          const double mkq = m(k, q);
          m(k, p) = c * mkp - s * mkq;
          m(k, q) = s * mkp + c * mkq;
        }
        for (Index k = 0; k < d; ++k) {
          const double mpk = m(p, k);
          const double mqk = m(q, k);
          m(p, k) = c * mpk - s * mqk;
          m(q, k) = s * mpk + c * mqk;
        }
      }
    }
  }

  std::vector<double> diag(d);
  for (Index k = 0; k < d; ++k) diag[k] = m(k, k);
  std::sort(diag.begin(), diag.end());
  RealVector out(n);
  for (Index i = 0; i < n; ++i) out(i) = 0.5 * (diag[2 * i] + diag[2 * i + 1]);
  return out;
}

double oracle_min_eigenvalue(const ComplexMatrix& a) {
  const RealVector ev = jacobi_eigenvalues(a);
  return ev(0);
}

double oracle_max_eigenvalue(const ComplexMatrix& a) {
  const RealVector ev = jacobi_eigenvalues(a);
  return ev(ev.size() - 1);
}

double oracle_sigma_max(const ComplexMatrix& a, int iters) {
  const ComplexMatrix gram = a.adjoint() * a;
  const Index n = gram.rows();
  ComplexVector v(n);
  for (Index k = 0; k < n; ++k) {
    v(k) = Complex(1.0 + 0.013 * static_cast<double>(k), 0.007 * static_cast<double>(k));
  }
  v /= v.norm();
  double lambda = 0.0;
  for (int it = 0; it < iters; ++it) {
    ComplexVector w = gram * v;
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    w /= norm;
    const double next = std::real(Complex(w.dot(gram * w)));
    if (it > 16 && std::abs(next - lambda) <= 1e-15 * std::max(1.0, std::abs(next))) {
      lambda = next;
      break;
    }
    lambda = next;
    v = std::move(w);
  }
  return std::sqrt(std::max(0.0, lambda));
}

double oracle_waterfill_capacity_bits(const ComplexMatrix& h, double power) {
  if (power <= 0.0) return 0.0;
  const RealVector ev = jacobi_eigenvalues(h.adjoint() * h);
  std::vector<double> gains;
  for (Index k = 0; k < ev.size(); ++k) {
    if (ev(k) > 1e-12 * std::max(1.0, ev(ev.size() - 1))) gains.push_back(ev(k));
  }
  if (gains.empty()) return 0.0;

  auto allocated = [&](double mu) {
    double acc = 0.0;
    for (double g : gains) acc += std::max(0.0, mu - 1.0 / g);
    return acc;
  };
  double lo = 0.0;
  double hi = power;
  for (double g : gains) hi = std::max(hi, 1.0 / g);
  hi += power;
  while (allocated(hi) < power) hi *= 2.0;
  for (int it = 0; it < 300; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (allocated(mid) < power) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double mu = 0.5 * (lo + hi);

  double bits = 0.0;
  for (double g : gains) {
    const double p = std::max(0.0, mu - 1.0 / g);
    if (p > 0.0) bits += std::log2(1.0 + g * p);
  }
  return bits;
}

double central_difference(const std::function<double(double)>& f, double step) {
  return (f(step) - f(-step)) / (2.0 * step);
}

ComplexMatrix random_gaussian(std::mt19937_64& rng, Index rows, Index cols) {
  std::normal_distribution<double> normal(0.0, 1.0);
  ComplexMatrix m(rows, cols);
  for (Index c = 0; c < cols; ++c) {
    for (Index r = 0; r < rows; ++r) {
      const double re = normal(rng);
      const double im = normal(rng);
      m(r, c) = Complex(re, im) / std::sqrt(2.0);
    }
  }
  return m;
}

ComplexMatrix random_hermitian(std::mt19937_64& rng, Index n, double scale) {
  const ComplexMatrix g = random_gaussian(rng, n, n);
  return (0.5 * scale) * (g + g.adjoint());
}

ComplexMatrix random_psd(std::mt19937_64& rng, Index n, double scale) {
  const ComplexMatrix g = random_gaussian(rng, n, n);
  return scale * (g * g.adjoint()) / static_cast<double>(n);
}

}  // namespace swipt::test
