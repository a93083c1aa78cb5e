#include "swipt/barrier_qp.hpp"

#include "swipt/matrix_kernel.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace swipt {

namespace {

struct BlockState {
  std::vector<ComplexMatrix> inverses;  // per-block S^{-1}
  std::vector<double> logdets;
  bool ok = false;
};

// Factor every PSD block of x; reports failure instead of throwing so the
// line search can probe trial points.
BlockState factor_blocks(const SplitQpProblem& prob, const ComplexVector& x) {
  BlockState st;
  Index pos = 0;
  for (Index n : prob.psd_block_dims) {
    const ComplexMatrix s = hermitian_part(unvec(x.segment(pos, n * n), n, n));
    Eigen::LLT<ComplexMatrix> llt(s);
    if (llt.info() != Eigen::Success) return st;
    double logdet = 0.0;
    for (Index k = 0; k < n; ++k) {
      const double d = llt.matrixL()(k, k).real();
      if (!(d > 0.0)) return st;
      logdet += 2.0 * std::log(d);
    }
    st.inverses.push_back(llt.solve(ComplexMatrix::Identity(n, n)));
    st.logdets.push_back(logdet);
    pos += n * n;
  }
  st.ok = true;
  return st;
}

}  // namespace

SplitQpResult solve_barrier_qp(const SplitQpProblem& prob, const BarrierOptions& opts,
                               const ComplexVector& strict_start) {
  prob.validate();
  if (prob.free_tail() != 0) {
    throw std::invalid_argument("barrier_qp: free tail coordinates not supported");
  }
  const Index dim = prob.dimension();
  const bool has_curvature = prob.curvature.size() != 0;
  const int m = static_cast<int>(prob.halfspace_normals.size());

  double nu = static_cast<double>(m);  // total barrier degree
  for (Index n : prob.psd_block_dims) nu += static_cast<double>(n);

  auto objective = [&](const ComplexVector& x) {
    double f = (prob.linear.dot(x)).real();
    if (has_curvature) f += 0.5 * (x.dot(prob.curvature * x)).real();
    return f;
  };
  auto gaps_of = [&](const ComplexVector& x, std::vector<double>& gaps) {
    gaps.resize(m);
    for (int k = 0; k < m; ++k) {
      gaps[k] = prob.halfspace_rhs[k] - (prob.halfspace_normals[k].dot(x)).real();
      if (!(gaps[k] > 0.0)) return false;
    }
    return true;
  };

  ComplexVector x = strict_start;
  {
    // Symmetrize the start so tiny Hermitian defects cannot poison the run.
    Index pos = 0;
    for (Index n : prob.psd_block_dims) {
      x.segment(pos, n * n) = vec(hermitian_part(unvec(x.segment(pos, n * n), n, n)));
      pos += n * n;
    }
  }
  std::vector<double> gaps;
  BlockState st = factor_blocks(prob, x);
  if (!st.ok || !gaps_of(x, gaps)) {
    throw std::invalid_argument("barrier_qp: start is not strictly feasible");
  }

  auto barrier_value = [&](double t, const ComplexVector& y, const BlockState& bs,
                           const std::vector<double>& gp) {
    double phi = t * objective(y);
    for (double ld : bs.logdets) phi -= ld;
    for (double g : gp) phi -= std::log(g);
    return phi;
  };

  double t = opts.t_init;
  int newton_steps = 0;
  ComplexVector grad(dim);
  ComplexMatrix hess(dim, dim);

  while (true) {
    // Center at the current barrier weight.
    for (int center_it = 0; center_it < 60; ++center_it) {
      if (newton_steps >= opts.max_newton) {
        throw InnerSolveError("barrier_qp: Newton budget exhausted", nu / t, 0.0);
      }
      ++newton_steps;

      grad = t * prob.linear;
      if (has_curvature) grad += t * (prob.curvature * x);
      hess.setZero();
      if (has_curvature) hess = t * prob.curvature;
      Index pos = 0;
      for (std::size_t b = 0; b < prob.psd_block_dims.size(); ++b) {
        const Index n = prob.psd_block_dims[b];
        const ComplexMatrix& inv = st.inverses[b];
        grad.segment(pos, n * n) -= vec(inv);
        // Hessian of -logdet at S maps U to S^{-1} U S^{-1}: conj(inv) ⊗ inv.
        for (Index p = 0; p < n; ++p) {
          for (Index q = 0; q < n; ++q) {
            hess.block(pos + p * n, pos + q * n, n, n) += std::conj(inv(p, q)) * inv;
          }
        }
        pos += n * n;
      }
      for (int k = 0; k < m; ++k) {
        grad += prob.halfspace_normals[k] / gaps[k];
        hess += (prob.halfspace_normals[k] * prob.halfspace_normals[k].adjoint()) /
                (gaps[k] * gaps[k]);
      }

      Eigen::LLT<ComplexMatrix> llt(hess);
      if (llt.info() != Eigen::Success) {
        throw InnerSolveError("barrier_qp: indefinite Newton system", nu / t, 0.0);
      }
      const ComplexVector step = llt.solve(-grad);
      const double decrement_sq = -(grad.dot(step)).real();
      if (decrement_sq * 0.5 <= opts.newton_tol) break;

      // Exact cap against the halfspaces, then halving for the cone and a
      // sufficient-decrease test on the barrier function.
      double alpha = 1.0;
      for (int k = 0; k < m; ++k) {
        const double d = (prob.halfspace_normals[k].dot(step)).real();
        if (d > 0.0) alpha = std::min(alpha, 0.99 * gaps[k] / d);
      }
      const double phi0 = barrier_value(t, x, st, gaps);
      bool moved = false;
      while (alpha > 1e-14) {
        const ComplexVector x_try = x + alpha * step;
        BlockState st_try = factor_blocks(prob, x_try);
        std::vector<double> gaps_try;
        if (st_try.ok && gaps_of(x_try, gaps_try)) {
          const double phi_try = barrier_value(t, x_try, st_try, gaps_try);
          if (phi_try <= phi0 - 0.25 * alpha * decrement_sq) {
            x = x_try;
            st = std::move(st_try);
            gaps = std::move(gaps_try);
            moved = true;
            break;
          }
        }
        alpha *= 0.5;
      }
      if (!moved) break;  // at numerical floor for this t
    }
    if (nu / t <= opts.gap_tol * std::max(1.0, std::abs(objective(x)))) break;
    t *= opts.t_scale;
  }

  SplitQpResult res;
  res.x = x;
  res.converged = true;
  res.polished = true;
  res.iterations = newton_steps;
  res.primal_residual = 0.0;
  res.dual_residual = nu / t;  // reported as the certified duality gap
  res.sigma = 0.0;
  res.halfspace_duals.resize(m);
  for (int k = 0; k < m; ++k) res.halfspace_duals[k] = 1.0 / (t * gaps[k]);
  res.cone_dual = ComplexVector(dim);
  {
    Index pos = 0;
    for (std::size_t b = 0; b < prob.psd_block_dims.size(); ++b) {
      const Index n = prob.psd_block_dims[b];
      res.cone_dual.segment(pos, n * n) = vec(st.inverses[b] / t);
      pos += n * n;
    }
  }

  ComplexVector stat = prob.linear - res.cone_dual;
  if (has_curvature) stat += prob.curvature * res.x;
  double comp = std::abs((res.cone_dual.dot(res.x)).real());
  for (int k = 0; k < m; ++k) {
    stat += res.halfspace_duals[k] * prob.halfspace_normals[k];
    comp += std::abs(res.halfspace_duals[k] *
                     ((prob.halfspace_normals[k].dot(res.x)).real() - prob.halfspace_rhs[k]));
  }
  const double scale = std::max({1.0, prob.linear.norm(), res.x.norm()});
  res.kkt_stationarity = stat.norm() / scale;
  res.kkt_complementarity = comp / scale;
  return res;
}

}  // namespace swipt
