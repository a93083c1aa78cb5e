#include "swipt/split_qp.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <string>

namespace swipt {

Index SplitQpProblem::free_tail() const {
  Index blocks = 0;
  for (Index n : psd_block_dims) blocks += n * n;
  return dimension() - blocks;
}

void SplitQpProblem::validate() const {
  const Index dim = dimension();
  if (dim == 0) throw std::invalid_argument("split_qp: empty problem");
  if (curvature.size() != 0 && (curvature.rows() != dim || curvature.cols() != dim)) {
    throw std::invalid_argument("split_qp: curvature dimension mismatch");
  }
  Index blocks = 0;
  for (Index n : psd_block_dims) {
    if (n <= 0) throw std::invalid_argument("split_qp: nonpositive block dim");
    blocks += n * n;
  }
  if (blocks > dim) throw std::invalid_argument("split_qp: blocks exceed dimension");
  if (halfspace_normals.size() != halfspace_rhs.size()) {
    throw std::invalid_argument("split_qp: halfspace count mismatch");
  }
  for (const ComplexVector& a : halfspace_normals) {
    if (a.size() != dim) throw std::invalid_argument("split_qp: halfspace dimension mismatch");
  }
}

namespace {

double real_inner(const ComplexVector& a, const ComplexVector& b) {
  return a.dot(b).real();
}

// Exact projection by enumerating active sets; valid because the halfspace
// count stays small (power budget plus a few harvest floors).
struct PolyhedronProjector {
  const std::vector<ComplexVector>& normals;
  const std::vector<double>& rhs;
  Eigen::MatrixXd gram;  // Re(a_l^H a_m)

  PolyhedronProjector(const std::vector<ComplexVector>& normals_in,
                      const std::vector<double>& rhs_in)
      : normals(normals_in), rhs(rhs_in) {
    const int m = static_cast<int>(normals.size());
    if (m > 16) {
      throw std::invalid_argument("project_polyhedron: more than 16 halfspaces");
    }
    gram.resize(m, m);
    for (int l = 0; l < m; ++l) {
      for (int k = 0; k <= l; ++k) {
        gram(l, k) = gram(k, l) = real_inner(normals[l], normals[k]);
      }
    }
  }

  ComplexVector project(const ComplexVector& y, std::vector<double>* multipliers) const {
    const int m = static_cast<int>(normals.size());
    if (multipliers) multipliers->assign(m, 0.0);
    if (m == 0) return y;

    Eigen::VectorXd violation(m);
    double scale = 1.0;
    for (int k = 0; k < m; ++k) {
      violation(k) = real_inner(normals[k], y) - rhs[k];
      scale = std::max({scale, std::abs(rhs[k]), std::abs(violation(k))});
    }
    const double tol = 1e-12 * scale;
    if ((violation.array() <= tol).all()) return y;

    // KKT for the projection: lambda_W solves the Gram system on the active
    // set W, is nonnegative, and deactivated constraints stay satisfied.
    int best_mask = -1;
    double best_defect = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_lambda;
    std::vector<int> members;
    for (int mask = 1; mask < (1 << m); ++mask) {
      members.clear();
      for (int k = 0; k < m; ++k) {
        if (mask & (1 << k)) members.push_back(k);
      }
      const int w = static_cast<int>(members.size());
      Eigen::MatrixXd g(w, w);
      Eigen::VectorXd v(w);
      for (int l = 0; l < w; ++l) {
        v(l) = violation(members[l]);
        for (int k = 0; k < w; ++k) g(l, k) = gram(members[l], members[k]);
      }
      Eigen::LDLT<Eigen::MatrixXd> ldlt(g);
      if (ldlt.info() != Eigen::Success) continue;
      Eigen::VectorXd lambda = ldlt.solve(v);
      if ((g * lambda - v).cwiseAbs().maxCoeff() > 1e-9 * scale) continue;  // singular set

      double defect = 0.0;
      for (int l = 0; l < w; ++l) defect = std::max(defect, -lambda(l));
      Eigen::VectorXd lambda_full = Eigen::VectorXd::Zero(m);
      for (int l = 0; l < w; ++l) lambda_full(members[l]) = lambda(l);
      const Eigen::VectorXd residual = violation - gram * lambda_full;
      for (int k = 0; k < m; ++k) {
        if (!(mask & (1 << k))) defect = std::max(defect, residual(k));
      }
      if (defect < best_defect) {
        best_defect = defect;
        best_mask = mask;
        best_lambda = lambda_full;
      }
      if (defect <= tol) break;  // exact active set found
    }
    if (best_mask < 0) {
      throw SingularMatrixError("project_polyhedron: no consistent active set");
    }
    ComplexVector x = y;
    for (int k = 0; k < m; ++k) {
      const double lam = std::max(0.0, best_lambda(k));
      if (lam > 0.0) x -= lam * normals[k];
      if (multipliers) (*multipliers)[k] = lam;
    }
    return x;
  }

  double max_violation(const ComplexVector& y) const {
    double v = 0.0;
    for (std::size_t k = 0; k < normals.size(); ++k) {
      v = std::max(v, (real_inner(normals[k], y) - rhs[k]) /
                          std::max(1.0, std::abs(rhs[k])));
    }
    return v;
  }
};

ComplexVector cone_project(const std::vector<Index>& block_dims, const ComplexVector& y) {
  ComplexVector x = y;
  Index pos = 0;
  for (Index n : block_dims) {
    const ComplexMatrix block = unvec(y.segment(pos, n * n), n, n);
    x.segment(pos, n * n) = vec(psd_clip(block));
    pos += n * n;
  }
  for (Index k = pos; k < y.size(); ++k) x(k) = Complex(y(k).real(), 0.0);
  return x;
}

}  // namespace

ComplexVector project_polyhedron(const std::vector<ComplexVector>& normals,
                                 const std::vector<double>& rhs, const ComplexVector& y,
                                 std::vector<double>* multipliers) {
  return PolyhedronProjector(normals, rhs).project(y, multipliers);
}

ComplexVector project_cone(const SplitQpProblem& prob, const ComplexVector& y) {
  return cone_project(prob.psd_block_dims, y);
}

SplitQpResult solve_split_qp(const SplitQpProblem& prob, const SplitQpOptions& opts,
                             const ComplexVector* warm_start) {
  prob.validate();
  const Index dim = prob.dimension();
  const bool has_curvature = prob.curvature.size() != 0;
  const PolyhedronProjector poly(prob.halfspace_normals, prob.halfspace_rhs);

  double sigma = std::max(opts.sigma, 1e-10);
  Eigen::LLT<ComplexMatrix> factor;
  auto refactor = [&]() {
    if (!has_curvature) return;
    factor.compute(hermitian_part(prob.curvature) +
                   sigma * ComplexMatrix::Identity(dim, dim));
    if (factor.info() != Eigen::Success) {
      throw SingularMatrixError("split_qp: curvature matrix is not PSD");
    }
  };
  refactor();

  ComplexVector z = warm_start ? *warm_start : ComplexVector::Zero(dim);
  ComplexVector x0 = z, x1 = z, x2 = z;
  ComplexVector u0 = ComplexVector::Zero(dim), u1 = u0, u2 = u0;
  std::vector<double> poly_multipliers;

  SplitQpResult res;
  double r_pri = 0.0, r_dual = 0.0;
  // Degenerate geometry (a feasible set with nearly no interior) caps the
  // linear convergence rate of any splitting scheme, so a window that sees
  // no meaningful residual progress ends the loop; the caller repairs the
  // leftover violation instead of waiting out the slow tail.
  double best_res = std::numeric_limits<double>::infinity();
  double window_best = best_res;
  constexpr int kStallWindow = 1500;
  const double alpha = std::min(1.99, std::max(0.1, opts.over_relax));
  double gross_eps = 0.0;
  int it = 0;
  for (; it < opts.max_iters; ++it) {
    const ComplexVector rhs0 = sigma * (z - u0) - prob.linear;
    x0 = has_curvature ? factor.solve(rhs0) : ComplexVector(rhs0 / sigma);
    x1 = cone_project(prob.psd_block_dims, z - u1);
    x2 = poly.project(z - u2, &poly_multipliers);

    const ComplexVector z_prev = z;
    const ComplexVector x0r = alpha * x0 + (1.0 - alpha) * z_prev;
    const ComplexVector x1r = alpha * x1 + (1.0 - alpha) * z_prev;
    const ComplexVector x2r = alpha * x2 + (1.0 - alpha) * z_prev;
    z = (x0r + u0 + x1r + u1 + x2r + u2) / 3.0;
    u0 += x0r - z;
    u1 += x1r - z;
    u2 += x2r - z;

    r_pri = std::sqrt((x0 - z).squaredNorm() + (x1 - z).squaredNorm() +
                      (x2 - z).squaredNorm());
    r_dual = sigma * std::sqrt(3.0) * (z - z_prev).norm();
    const double scale =
        std::max({1.0, x0.norm(), x1.norm(), x2.norm(), std::sqrt(3.0) * z.norm()});
    const double eps = opts.tol * std::sqrt(3.0 * dim) + opts.tol * scale;
    gross_eps = 1e-3 * (std::sqrt(3.0 * dim) + scale);
    if (r_pri <= eps && r_dual <= eps) {
      res.converged = true;
      ++it;
      break;
    }
    const double now = std::max(r_pri, r_dual);
    best_res = std::min(best_res, now);
    if ((it + 1) % kStallWindow == 0) {
      if (best_res > 0.98 * window_best && now <= gross_eps) {
        ++it;
        break;  // stalled but already at repairable accuracy
      }
      window_best = best_res;
    }
    if (opts.adapt_sigma && (it + 1) % 20 == 0 && it < 4000) {
      if (r_pri > 10.0 * r_dual) {
        sigma *= 2.0;
        u0 *= 0.5;
        u1 *= 0.5;
        u2 *= 0.5;
        refactor();
      } else if (r_dual > 10.0 * r_pri) {
        sigma *= 0.5;
        u0 *= 2.0;
        u1 *= 2.0;
        u2 *= 2.0;
        refactor();
      }
    }
  }
  if (!res.converged && std::max(r_pri, r_dual) > gross_eps) {
    throw InnerSolveError("split_qp: no convergence after " + std::to_string(it) +
                              " iterations (primal " + std::to_string(r_pri) + ", dual " +
                              std::to_string(r_dual) + ")",
                          r_pri, r_dual);
  }

  // Cyclic corrected projections restore exact membership: the cone-side
  // iterate is returned once its halfspace violation is inside feas_tol.
  ComplexVector y = z;
  ComplexVector p_cone = ComplexVector::Zero(dim), p_poly = ComplexVector::Zero(dim);
  ComplexVector best = cone_project(prob.psd_block_dims, z);
  for (int k = 0; k < opts.polish_iters; ++k) {
    const ComplexVector a = cone_project(prob.psd_block_dims, y + p_cone);
    p_cone = y + p_cone - a;
    best = a;
    if (poly.max_violation(a) <= opts.feas_tol) {
      res.polished = true;
      break;
    }
    const ComplexVector b = poly.project(a + p_poly, nullptr);
    p_poly = a + p_poly - b;
    y = b;
  }

  res.x = best;
  res.iterations = it;
  res.primal_residual = r_pri;
  res.dual_residual = r_dual;
  res.sigma = sigma;
  res.cone_dual = sigma * u1;
  res.halfspace_duals.assign(prob.halfspace_normals.size(), 0.0);
  for (std::size_t m = 0; m < poly_multipliers.size(); ++m) {
    res.halfspace_duals[m] = sigma * poly_multipliers[m];
  }

  // KKT residuals at the returned point with the ADMM dual estimates.
  ComplexVector stat = prob.linear - res.cone_dual;
  if (has_curvature) stat += prob.curvature * res.x;
  double comp = 0.0;
  for (std::size_t m = 0; m < prob.halfspace_normals.size(); ++m) {
    stat += res.halfspace_duals[m] * prob.halfspace_normals[m];
    comp += std::abs(res.halfspace_duals[m] *
                     (real_inner(prob.halfspace_normals[m], res.x) - prob.halfspace_rhs[m]));
  }
  comp += std::abs(real_inner(res.cone_dual, res.x));
  const double scale = std::max({1.0, prob.linear.norm(), res.x.norm()});
  res.kkt_stationarity = stat.norm() / scale;
  res.kkt_complementarity = comp / scale;
  return res;
}

}  // namespace swipt
