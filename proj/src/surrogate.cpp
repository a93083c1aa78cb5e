#include "swipt/surrogate.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <string>

namespace swipt {

namespace {

// H^H A^{-1} H for Hermitian positive definite A, via Cholesky.
ComplexMatrix channel_whitened_gram(const ComplexMatrix& h, const ComplexMatrix& a) {
  Eigen::LLT<ComplexMatrix> llt(hermitian_part(a));
  if (llt.info() != Eigen::Success) {
    throw SingularMatrixError("channel_whitened_gram: matrix is not positive definite");
  }
  return hermitian_part(h.adjoint() * llt.solve(h));
}

}  // namespace

InterferenceBound linear_interference_bound(const Scenario& sc, const CovarianceTuple& s0,
                                            int i) {
  const ComplexMatrix& h = sc.info_channel(i);
  const ComplexMatrix omega = interference_covariance(sc, s0, i);
  Eigen::LLT<ComplexMatrix> llt(hermitian_part(omega));
  if (llt.info() != Eigen::Success) {
    throw SingularMatrixError("linear_interference_bound: interference covariance not PD");
  }
  const Index n_r = omega.rows();
  const ComplexMatrix omega_inv = llt.solve(ComplexMatrix::Identity(n_r, n_r));
  InterferenceBound out;
  out.price = hermitian_part(h.adjoint() * omega_inv * h);
  out.offset = logdet_hpd(omega) - static_cast<double>(n_r) + omega_inv.trace().real();
  return out;
}

double signal_curvature(const ComplexMatrix& h) {
  const double s = max_singular_value(h);
  return 0.5 * s * s * s * s;
}

double decoupled_curvature(const ComplexMatrix& h, int num_info) {
  return static_cast<double>(num_info) * static_cast<double>(num_info) * signal_curvature(h);
}

double HybridSurrogate::value(const Scenario& sc, const CovarianceTuple& s) const {
  const ComplexMatrix total = covariance_sum(s);
  const double total_sq = real_trace_product(total, total);
  double acc = 0.0;
  for (int i = 0; i < sc.num_info; ++i) {
    const double w = sc.rate_weights[i];
    acc += w * (real_trace_product(net_linear[i], total) - curvature[i] * total_sq +
                real_trace_product(interference_price[i], s[i]) + offset[i]);
    acc -= prox_weight * (s[i] - expansion[i]).squaredNorm();
  }
  return acc;
}

HybridSurrogate hybrid_surrogate(const Scenario& sc, const CovarianceTuple& s0,
                                 double prox_weight,
                                 const std::vector<double>& curvature_override) {
  if (static_cast<int>(s0.size()) != sc.num_info) {
    throw std::invalid_argument("hybrid_surrogate: tuple size does not match info users");
  }
  if (!curvature_override.empty() &&
      static_cast<int>(curvature_override.size()) != sc.num_info) {
    throw std::invalid_argument("hybrid_surrogate: curvature override size mismatch");
  }
  if (prox_weight < 0.0) {
    throw std::invalid_argument("hybrid_surrogate: proximal weight must be nonnegative");
  }
  const ComplexMatrix total0 = covariance_sum(s0);
  const double total0_sq = real_trace_product(total0, total0);

  HybridSurrogate out;
  out.expansion = s0;
  out.prox_weight = prox_weight;
  for (int i = 0; i < sc.num_info; ++i) {
    const ComplexMatrix& h = sc.info_channel(i);
    const Index n_r = h.rows();
    const ComplexMatrix full0 =
        ComplexMatrix::Identity(n_r, n_r) + h * total0 * h.adjoint();
    const ComplexMatrix grad = channel_whitened_gram(h, full0);
    const InterferenceBound ib = linear_interference_bound(sc, s0, i);
    const double gam =
        curvature_override.empty() ? signal_curvature(h) : curvature_override[i];
    const double signal_offset = logdet_hpd(full0) - real_trace_product(grad, total0) -
                                 gam * total0_sq;
    out.signal_gradient.push_back(grad);
    out.interference_price.push_back(ib.price);
    out.shared_linear.push_back(grad + 2.0 * gam * total0);
    out.net_linear.push_back(out.shared_linear.back() - ib.price);
    out.curvature.push_back(gam);
    out.offset.push_back(signal_offset - ib.offset);
  }
  return out;
}

double SumSurrogate::value(const CovarianceTuple& s) const {
  double acc = offset;
  for (std::size_t i = 0; i < s.size(); ++i) {
    acc += real_trace_product(linear[i], s[i]) - curvature * real_trace_product(s[i], s[i]);
  }
  return acc;
}

SumSurrogate sum_surrogate(const Scenario& sc, const CovarianceTuple& s0) {
  if (static_cast<int>(s0.size()) != sc.num_info) {
    throw std::invalid_argument("sum_surrogate: tuple size does not match info users");
  }
  const Index n_t = sc.n_tx();
  const ComplexMatrix total0 = covariance_sum(s0);

  ComplexMatrix harvest_gram = ComplexMatrix::Zero(n_t, n_t);
  for (int j = 0; j < sc.num_harvest; ++j) {
    const double alpha = sc.harvest_weights.empty() ? 0.0 : sc.harvest_weights[j];
    const ComplexMatrix& h = sc.harvest_channel(j);
    harvest_gram += alpha * (h.adjoint() * h);
  }
  harvest_gram = hermitian_part(harvest_gram);

  ComplexMatrix grad_total = ComplexMatrix::Zero(n_t, n_t);
  ComplexMatrix price_total = ComplexMatrix::Zero(n_t, n_t);
  std::vector<ComplexMatrix> prices;
  double beta = 0.0;
  double offset = 0.0;
  for (int i = 0; i < sc.num_info; ++i) {
    const double w = sc.rate_weights[i];
    const ComplexMatrix& h = sc.info_channel(i);
    const Index n_r = h.rows();
    const ComplexMatrix full0 =
        ComplexMatrix::Identity(n_r, n_r) + h * total0 * h.adjoint();
    const ComplexMatrix grad = channel_whitened_gram(h, full0);
    const InterferenceBound ib = linear_interference_bound(sc, s0, i);
    grad_total += w * grad;
    price_total += w * ib.price;
    prices.push_back(ib.price);
    beta += w * decoupled_curvature(h, sc.num_info);
    offset += w * (logdet_hpd(full0) - ib.offset);
  }

  SumSurrogate out;
  out.expansion = s0;
  out.curvature = beta;
  out.harvest_gram = harvest_gram;
  offset -= real_trace_product(grad_total, total0);
  for (int i = 0; i < sc.num_info; ++i) {
    out.linear.push_back(hermitian_part(grad_total + 2.0 * beta * s0[i] -
                                        (price_total - sc.rate_weights[i] * prices[i]) +
                                        harvest_gram));
    offset -= beta * real_trace_product(s0[i], s0[i]);
  }
  out.offset = offset;
  return out;
}

ComplexVector stack_tuple(const CovarianceTuple& s) {
  if (s.empty()) throw std::invalid_argument("stack_tuple: empty tuple");
  const Index block = s[0].size();
  ComplexVector x(block * static_cast<Index>(s.size()));
  for (std::size_t i = 0; i < s.size(); ++i) {
    x.segment(static_cast<Index>(i) * block, block) = vec(s[i]);
  }
  return x;
}

CovarianceTuple unstack_tuple(const ComplexVector& x, Index n_tx, int num_info) {
  const Index block = n_tx * n_tx;
  if (x.size() != block * num_info) {
    throw std::invalid_argument("unstack_tuple: size mismatch");
  }
  CovarianceTuple s;
  for (int i = 0; i < num_info; ++i) {
    s.push_back(unvec(x.segment(static_cast<Index>(i) * block, block), n_tx, n_tx));
  }
  return s;
}

ComplexMatrix QuadSubproblem::curvature_matrix() const {
  const Index block = n_tx * n_tx;
  const Index dim = block * num_info;
  ComplexMatrix c = prox_weight * ComplexMatrix::Identity(dim, dim);
  for (int p = 0; p < num_info; ++p) {
    for (int q = 0; q < num_info; ++q) {
      c.block(p * block, q * block, block, block) +=
          coupling * ComplexMatrix::Identity(block, block);
    }
  }
  return c;
}

namespace {

// C has two eigenvalues: num_info * coupling + prox (on the block-mean
// subspace) and prox (on its complement). Apply phi to each.
ComplexVector apply_spectral(const QuadSubproblem& qp, const ComplexVector& x,
                             double phi_mean, double phi_rest) {
  const Index block = qp.n_tx * qp.n_tx;
  ComplexVector mean = ComplexVector::Zero(block);
  for (int i = 0; i < qp.num_info; ++i) mean += x.segment(i * block, block);
  mean /= static_cast<double>(qp.num_info);
  ComplexVector out(x.size());
  for (int i = 0; i < qp.num_info; ++i) {
    out.segment(i * block, block) =
        phi_mean * mean + phi_rest * (x.segment(i * block, block) - mean);
  }
  return out;
}

void require_strict_convexity(const QuadSubproblem& qp) {
  const double top = qp.num_info * qp.coupling + qp.prox_weight;
  if (qp.prox_weight > 0.0 && top > 0.0) return;
  if (qp.num_info == 1 && top > 0.0) return;
  throw CurvatureError(
      "quadratic subproblem is singular: a positive proximal weight is required when "
      "several info users share the curvature");
}

}  // namespace

ComplexMatrix QuadSubproblem::curvature_sqrt() const {
  require_strict_convexity(*this);
  const Index block = n_tx * n_tx;
  const Index dim = block * num_info;
  const double sq_mean = std::sqrt(num_info * coupling + prox_weight);
  const double sq_rest = std::sqrt(prox_weight);
  ComplexMatrix c(dim, dim);
  for (Index k = 0; k < dim; ++k) {
    c.col(k) = apply_spectral(*this, ComplexVector::Unit(dim, k), sq_mean, sq_rest);
  }
  return c;
}

ComplexVector QuadSubproblem::target() const {
  require_strict_convexity(*this);
  const double inv_mean = 1.0 / std::sqrt(num_info * coupling + prox_weight);
  const double inv_rest = prox_weight > 0.0 ? 1.0 / std::sqrt(prox_weight) : 0.0;
  return apply_spectral(*this, linear, inv_mean, inv_rest);
}

double QuadSubproblem::quadratic_value(const ComplexVector& x) const {
  const Index block = n_tx * n_tx;
  ComplexVector sum = ComplexVector::Zero(block);
  for (int i = 0; i < num_info; ++i) sum += x.segment(i * block, block);
  const double quad = coupling * sum.squaredNorm() + prox_weight * x.squaredNorm();
  return -quad + 2.0 * linear.dot(x).real();
}

QuadSubproblem build_quad_subproblem(const Scenario& sc, const HybridSurrogate& hs) {
  QuadSubproblem qp;
  qp.n_tx = sc.n_tx();
  qp.num_info = sc.num_info;
  qp.prox_weight = hs.prox_weight;
  qp.power_budget = sc.total_power;
  qp.coupling = 0.0;
  qp.constant = 0.0;

  const Index block = qp.n_tx * qp.n_tx;
  ComplexMatrix net_weighted = ComplexMatrix::Zero(qp.n_tx, qp.n_tx);
  for (int i = 0; i < sc.num_info; ++i) {
    const double w = sc.rate_weights[i];
    qp.coupling += w * hs.curvature[i];
    net_weighted += w * hs.net_linear[i];
    qp.constant += w * hs.offset[i];
    qp.constant -= hs.prox_weight * hs.expansion[i].squaredNorm();
  }
  qp.linear.resize(block * sc.num_info);
  const ComplexVector net_vec = vec(net_weighted);
  for (int i = 0; i < sc.num_info; ++i) {
    qp.linear.segment(i * block, block) =
        0.5 * net_vec + 0.5 * sc.rate_weights[i] * vec(hs.interference_price[i]) +
        hs.prox_weight * vec(hs.expansion[i]);
  }

  for (int j = 0; j < sc.num_harvest; ++j) {
    const ComplexMatrix& h = sc.harvest_channel(j);
    qp.harvest_grams.push_back(hermitian_part(h.adjoint() * h));
    qp.harvest_targets.push_back(sc.harvest_targets.empty() ? 0.0 : sc.harvest_targets[j]);
  }
  require_strict_convexity(qp);
  return qp;
}

}  // namespace swipt
