#include "swipt/baselines.hpp"

#include <Eigen/Cholesky>

#include <chrono>
#include <cmath>
#include <functional>
#include <random>
#include <string>

#include "swipt/barrier_qp.hpp"

namespace swipt {

namespace {

constexpr double kLn2 = 0.6931471805599453;

double elapsed_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ComplexMatrix whitened_gram(const ComplexMatrix& h, const ComplexMatrix& a) {
  Eigen::LLT<ComplexMatrix> llt(hermitian_part(a));
  if (llt.info() != Eigen::Success) {
    throw SingularMatrixError("whitened_gram: matrix is not positive definite");
  }
  return hermitian_part(h.adjoint() * llt.solve(h));
}

ComplexMatrix weighted_harvest_gram(const Scenario& sc) {
  ComplexMatrix g = ComplexMatrix::Zero(sc.n_tx(), sc.n_tx());
  for (int j = 0; j < sc.num_harvest; ++j) {
    const double alpha = sc.harvest_weights.empty() ? 0.0 : sc.harvest_weights[j];
    const ComplexMatrix& h = sc.harvest_channel(j);
    g += alpha * (h.adjoint() * h);
  }
  return hermitian_part(g);
}

double tuple_inner(const CovarianceTuple& a, const CovarianceTuple& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    acc += a[i].cwiseProduct(b[i].conjugate()).sum().real();
  }
  return acc;
}

double tuple_dist(const CovarianceTuple& a, const CovarianceTuple& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]).squaredNorm();
  return std::sqrt(acc);
}

CovarianceTuple tuple_axpy(const CovarianceTuple& s, double step, const CovarianceTuple& d) {
  CovarianceTuple out = s;
  for (std::size_t i = 0; i < s.size(); ++i) out[i] += step * d[i];
  return out;
}

// Projected gradient ascent with Armijo halving. `project` must return a
// feasible point; stationarity is declared when the unit-step gradient
// mapping has norm below tol.
struct PgProblem {
  std::function<double(const CovarianceTuple&)> value;
  std::function<CovarianceTuple(const CovarianceTuple&)> gradient;
  std::function<CovarianceTuple(const CovarianceTuple&)> project;
  double initial_step = 1.0;
  double armijo_slope = 1e-4;
  double stationarity_tol = 1e-5;
  int max_iters = 1000;
  std::function<void(const CovarianceTuple&, double, int)> on_accept;  // may be empty
};

struct PgOutcome {
  CovarianceTuple point;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

PgOutcome pg_ascend(CovarianceTuple s, const PgProblem& p) {
  PgOutcome out;
  double f = p.value(s);
  double eta = p.initial_step;
  for (int it = 1; it <= p.max_iters; ++it) {
    const CovarianceTuple g = p.gradient(s);
    const CovarianceTuple mapped = p.project(tuple_axpy(s, p.initial_step, g));
    const double map_norm = tuple_dist(mapped, s) / p.initial_step;
    if (map_norm <= p.stationarity_tol) {
      out.converged = true;
      break;
    }
    eta = std::min(p.initial_step, 2.0 * eta);
    bool accepted = false;
    while (eta >= 1e-14) {
      const CovarianceTuple cand =
          eta == p.initial_step ? mapped : p.project(tuple_axpy(s, eta, g));
      CovarianceTuple diff = cand;
      for (std::size_t i = 0; i < diff.size(); ++i) diff[i] -= s[i];
      const double slope = tuple_inner(g, diff);
      const double fc = p.value(cand);
      if (fc >= f + p.armijo_slope * slope) {
        s = cand;
        f = fc;
        accepted = true;
        out.iterations = it;
        if (p.on_accept) p.on_accept(s, f, it);
        break;
      }
      eta *= 0.5;
    }
    if (!accepted) break;  // no improving step at the smallest length
  }
  out.point = std::move(s);
  out.value = f;
  return out;
}

// Projection onto the harvest-floor set; interior-point path when the state
// carries a strictly interior point, operator-splitting path otherwise.
CovarianceTuple project_hybrid_set(const Scenario& sc, const CovarianceTuple& s,
                                   ProjectionState* st) {
  const Index n_t = sc.n_tx();
  const Index block = n_t * n_t;
  const Index dim = block * sc.num_info;

  SplitQpProblem prob;
  prob.curvature = 2.0 * ComplexMatrix::Identity(dim, dim);
  prob.linear = -2.0 * stack_tuple(s);
  prob.psd_block_dims.assign(sc.num_info, n_t);

  ComplexVector power_normal(dim);
  const ComplexVector id_vec = vec(ComplexMatrix::Identity(n_t, n_t));
  for (int i = 0; i < sc.num_info; ++i) power_normal.segment(i * block, block) = id_vec;
  prob.halfspace_normals.push_back(power_normal);
  prob.halfspace_rhs.push_back(sc.total_power);
  for (int j = 0; j < sc.num_harvest; ++j) {
    const ComplexMatrix& h = sc.harvest_channel(j);
    const ComplexVector gram_vec = -vec(hermitian_part(h.adjoint() * h));
    ComplexVector a(dim);
    for (int i = 0; i < sc.num_info; ++i) a.segment(i * block, block) = gram_vec;
    prob.halfspace_normals.push_back(a);
    prob.halfspace_rhs.push_back(sc.harvest_targets.empty() ? 0.0 : -sc.harvest_targets[j]);
  }

  if (st && !st->interior.empty()) {
    CovarianceTuple start;
    if (st->prev.size() == static_cast<std::size_t>(sc.num_info)) {
      start.resize(st->prev.size());
      for (std::size_t i = 0; i < start.size(); ++i) {
        start[i] = 0.95 * st->prev[i] + 0.05 * st->interior[i];
      }
    } else {
      start = st->interior;
    }
    BarrierOptions bopts;
    bopts.gap_tol = 1e-8;
    if (st->barrier_t > 1.0) {
      bopts.t_init = std::min(1e7, std::max(1.0, 0.01 * st->barrier_t));
    }
    try {
      const SplitQpResult r = solve_barrier_qp(prob, bopts, stack_tuple(start));
      st->barrier_t = r.sigma;
      CovarianceTuple out = unstack_tuple(r.x, n_t, sc.num_info);
      for (ComplexMatrix& m : out) m = hermitian_part(m);
      st->prev = out;
      return out;
    } catch (const std::exception&) {
      // fall through to the splitting path
    }
  }

  SplitQpOptions opts;
  opts.tol = 1e-8;
  opts.max_iters = 100000;
  if (st && st->sigma > 0.0) opts.sigma = st->sigma;
  ComplexVector warm = stack_tuple(s);
  const SplitQpResult res = solve_split_qp(prob, opts, &warm);
  if (st) st->sigma = res.sigma;
  return unstack_tuple(res.x, n_t, sc.num_info);
}

}  // namespace

ProjectionState make_projection_state(const Scenario& sc) {
  ProjectionState st;
  st.anchor = find_feasible_start(sc);
  std::vector<double> slack(sc.num_harvest, 0.0);
  for (int j = 0; j < sc.num_harvest; ++j) {
    const double target = sc.harvest_targets.empty() ? 0.0 : sc.harvest_targets[j];
    slack[j] = harvested_power(sc, st.anchor, j) - target;
  }
  CovarianceTuple interior;
  if (make_interior_tuple(sc, st.anchor, slack, interior)) {
    st.interior = std::move(interior);
  }
  return st;
}

double objective_nats(const Scenario& sc, const CovarianceTuple& s, Formulation form) {
  return form == Formulation::kSum ? weighted_rate_harvest_objective_nats(sc, s)
                                   : weighted_sum_rate_nats(sc, s);
}

CovarianceTuple objective_gradient(const Scenario& sc, const CovarianceTuple& s,
                                   Formulation form) {
  const Index n_t = sc.n_tx();
  const ComplexMatrix total = covariance_sum(s);
  ComplexMatrix common = ComplexMatrix::Zero(n_t, n_t);
  std::vector<ComplexMatrix> own(sc.num_info);
  for (int i = 0; i < sc.num_info; ++i) {
    const double w = sc.rate_weights[i];
    const ComplexMatrix& h = sc.info_channel(i);
    const Index n_r = h.rows();
    const ComplexMatrix full = ComplexMatrix::Identity(n_r, n_r) + h * total * h.adjoint();
    const ComplexMatrix omega = interference_covariance(sc, s, i);
    const ComplexMatrix grad_signal = whitened_gram(sc.info_channel(i), full);
    const ComplexMatrix price = whitened_gram(sc.info_channel(i), omega);
    common += w * (grad_signal - price);
    own[i] = w * price;
  }
  if (form == Formulation::kSum) common += weighted_harvest_gram(sc);

  CovarianceTuple g;
  for (int i = 0; i < sc.num_info; ++i) g.push_back(hermitian_part(common + own[i]));
  return g;
}

CovarianceTuple project_feasible(const Scenario& sc, const CovarianceTuple& s,
                                 Formulation form, ProjectionState* state) {
  if (form == Formulation::kSum) return project_power_psd(s, sc.total_power);
  return project_hybrid_set(sc, s, state);
}

SolveResult solve_projected_gradient(const Scenario& sc, const GradientOptions& opts) {
  sc.validate();
  const auto t0 = std::chrono::steady_clock::now();

  SolveResult res;
  res.trace.solver = std::string("grad-") +
                     (opts.formulation == Formulation::kSum ? "sum" : "hybrid") + "-" +
                     (opts.init == GradientInit::kIdentity ? "identity" : "ones");

  const double scale = sc.total_power / (sc.num_info * static_cast<double>(sc.n_tx()));
  CovarianceTuple s(sc.num_info,
                    opts.init == GradientInit::kIdentity
                        ? ComplexMatrix(scale * ComplexMatrix::Identity(sc.n_tx(), sc.n_tx()))
                        : ComplexMatrix(scale * ComplexMatrix::Ones(sc.n_tx(), sc.n_tx())));

  ProjectionState pst;
  std::vector<double> anchor_slack(sc.num_harvest, 0.0);
  if (opts.formulation == Formulation::kHybrid) {
    // raises InfeasibleError before any iteration
    pst = make_projection_state(sc);
    for (int j = 0; j < sc.num_harvest; ++j) {
      const double target = sc.harvest_targets.empty() ? 0.0 : sc.harvest_targets[j];
      anchor_slack[j] = harvested_power(sc, pst.anchor, j) - target;
    }
    s = project_feasible(sc, s, opts.formulation, &pst);
  }

  // Under floors the nearest-point projection is itself an iterative solve and
  // its output can violate the constraints at residual level. Reported
  // iterates and the returned point are its exactly feasible repair; the
  // ascent itself keeps using the raw projector output.
  auto repaired = [&](const CovarianceTuple& x) {
    if (opts.formulation == Formulation::kSum) return x;
    CovarianceTuple r = x;
    repair_feasibility(sc, r, pst.anchor, anchor_slack);
    return r;
  };

  PgProblem p;
  p.value = [&](const CovarianceTuple& x) { return objective_nats(sc, x, opts.formulation); };
  p.gradient = [&](const CovarianceTuple& x) {
    return objective_gradient(sc, x, opts.formulation);
  };
  p.project = [&](const CovarianceTuple& x) {
    return project_feasible(sc, x, opts.formulation, &pst);
  };
  p.initial_step = opts.initial_step;
  p.armijo_slope = opts.armijo_slope;
  p.stationarity_tol = opts.stationarity_tol;
  p.max_iters = opts.max_iters;
  p.on_accept = [&](const CovarianceTuple& x, double f, int it) {
    const CovarianceTuple x_rep = repaired(x);
    res.trace.iterations.push_back(make_record(
        sc, x_rep, it, elapsed_since(t0),
        opts.formulation == Formulation::kSum ? f : p.value(x_rep), 0.0));
  };

  const CovarianceTuple s0_rep = repaired(s);
  res.trace.iterations.push_back(
      make_record(sc, s0_rep, 0, elapsed_since(t0), p.value(s0_rep), 0.0));
  PgOutcome out = pg_ascend(std::move(s), p);
  res.trace.converged = out.converged;
  res.trace.total_time_s = elapsed_since(t0);
  res.covariances = repaired(out.point);
  return res;
}

SolveResult solve_mm_linear(const Scenario& sc, const MmLinearOptions& opts,
                            const CovarianceTuple* warm_start) {
  sc.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const bool sum_form = opts.formulation == Formulation::kSum;

  SolveResult res;
  res.trace.solver = sum_form ? "mml-sum" : "mml-hybrid";

  ProjectionState pst;
  std::vector<double> anchor_slack(sc.num_harvest, 0.0);
  if (!sum_form) {
    pst = make_projection_state(sc);
    for (int j = 0; j < sc.num_harvest; ++j) {
      const double target = sc.harvest_targets.empty() ? 0.0 : sc.harvest_targets[j];
      anchor_slack[j] = harvested_power(sc, pst.anchor, j) - target;
    }
  }

  CovarianceTuple s;
  if (warm_start) {
    s = *warm_start;
  } else if (sum_form) {
    s = scaled_identity_tuple(sc);
  } else {
    s = pst.anchor;
  }
  // guards warm starts handed over from a different constraint set
  if (sum_form) s = project_power_psd(s, sc.total_power);

  // `s` is the solver state (expansion point of the next bound); it may carry
  // residual-level constraint violations from the subproblem solver. Reported
  // iterates and the returned solution are its exactly feasible repair, kept
  // separate so the repair correction never feeds back into the ascent.
  auto repaired = [&](const CovarianceTuple& x) {
    if (sum_form) return x;
    CovarianceTuple r = x;
    repair_feasibility(sc, r, pst.anchor, anchor_slack);
    return r;
  };

  const ComplexMatrix harvest_gram = weighted_harvest_gram(sc);
  CovarianceTuple s_rep = repaired(s);
  double obj = objective_nats(sc, s, opts.formulation);
  res.trace.iterations.push_back(make_record(sc, s_rep, 0, elapsed_since(t0),
                                             objective_nats(sc, s_rep, opts.formulation), 0.0));

  SplitQpOptions inner_opts;  // hybrid path; threads the warm quantity across solves
  inner_opts.tol = 1e-9;
  bool inner_clean = true;  // last inner loop stopped on its own gain criterion

  for (int k = 1; k <= opts.max_iters; ++k) {
    // Prices and expansion point are frozen for the inner concave problem.
    std::vector<ComplexMatrix> prices;
    std::vector<double> price_offsets;
    for (int i = 0; i < sc.num_info; ++i) {
      const InterferenceBound ib = linear_interference_bound(sc, s, i);
      prices.push_back(ib.price);
      price_offsets.push_back(ib.offset);
    }
    const CovarianceTuple center = s;

    auto surrogate_value = [&](const CovarianceTuple& x) {
      const ComplexMatrix total = covariance_sum(x);
      double acc = 0.0;
      for (int i = 0; i < sc.num_info; ++i) {
        const double w = sc.rate_weights[i];
        const ComplexMatrix& h = sc.info_channel(i);
        const ComplexMatrix full =
            ComplexMatrix::Identity(h.rows(), h.rows()) + h * total * h.adjoint();
        acc += w * (logdet_hpd(full) - real_trace_product(prices[i], total - x[i]) -
                    price_offsets[i]);
        acc -= opts.prox_weight * (x[i] - center[i]).squaredNorm();
      }
      if (sum_form) acc += real_trace_product(harvest_gram, total);
      return acc;
    };
    auto surrogate_gradient = [&](const CovarianceTuple& x) {
      const ComplexMatrix total = covariance_sum(x);
      ComplexMatrix common = ComplexMatrix::Zero(sc.n_tx(), sc.n_tx());
      for (int i = 0; i < sc.num_info; ++i) {
        const double w = sc.rate_weights[i];
        const ComplexMatrix& h = sc.info_channel(i);
        const ComplexMatrix full =
            ComplexMatrix::Identity(h.rows(), h.rows()) + h * total * h.adjoint();
        common += w * (whitened_gram(h, full) - prices[i]);
      }
      if (sum_form) common += harvest_gram;
      CovarianceTuple g;
      for (int i = 0; i < sc.num_info; ++i) {
        g.push_back(hermitian_part(common + sc.rate_weights[i] * prices[i] -
                                   2.0 * opts.prox_weight * (x[i] - center[i])));
      }
      return g;
    };

    if (sum_form) {
      // Power-ball-only geometry: the exact spectral projection makes
      // projected gradient a reliable ascent on the concave subproblem.
      PgProblem p;
      p.value = surrogate_value;
      p.gradient = surrogate_gradient;
      p.project = [&](const CovarianceTuple& x) {
        return project_feasible(sc, x, opts.formulation, &pst);
      };
      p.initial_step = opts.initial_step;
      p.armijo_slope = opts.armijo_slope;
      p.stationarity_tol = opts.inner_stationarity_tol;
      p.max_iters = opts.max_inner_iters;
      PgOutcome inner = pg_ascend(s, p);
      s = std::move(inner.point);
      s_rep = s;
    } else {
      // Under harvest floors the feasible set can be a sliver whose nearest-
      // point projection arc is not an ascent direction, which stalls
      // projected gradient far from the subproblem optimum. Ascend the
      // frozen-price concave subproblem with quadratic-minorant steps
      // instead: minorize every signal log-det around the inner iterate,
      // keep the frozen prices, and solve the resulting strongly concave
      // program exactly over the constraint set.
      inner_clean = false;
      double inner_val = surrogate_value(s);
      CovarianceTuple y = s;
      CovarianceTuple y_rep = s_rep;
      for (int t = 1; t <= opts.max_inner_iters; ++t) {
        HybridSurrogate hs = hybrid_surrogate(sc, y, std::max(opts.prox_weight, 1e-9));
        for (int i = 0; i < sc.num_info; ++i) {
          hs.interference_price[i] = prices[i];
          hs.net_linear[i] = hermitian_part(hs.shared_linear[i] - prices[i]);
        }
        const QuadSubproblem qp = build_quad_subproblem(sc, hs);
        CovarianceTuple bstart;
        const CovarianceTuple* istart = nullptr;
        if (!pst.interior.empty()) {
          // warm but strictly feasible: mostly the repaired inner iterate,
          // with a sliver of the interior point to clear every boundary
          bstart.resize(y_rep.size());
          for (std::size_t i = 0; i < y_rep.size(); ++i) {
            bstart[i] = 0.95 * y_rep[i] + 0.05 * pst.interior[i];
          }
          istart = &bstart;
        }
        QuadSolve qs = solve_quad_subproblem(qp, inner_opts, &y, istart);
        inner_opts.sigma = qs.sigma;
        y = std::move(qs.covariances);
        y_rep = repaired(y);
        const double val = surrogate_value(y);
        const double gain = val - inner_val;
        inner_val = val;
        if (gain <= 1e-7 * std::max(1.0, std::abs(val))) {
          inner_clean = true;
          break;
        }
      }
      s = std::move(y);
      s_rep = std::move(y_rep);
    }

    const double obj_next = objective_nats(sc, s, opts.formulation);
    res.trace.iterations.push_back(make_record(sc, s_rep, k, elapsed_since(t0),
                                               objective_nats(sc, s_rep, opts.formulation),
                                               0.0));
    // A small step only counts once the inner loop terminated on its own
    // gain criterion rather than the iteration cap.
    const bool done =
        std::abs(obj_next - obj) <= opts.objective_tol * std::max(1.0, std::abs(obj)) &&
        (sum_form || inner_clean);
    obj = obj_next;
    if (done) {
      res.trace.converged = true;
      break;
    }
  }
  res.trace.total_time_s = elapsed_since(t0);
  res.covariances = std::move(s_rep);
  return res;
}

SolveResult solve_block_diagonalization(const Scenario& sc, const BdOptions& opts) {
  sc.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const Index n_t = sc.n_tx();

  SolveResult res;
  res.trace.solver = "bd";

  // Null-space bases of the stacked co-scheduled info channels.
  std::vector<ComplexMatrix> bases;
  for (int i = 0; i < sc.num_info; ++i) {
    Index rows = 0;
    for (int k = 0; k < sc.num_info; ++k) {
      if (k != i) rows += sc.info_channel(k).rows();
    }
    if (rows > n_t) {
      throw BdDimensionError("block diagonalization needs at least " + std::to_string(rows) +
                             " transmit antennas for user " + std::to_string(i));
    }
    ComplexMatrix stacked(rows, n_t);
    Index at = 0;
    for (int k = 0; k < sc.num_info; ++k) {
      if (k == i) continue;
      stacked.middleRows(at, sc.info_channel(k).rows()) = sc.info_channel(k);
      at += sc.info_channel(k).rows();
    }
    ComplexMatrix basis = null_space_basis(stacked, opts.null_tol);
    if (basis.cols() == 0) {
      throw BdDimensionError("co-scheduled channels leave no signaling dimensions for user " +
                             std::to_string(i));
    }
    bases.push_back(std::move(basis));
  }

  std::vector<ComplexMatrix> eff;  // H_i V_i
  for (int i = 0; i < sc.num_info; ++i) eff.push_back(sc.info_channel(i) * bases[i]);

  bool any_floor = false;
  for (double q : sc.harvest_targets) any_floor = any_floor || q > 0.0;

  std::vector<ComplexMatrix> restricted;  // X_i with S_i = V_i X_i V_i^H
  int inner_iters = 0;
  bool converged = true;

  if (!any_floor) {
    // Joint spectral water-filling across the interference-free channels.
    std::vector<EigenPair> decomps;
    double top_level = 0.0;
    for (int i = 0; i < sc.num_info; ++i) {
      decomps.push_back(hermitian_evd(hermitian_part(eff[i].adjoint() * eff[i])));
      for (Index k = 0; k < decomps[i].eigenvalues.size(); ++k) {
        top_level = std::max(top_level, sc.rate_weights[i] * decomps[i].eigenvalues(k));
      }
    }
    auto allocated = [&](double nu) {
      double acc = 0.0;
      for (int i = 0; i < sc.num_info; ++i) {
        const double w = sc.rate_weights[i];
        for (Index k = 0; k < decomps[i].eigenvalues.size(); ++k) {
          const double d = decomps[i].eigenvalues(k);
          if (w > 0.0 && d > 1e-15) acc += std::max(0.0, w / nu - 1.0 / d);
        }
      }
      return acc;
    };
    double level = 0.0;
    if (top_level > 0.0) {
      double hi = top_level, lo = top_level;
      while (allocated(lo) < sc.total_power) lo *= 0.5;
      for (int it = 0; it < 200; ++it) {
        level = 0.5 * (lo + hi);
        const double p = allocated(level);
        if (p > sc.total_power) {
          lo = level;
        } else {
          hi = level;
        }
        if (std::abs(p - sc.total_power) <= 1e-12 * sc.total_power) break;
      }
    }
    for (int i = 0; i < sc.num_info; ++i) {
      RealVector p = RealVector::Zero(decomps[i].eigenvalues.size());
      const double w = sc.rate_weights[i];
      for (Index k = 0; k < p.size(); ++k) {
        const double d = decomps[i].eigenvalues(k);
        if (level > 0.0 && w > 0.0 && d > 1e-15) p(k) = std::max(0.0, w / level - 1.0 / d);
      }
      restricted.push_back(hermitian_part(decomps[i].eigenvectors * p.asDiagonal() *
                                          decomps[i].eigenvectors.adjoint()));
    }
  } else {
    // Harvest floors restrict the null-space powers; feasibility first.
    std::vector<Index> dims;
    Index dim = 0;
    for (int i = 0; i < sc.num_info; ++i) {
      dims.push_back(bases[i].cols());
      dim += bases[i].cols() * bases[i].cols();
    }
    std::vector<std::vector<ComplexMatrix>> harvest_grams(sc.num_harvest);
    for (int j = 0; j < sc.num_harvest; ++j) {
      const ComplexMatrix& h = sc.harvest_channel(j);
      for (int i = 0; i < sc.num_info; ++i) {
        const ComplexMatrix hv = h * bases[i];
        harvest_grams[j].push_back(hermitian_part(hv.adjoint() * hv));
      }
    }
    auto make_halfspaces = [&](SplitQpProblem& prob, Index extra) {
      ComplexVector power_normal = ComplexVector::Zero(dim + extra);
      Index at = 0;
      for (int i = 0; i < sc.num_info; ++i) {
        const Index m = dims[i];
        power_normal.segment(at, m * m) = vec(ComplexMatrix::Identity(m, m));
        at += m * m;
      }
      prob.halfspace_normals.push_back(power_normal);
      prob.halfspace_rhs.push_back(sc.total_power);
      for (int j = 0; j < sc.num_harvest; ++j) {
        ComplexVector a = ComplexVector::Zero(dim + extra);
        at = 0;
        for (int i = 0; i < sc.num_info; ++i) {
          const Index m = dims[i];
          a.segment(at, m * m) = -vec(harvest_grams[j][i]);
          at += m * m;
        }
        if (extra > 0) a(dim) = Complex(1.0, 0.0);
        prob.halfspace_normals.push_back(a);
        prob.halfspace_rhs.push_back(-sc.harvest_targets[j]);
      }
    };

    // Max-slack program over the restricted covariances.
    SplitQpProblem feas;
    feas.linear = ComplexVector::Zero(dim + 1);
    feas.linear(dim) = Complex(-1.0, 0.0);
    feas.psd_block_dims = dims;
    make_halfspaces(feas, 1);
    SplitQpOptions feas_opts;
    feas_opts.tol = 1e-9;
    feas_opts.max_iters = 200000;
    const SplitQpResult feas_res = solve_split_qp(feas, feas_opts, nullptr);
    const double slack = feas_res.x(dim).real();
    double q_scale = 1.0;
    for (double q : sc.harvest_targets) q_scale = std::max(q_scale, std::abs(q));
    if (slack < -1e-7 * q_scale) {
      throw InfeasibleError("harvest floors are unattainable in the zero-forcing subspace "
                            "(max slack " + std::to_string(slack) + ")",
                            slack);
    }

    // Concave restricted problem by projected gradient.
    std::vector<ComplexMatrix> x0;
    Index at = 0;
    for (int i = 0; i < sc.num_info; ++i) {
      x0.push_back(hermitian_part(unvec(feas_res.x.segment(at, dims[i] * dims[i]), dims[i],
                                        dims[i])));
      at += dims[i] * dims[i];
    }

    auto stack_restricted = [&](const std::vector<ComplexMatrix>& x) {
      ComplexVector y(dim);
      Index pos = 0;
      for (int i = 0; i < sc.num_info; ++i) {
        y.segment(pos, dims[i] * dims[i]) = vec(x[i]);
        pos += dims[i] * dims[i];
      }
      return y;
    };
    auto unstack_restricted = [&](const ComplexVector& y) {
      CovarianceTuple out;
      Index pos = 0;
      for (int i = 0; i < sc.num_info; ++i) {
        out.push_back(hermitian_part(unvec(y.segment(pos, dims[i] * dims[i]), dims[i],
                                           dims[i])));
        pos += dims[i] * dims[i];
      }
      return out;
    };

    // Strictly interior restricted tuple from the max-slack point: shrink for
    // power slack, identity floor for positive definiteness, margins checked.
    std::vector<ComplexMatrix> interior_r;
    {
      double eps = 0.01;
      for (int j = 0; j < sc.num_harvest; ++j) {
        const double target = sc.harvest_targets[j];
        if (target <= 0.0) continue;
        double e = 0.0;
        for (int i = 0; i < sc.num_info; ++i) {
          e += real_trace_product(harvest_grams[j][i], x0[i]);
        }
        eps = e > target ? std::min(eps, 0.25 * (e - target) / e) : -1.0;
        if (eps <= 0.0) break;
      }
      if (eps > 1e-12) {
        Index total_dim = 0;
        for (Index m : dims) total_dim += m;
        const double floor_coef = 0.5 * eps * sc.total_power / total_dim;
        std::vector<ComplexMatrix> cand;
        for (int i = 0; i < sc.num_info; ++i) {
          cand.push_back((1.0 - eps) * x0[i] +
                         floor_coef * ComplexMatrix::Identity(dims[i], dims[i]));
        }
        double pw = 0.0;
        for (const ComplexMatrix& m : cand) pw += m.trace().real();
        bool ok = pw < sc.total_power;
        for (int j = 0; ok && j < sc.num_harvest; ++j) {
          double e = 0.0;
          for (int i = 0; i < sc.num_info; ++i) {
            e += real_trace_product(harvest_grams[j][i], cand[i]);
          }
          ok = e > sc.harvest_targets[j];
        }
        if (ok) interior_r = std::move(cand);
      }
    }

    double sigma = 0.0;
    double barrier_t = 0.0;
    std::vector<ComplexMatrix> prev_r;
    auto project_restricted = [&](const CovarianceTuple& x) {
      SplitQpProblem prob;
      ComplexVector y = stack_restricted(x);
      prob.curvature = 2.0 * ComplexMatrix::Identity(dim, dim);
      prob.linear = -2.0 * y;
      prob.psd_block_dims = dims;
      make_halfspaces(prob, 0);
      if (!interior_r.empty()) {
        std::vector<ComplexMatrix> start;
        if (prev_r.size() == dims.size()) {
          for (std::size_t i = 0; i < prev_r.size(); ++i) {
            start.push_back(0.95 * prev_r[i] + 0.05 * interior_r[i]);
          }
        } else {
          start = interior_r;
        }
        BarrierOptions bopts;
        bopts.gap_tol = 1e-8;
        if (barrier_t > 1.0) bopts.t_init = std::min(1e7, std::max(1.0, 0.01 * barrier_t));
        try {
          const SplitQpResult r = solve_barrier_qp(prob, bopts, stack_restricted(start));
          barrier_t = r.sigma;
          CovarianceTuple out = unstack_restricted(r.x);
          prev_r = out;
          return out;
        } catch (const std::exception&) {
          // fall through to the splitting path
        }
      }
      SplitQpOptions popts;
      popts.tol = 1e-8;
      popts.max_iters = 100000;
      if (sigma > 0.0) popts.sigma = sigma;
      const SplitQpResult r = solve_split_qp(prob, popts, &y);
      sigma = r.sigma;
      return unstack_restricted(r.x);
    };

    PgProblem p;
    p.value = [&](const CovarianceTuple& x) {
      double acc = 0.0;
      for (int i = 0; i < sc.num_info; ++i) {
        const ComplexMatrix full =
            ComplexMatrix::Identity(eff[i].rows(), eff[i].rows()) +
            eff[i] * x[i] * eff[i].adjoint();
        acc += sc.rate_weights[i] * logdet_hpd(full);
      }
      return acc;
    };
    p.gradient = [&](const CovarianceTuple& x) {
      CovarianceTuple g;
      for (int i = 0; i < sc.num_info; ++i) {
        const ComplexMatrix full =
            ComplexMatrix::Identity(eff[i].rows(), eff[i].rows()) +
            eff[i] * x[i] * eff[i].adjoint();
        g.push_back(sc.rate_weights[i] * whitened_gram(eff[i], full));
      }
      return g;
    };
    p.project = project_restricted;
    p.stationarity_tol = opts.inner_stationarity_tol;
    p.max_iters = opts.max_inner_iters;

    PgOutcome out = pg_ascend(std::move(x0), p);
    restricted = std::move(out.point);
    inner_iters = out.iterations;
    converged = out.converged;
  }

  CovarianceTuple s;
  for (int i = 0; i < sc.num_info; ++i) {
    s.push_back(hermitian_part(bases[i] * restricted[i] * bases[i].adjoint()));
  }
  const double obj = weighted_sum_rate_nats(sc, s);
  res.trace.iterations.push_back(make_record(sc, s, inner_iters, elapsed_since(t0), obj, 0.0));
  res.trace.converged = converged;
  res.trace.total_time_s = elapsed_since(t0);
  res.covariances = std::move(s);
  return res;
}

double best_ascent_gain(const Scenario& sc, const CovarianceTuple& s, Formulation form,
                        double step, int num_dirs, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto entry = [&]() {
    // Box-Muller on the top bits; exact distribution is irrelevant here.
    const double u1 = (static_cast<double>(rng() >> 11) + 0.5) / 9007199254740992.0;
    const double u2 = (static_cast<double>(rng() >> 11) + 0.5) / 9007199254740992.0;
    const double r = std::sqrt(-2.0 * std::log(u1));
    return Complex(r * std::cos(2 * M_PI * u2), r * std::sin(2 * M_PI * u2));
  };
  const double f0 = objective_nats(sc, s, form);
  ProjectionState pst;
  if (form == Formulation::kHybrid) pst = make_projection_state(sc);
  double best = 0.0;
  for (int d = 0; d < num_dirs; ++d) {
    CovarianceTuple dir;
    double norm_sq = 0.0;
    for (int i = 0; i < sc.num_info; ++i) {
      ComplexMatrix m(sc.n_tx(), sc.n_tx());
      for (Index c = 0; c < m.cols(); ++c) {
        for (Index r = 0; r < m.rows(); ++r) m(r, c) = entry();
      }
      dir.push_back(hermitian_part(m));
      norm_sq += dir.back().squaredNorm();
    }
    const double inv = 1.0 / std::sqrt(std::max(norm_sq, 1e-300));
    for (ComplexMatrix& m : dir) m *= inv;
    const CovarianceTuple cand = project_feasible(sc, tuple_axpy(s, step, dir), form, &pst);
    best = std::max(best, objective_nats(sc, cand, form) - f0);
  }
  return best;
}

}  // namespace swipt
