#pragma once

#include "swipt/system_model.hpp"

#include <string>
#include <vector>

namespace swipt {

// One accepted iterate. Objectives are in nats (the solvers' internal unit);
// rates are converted to bits here because the trace is a reporting surface.
struct IterationRecord {
  int iter = 0;
  double time_s = 0.0;          // cumulative wall time when the iterate was accepted
  double objective_nats = 0.0;  // value of the objective the solver maximizes
  double sum_rate_bits = 0.0;
  double power = 0.0;
  double multiplier = 0.0;      // power-budget multiplier at this step, if any
  std::vector<double> rates_bits;
  std::vector<double> harvests;
};

struct RunTrace {
  std::string solver;
  bool converged = false;
  double total_time_s = 0.0;
  std::vector<IterationRecord> iterations;
};

struct SolveResult {
  CovarianceTuple covariances;
  RunTrace trace;
};

// Fills a record from the current iterate; `objective_nats` is supplied by
// the caller because each solver maximizes a different scalarization.
IterationRecord make_record(const Scenario& sc, const CovarianceTuple& s, int iter,
                            double time_s, double objective_nats, double multiplier);

}  // namespace swipt
