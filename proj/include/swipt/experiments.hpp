#pragma once

#include "swipt/baselines.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace swipt {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Scenario parameters without a channel realization; channels are drawn per
// seed so that experiments can average over fades.
struct ScenarioTemplate {
  int n_tx = 0;
  std::vector<Index> info_rx;
  std::vector<Index> harvest_rx;
  double total_power = 1.0;
  std::vector<double> rate_weights;
  std::vector<double> harvest_weights;
  std::vector<double> harvest_targets;
  std::vector<double> efficiencies;
  std::vector<double> norm_scales;

  Scenario instantiate(std::uint64_t seed) const;
  int num_info() const { return static_cast<int>(info_rx.size()); }
  int num_harvest() const { return static_cast<int>(harvest_rx.size()); }
};

struct ExperimentConfig {
  ScenarioTemplate scenario;
  std::string type;                   // convergence | rate_power_surface | rate_region
  std::vector<std::string> solvers;   // concrete solver ids after expansion
  std::vector<std::uint64_t> seeds;
  double objective_tol = 1e-6;
  double inner_tol = 1e-7;
  double prox_weight = 1e-6;
  // rate_power_surface: one list of targets per harvest user (grid = product)
  std::vector<std::vector<double>> grid_axes;
  // rate_region: equal-target levels and weight sample count
  std::vector<double> region_levels;
  int region_points = 9;
};

// Parses and validates the JSON config text. Throws ConfigError with a
// human-readable path to the offending key.
ExperimentConfig parse_config(const std::string& json_text);

// Expands solver family tokens ("grad", "mml", "grad-sum", ...) into the
// concrete solver ids used in traces. Unknown tokens throw ConfigError.
std::vector<std::string> expand_solver_tokens(const std::vector<std::string>& tokens,
                                              const std::string& experiment_type);

// One CSV row. The column layout is fixed:
// experiment,solver,seed,iter,time_s,objective,sum_rate_bits,
// rate_u1..uN,harvest_u1..uM,mu,Q_1..Q_M,alpha_1..alpha_M,omega_1..omega_N.
struct CsvRecord {
  std::string experiment;
  std::string solver;
  std::uint64_t seed = 0;
  int iter = 0;
  double time_s = 0.0;
  double objective = 0.0;  // nats, the scalarization the solver maximizes
  double sum_rate_bits = 0.0;
  std::vector<double> rates_bits;
  std::vector<double> harvests;
  double mu = 0.0;
  std::vector<double> targets;
  std::vector<double> alphas;
  std::vector<double> omegas;
};

struct ExperimentOutput {
  int num_info = 0;
  int num_harvest = 0;
  std::vector<CsvRecord> records;
  std::vector<std::pair<std::string, double>> summary;
};

// Runs the configured experiment. Records are sorted on a total order of
// their key columns so the CSV bytes do not depend on scheduling. `threads`
// >= 1 bounds the number of concurrently evaluated work items.
ExperimentOutput run_experiment(const ExperimentConfig& cfg, int threads = 1);

// Header plus one line per record; numbers are printed with %.10g so equal
// runs produce identical bytes (timing column aside).
void write_csv(const ExperimentOutput& out, std::ostream& os);
void write_summary_csv(const ExperimentOutput& out, std::ostream& os);

}  // namespace swipt
