#include "swipt/experiments.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <ostream>
#include <set>
#include <thread>
#include <tuple>

namespace swipt {

namespace {

using nlohmann::json;

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

template <typename F>
void run_parallel(int threads, int n, F&& fn) {
  if (threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  const int workers = std::min(threads, n);
  pool.reserve(workers);
  for (int t = 0; t < workers; ++t) {
    pool.emplace_back([&]() {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= n) return;
        fn(i);
      }
    });
  }
  for (std::thread& th : pool) th.join();
}

std::vector<double> get_doubles(const json& j, const std::string& key) {
  std::vector<double> out;
  for (const auto& v : j.at(key)) {
    if (!v.is_number()) throw ConfigError("config: " + key + " must hold numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

struct SolverRun {
  RunTrace trace;
  CovarianceTuple solution;
};

SolverRun dispatch_solver(const Scenario& sc, const std::string& id,
                          const ExperimentConfig& cfg, const CovarianceTuple* warm) {
  SolverRun out;
  if (id == "mmq-sum") {
    SumSolverOptions o;
    o.objective_tol = cfg.objective_tol;
    SolveResult r = solve_sum(sc, o, warm);
    out.trace = std::move(r.trace);
    out.solution = std::move(r.covariances);
  } else if (id == "mmq-hybrid") {
    HybridSolverOptions o;
    o.objective_tol = cfg.objective_tol;
    o.prox_weight = cfg.prox_weight;
    o.inner_tol = cfg.inner_tol;
    HybridResult r = solve_hybrid(sc, o, warm);
    out.trace = std::move(r.trace);
    out.solution = std::move(r.covariances);
  } else if (id == "mml-hybrid" || id == "mml-sum") {
    MmLinearOptions o;
    o.formulation = id == "mml-sum" ? Formulation::kSum : Formulation::kHybrid;
    o.objective_tol = cfg.objective_tol;
    o.prox_weight = cfg.prox_weight;
    SolveResult r = solve_mm_linear(sc, o, warm);
    out.trace = std::move(r.trace);
    out.solution = std::move(r.covariances);
  } else if (id.rfind("grad-", 0) == 0) {
    GradientOptions o;
    o.formulation =
        id.find("-sum") != std::string::npos ? Formulation::kSum : Formulation::kHybrid;
    o.init = id.find("-ones") != std::string::npos ? GradientInit::kAllOnes
                                                   : GradientInit::kIdentity;
    SolveResult r = solve_projected_gradient(sc, o);
    out.trace = std::move(r.trace);
    out.solution = std::move(r.covariances);
  } else if (id == "bd") {
    SolveResult r = solve_block_diagonalization(sc);
    out.trace = std::move(r.trace);
    out.solution = std::move(r.covariances);
  } else {
    throw ConfigError("config: unknown solver id '" + id + "'");
  }
  return out;
}

CsvRecord record_from(const ExperimentConfig& cfg, const Scenario& sc,
                      const std::string& solver, std::uint64_t seed,
                      const IterationRecord& it) {
  CsvRecord row;
  row.experiment = cfg.type;
  row.solver = solver;
  row.seed = seed;
  row.iter = it.iter;
  row.time_s = it.time_s;
  row.objective = it.objective_nats;
  row.sum_rate_bits = it.sum_rate_bits;
  row.rates_bits = it.rates_bits;
  row.harvests = it.harvests;
  row.mu = it.multiplier;
  row.targets = sc.harvest_targets;
  row.alphas = sc.harvest_weights;
  row.omegas = sc.rate_weights;
  return row;
}

CsvRecord nan_record(const ExperimentConfig& cfg, const Scenario& sc,
                     const std::string& solver, std::uint64_t seed) {
  CsvRecord row;
  row.experiment = cfg.type;
  row.solver = solver;
  row.seed = seed;
  row.iter = 0;
  row.time_s = 0.0;
  row.objective = kNan;
  row.sum_rate_bits = kNan;
  row.rates_bits.assign(sc.num_info, kNan);
  row.harvests.assign(sc.num_harvest, kNan);
  row.mu = kNan;
  row.targets = sc.harvest_targets;
  row.alphas = sc.harvest_weights;
  row.omegas = sc.rate_weights;
  return row;
}

void run_convergence(const ExperimentConfig& cfg, int threads, ExperimentOutput& out) {
  const int n_seeds = static_cast<int>(cfg.seeds.size());
  std::vector<std::vector<CsvRecord>> slots(n_seeds);

  run_parallel(threads, n_seeds, [&](int si) {
    const std::uint64_t seed = cfg.seeds[si];
    Scenario sc = cfg.scenario.instantiate(seed);

    // Matched operating point: unless the config pins harvest floors, the
    // weighted-sum solution defines the floors the constrained solvers get.
    bool pinned = false;
    for (double q : sc.harvest_targets) pinned = pinned || q > 0.0;
    Scenario sc_sum = sc;
    std::fill(sc_sum.harvest_targets.begin(), sc_sum.harvest_targets.end(), 0.0);
    SolverRun sum_run = dispatch_solver(sc_sum, "mmq-sum", cfg, nullptr);
    if (!pinned) {
      for (int j = 0; j < sc.num_harvest; ++j) {
        sc.harvest_targets[j] = harvested_power(sc_sum, sum_run.solution, j);
      }
    }
    sc_sum.harvest_targets = sc.harvest_targets;  // reporting only

    for (const std::string& id : cfg.solvers) {
      if (id == "mmq-sum") {
        for (const IterationRecord& it : sum_run.trace.iterations) {
          slots[si].push_back(record_from(cfg, sc_sum, "mmq-sum", seed, it));
        }
        continue;
      }
      const bool sum_family = id == "mml-sum" || id.rfind("grad-sum", 0) == 0;
      const Scenario& run_sc = sum_family ? sc_sum : sc;
      SolverRun r = dispatch_solver(run_sc, id, cfg, nullptr);
      for (const IterationRecord& it : r.trace.iterations) {
        slots[si].push_back(record_from(cfg, run_sc, id, seed, it));
      }
    }
  });

  for (auto& v : slots) {
    out.records.insert(out.records.end(), v.begin(), v.end());
  }
}

void run_surface(const ExperimentConfig& cfg, int threads, ExperimentOutput& out) {
  // Grid rows share every axis except the first, which is swept from the
  // tightest floor downward so each solution warm-starts the next point.
  std::vector<double> axis0 = cfg.grid_axes.at(0);
  std::sort(axis0.begin(), axis0.end(), std::greater<double>());
  std::vector<std::vector<double>> rows{{}};
  for (std::size_t a = 1; a < cfg.grid_axes.size(); ++a) {
    std::vector<std::vector<double>> next;
    for (const auto& r : rows) {
      for (double v : cfg.grid_axes[a]) {
        auto rr = r;
        rr.push_back(v);
        next.push_back(std::move(rr));
      }
    }
    rows = std::move(next);
  }

  struct Item {
    std::uint64_t seed;
    std::vector<double> tail;
  };
  std::vector<Item> items;
  for (std::uint64_t seed : cfg.seeds) {
    for (const auto& r : rows) items.push_back({seed, r});
  }
  std::vector<std::vector<CsvRecord>> slots(items.size());

  run_parallel(threads, static_cast<int>(items.size()), [&](int wi) {
    const Item& item = items[wi];
    Scenario sc = cfg.scenario.instantiate(item.seed);
    CovarianceTuple warm;
    bool have_warm = false;
    for (double q0 : axis0) {
      sc.harvest_targets.assign(sc.num_harvest, 0.0);
      sc.harvest_targets[0] = q0;
      for (std::size_t a = 0; a < item.tail.size(); ++a) {
        sc.harvest_targets[a + 1] = item.tail[a];
      }
      for (const std::string& id : cfg.solvers) {
        try {
          const CovarianceTuple* w =
              (id == "mmq-hybrid" && have_warm) ? &warm : nullptr;
          SolverRun r = dispatch_solver(sc, id, cfg, w);
          slots[wi].push_back(
              record_from(cfg, sc, id, item.seed, r.trace.iterations.back()));
          if (id == "mmq-hybrid") {
            warm = std::move(r.solution);
            have_warm = true;
          }
        } catch (const InfeasibleError&) {
          slots[wi].push_back(nan_record(cfg, sc, id, item.seed));
        } catch (const BdDimensionError&) {
          slots[wi].push_back(nan_record(cfg, sc, id, item.seed));
        }
      }
    }
  });

  for (auto& v : slots) out.records.insert(out.records.end(), v.begin(), v.end());

  // Dominance summary over grid points where both solvers produced a value.
  int both = 0, mm_wins = 0;
  std::vector<double> ratios;
  for (const CsvRecord& a : out.records) {
    if (a.solver != "mmq-hybrid" || !std::isfinite(a.sum_rate_bits)) continue;
    for (const CsvRecord& b : out.records) {
      if (b.solver != "bd" || b.seed != a.seed || b.targets != a.targets) continue;
      if (!std::isfinite(b.sum_rate_bits)) continue;
      ++both;
      if (a.sum_rate_bits >= b.sum_rate_bits - 1e-9) ++mm_wins;
      if (b.sum_rate_bits > 1e-12) ratios.push_back(a.sum_rate_bits / b.sum_rate_bits);
    }
  }
  out.summary.emplace_back("surface_points_compared", both);
  out.summary.emplace_back("mm_ge_bd_fraction", both > 0 ? double(mm_wins) / both : kNan);
  if (!ratios.empty()) {
    std::nth_element(ratios.begin(), ratios.begin() + ratios.size() / 2, ratios.end());
    out.summary.emplace_back("mm_over_bd_median_ratio", ratios[ratios.size() / 2]);
  }
}

double hull_area(std::vector<std::pair<double, double>> pts) {
  pts.emplace_back(0.0, 0.0);
  double mx = 0.0, my = 0.0;
  for (auto& p : pts) {
    mx = std::max(mx, p.first);
    my = std::max(my, p.second);
  }
  pts.emplace_back(mx, 0.0);
  pts.emplace_back(0.0, my);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return 0.0;
  auto cross = [](const std::pair<double, double>& o, const std::pair<double, double>& a,
                  const std::pair<double, double>& b) {
    return (a.first - o.first) * (b.second - o.second) -
           (a.second - o.second) * (b.first - o.first);
  };
  std::vector<std::pair<double, double>> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  const std::size_t lower = k + 1;
  for (auto it = pts.rbegin(); it != pts.rend(); ++it) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], *it) <= 0) --k;
    hull[k++] = *it;
  }
  hull.resize(k - 1);
  double area = 0.0;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const auto& a = hull[i];
    const auto& b = hull[(i + 1) % hull.size()];
    area += a.first * b.second - b.first * a.second;
  }
  return 0.5 * std::abs(area);
}

void run_region(const ExperimentConfig& cfg, int threads, ExperimentOutput& out) {
  if (cfg.scenario.num_info() != 2) {
    throw ConfigError("config: rate_region requires exactly two info users");
  }
  std::vector<double> levels = cfg.region_levels;
  std::sort(levels.begin(), levels.end(), std::greater<double>());
  const int points = std::max(2, cfg.region_points);

  struct Item {
    std::uint64_t seed;
    int k;
  };
  std::vector<Item> items;
  for (std::uint64_t seed : cfg.seeds) {
    for (int k = 0; k < points; ++k) items.push_back({seed, k});
  }
  std::vector<std::vector<CsvRecord>> slots(items.size());

  run_parallel(threads, static_cast<int>(items.size()), [&](int wi) {
    const Item& item = items[wi];
    const double t = static_cast<double>(item.k) / (points - 1);
    Scenario sc = cfg.scenario.instantiate(item.seed);
    sc.rate_weights = {1.0 - t, t};
    CovarianceTuple warm;
    bool have_warm = false;
    for (double level : levels) {
      sc.harvest_targets.assign(sc.num_harvest, level);
      try {
        SolverRun r =
            dispatch_solver(sc, "mmq-hybrid", cfg, have_warm ? &warm : nullptr);
        slots[wi].push_back(
            record_from(cfg, sc, "mmq-hybrid", item.seed, r.trace.iterations.back()));
        warm = std::move(r.solution);
        have_warm = true;
      } catch (const InfeasibleError&) {
        slots[wi].push_back(nan_record(cfg, sc, "mmq-hybrid", item.seed));
      }
    }
  });

  for (auto& v : slots) out.records.insert(out.records.end(), v.begin(), v.end());

  // Region area per level (median across seeds), plus successive decrements:
  // the shrinkage accelerates with the floor level.
  std::sort(levels.begin(), levels.end());
  std::vector<double> med_areas;
  for (double level : levels) {
    std::vector<double> areas;
    for (std::uint64_t seed : cfg.seeds) {
      std::vector<std::pair<double, double>> pts;
      for (const CsvRecord& r : out.records) {
        if (r.seed != seed || r.targets.empty() || r.targets[0] != level) continue;
        if (r.rates_bits.size() == 2 && std::isfinite(r.rates_bits[0]) &&
            std::isfinite(r.rates_bits[1])) {
          pts.emplace_back(r.rates_bits[0], r.rates_bits[1]);
        }
      }
      if (!pts.empty()) areas.push_back(hull_area(std::move(pts)));
    }
    if (areas.empty()) {
      med_areas.push_back(kNan);
      continue;
    }
    std::nth_element(areas.begin(), areas.begin() + areas.size() / 2, areas.end());
    med_areas.push_back(areas[areas.size() / 2]);
  }
  for (std::size_t k = 0; k < levels.size(); ++k) {
    out.summary.emplace_back("region_area[Q=" + num(levels[k]) + "]", med_areas[k]);
    if (k > 0) {
      out.summary.emplace_back("region_area_decrement[Q=" + num(levels[k]) + "]",
                               med_areas[k - 1] - med_areas[k]);
    }
  }
}

}  // namespace

Scenario ScenarioTemplate::instantiate(std::uint64_t seed) const {
  std::vector<Index> all_rx = info_rx;
  all_rx.insert(all_rx.end(), harvest_rx.begin(), harvest_rx.end());
  Scenario sc;
  sc.channels = generate_channels(seed, n_tx, all_rx, norm_scales);
  sc.num_info = num_info();
  sc.num_harvest = num_harvest();
  sc.total_power = total_power;
  sc.rate_weights = rate_weights;
  sc.harvest_weights = harvest_weights;
  sc.harvest_targets = harvest_targets;
  sc.efficiencies = efficiencies;
  sc.seed = seed;
  sc.validate();
  return sc;
}

std::vector<std::string> expand_solver_tokens(const std::vector<std::string>& tokens,
                                              const std::string& experiment_type) {
  static const std::set<std::string> exact = {
      "mmq-sum",       "mmq-hybrid",         "mml-hybrid",
      "mml-sum",       "bd",                 "grad-sum-identity",
      "grad-sum-ones", "grad-hybrid-identity", "grad-hybrid-ones"};
  std::vector<std::string> out;
  auto add = [&](const std::string& s) {
    if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
  };
  std::vector<std::string> work = tokens;
  if (work.empty()) {
    if (experiment_type == "convergence") {
      work = {"mmq-sum", "mmq-hybrid", "mml-hybrid", "grad"};
    } else if (experiment_type == "rate_power_surface") {
      work = {"mmq-hybrid", "bd"};
    } else {
      work = {"mmq-hybrid"};
    }
  }
  for (const std::string& t : work) {
    if (exact.count(t)) {
      add(t);
    } else if (t == "mml") {
      add("mml-hybrid");
      add("mml-sum");
    } else if (t == "grad") {
      add("grad-sum-identity");
      add("grad-sum-ones");
      add("grad-hybrid-identity");
      add("grad-hybrid-ones");
    } else if (t == "grad-sum") {
      add("grad-sum-identity");
      add("grad-sum-ones");
    } else if (t == "grad-hybrid") {
      add("grad-hybrid-identity");
      add("grad-hybrid-ones");
    } else {
      throw ConfigError("config: unknown solver token '" + t + "'");
    }
  }
  return out;
}

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  try {
    ExperimentConfig cfg;
    const json& sj = j.at("scenario");
    ScenarioTemplate& st = cfg.scenario;
    st.n_tx = sj.at("n_tx").get<int>();
    for (const auto& v : sj.at("info_rx")) st.info_rx.push_back(v.get<int>());
    if (sj.contains("harvest_rx")) {
      for (const auto& v : sj.at("harvest_rx")) st.harvest_rx.push_back(v.get<int>());
    }
    st.total_power = sj.value("total_power", 1.0);
    st.rate_weights = sj.contains("rate_weights") ? get_doubles(sj, "rate_weights")
                                                  : std::vector<double>(st.info_rx.size(), 1.0);
    st.harvest_weights = sj.contains("harvest_weights")
                             ? get_doubles(sj, "harvest_weights")
                             : std::vector<double>(st.harvest_rx.size(), 0.0);
    st.harvest_targets = sj.contains("harvest_targets")
                             ? get_doubles(sj, "harvest_targets")
                             : std::vector<double>(st.harvest_rx.size(), 0.0);
    st.efficiencies = sj.contains("efficiencies")
                          ? get_doubles(sj, "efficiencies")
                          : std::vector<double>(st.harvest_rx.size(), 1.0);
    if (sj.contains("norm_scales")) st.norm_scales = get_doubles(sj, "norm_scales");

    const json& ej = j.at("experiment");
    cfg.type = ej.at("type").get<std::string>();
    if (cfg.type != "convergence" && cfg.type != "rate_power_surface" &&
        cfg.type != "rate_region") {
      throw ConfigError("config: unknown experiment type '" + cfg.type + "'");
    }
    std::vector<std::string> tokens;
    if (ej.contains("solvers")) {
      for (const auto& v : ej.at("solvers")) tokens.push_back(v.get<std::string>());
    }
    cfg.solvers = expand_solver_tokens(tokens, cfg.type);
    if (ej.contains("seeds")) {
      for (const auto& v : ej.at("seeds")) cfg.seeds.push_back(v.get<std::uint64_t>());
    } else {
      cfg.seeds.push_back(sj.value("seed", 1));
    }
    if (ej.contains("tolerances")) {
      const json& tj = ej.at("tolerances");
      cfg.objective_tol = tj.value("objective", 1e-6);
      cfg.inner_tol = tj.value("inner", 1e-7);
      cfg.prox_weight = tj.value("prox_weight", 1e-6);
    }
    if (ej.contains("grid")) {
      for (const auto& axis : ej.at("grid").at("axes")) {
        std::vector<double> vals;
        for (const auto& v : axis) vals.push_back(v.get<double>());
        if (vals.empty()) throw ConfigError("config: empty grid axis");
        cfg.grid_axes.push_back(std::move(vals));
      }
    }
    if (ej.contains("region")) {
      const json& rj = ej.at("region");
      cfg.region_levels = get_doubles(rj, "levels");
      cfg.region_points = rj.value("points", 9);
    }

    if (cfg.type == "rate_power_surface") {
      if (cfg.grid_axes.size() != st.harvest_rx.size() || cfg.grid_axes.empty()) {
        throw ConfigError("config: rate_power_surface needs one grid axis per harvest user");
      }
    }
    if (cfg.type == "rate_region" && cfg.region_levels.empty()) {
      throw ConfigError("config: rate_region needs region.levels");
    }
    // Instantiating validates dimensions, weights, and power at parse time.
    cfg.scenario.instantiate(cfg.seeds.empty() ? 1 : cfg.seeds.front());
    return cfg;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

ExperimentOutput run_experiment(const ExperimentConfig& cfg, int threads) {
  ExperimentOutput out;
  out.num_info = cfg.scenario.num_info();
  out.num_harvest = cfg.scenario.num_harvest();
  if (cfg.type == "convergence") {
    run_convergence(cfg, threads, out);
  } else if (cfg.type == "rate_power_surface") {
    run_surface(cfg, threads, out);
  } else if (cfg.type == "rate_region") {
    run_region(cfg, threads, out);
  } else {
    throw ConfigError("config: unknown experiment type '" + cfg.type + "'");
  }

  std::sort(out.records.begin(), out.records.end(),
            [](const CsvRecord& a, const CsvRecord& b) {
              auto key = [](const CsvRecord& r) {
                return std::tie(r.experiment, r.solver, r.seed, r.targets, r.omegas,
                                r.alphas, r.iter);
              };
              return key(a) < key(b);
            });
  return out;
}

void write_csv(const ExperimentOutput& out, std::ostream& os) {
  os << "experiment,solver,seed,iter,time_s,objective,sum_rate_bits";
  for (int i = 1; i <= out.num_info; ++i) os << ",rate_u" << i;
  for (int j = 1; j <= out.num_harvest; ++j) os << ",harvest_u" << j;
  os << ",mu";
  for (int j = 1; j <= out.num_harvest; ++j) os << ",Q_" << j;
  for (int j = 1; j <= out.num_harvest; ++j) os << ",alpha_" << j;
  for (int i = 1; i <= out.num_info; ++i) os << ",omega_" << i;
  os << "\n";
  for (const CsvRecord& r : out.records) {
    os << r.experiment << "," << r.solver << "," << r.seed << "," << r.iter << ","
       << num(r.time_s) << "," << num(r.objective) << "," << num(r.sum_rate_bits);
    auto emit = [&](const std::vector<double>& v, int count) {
      for (int k = 0; k < count; ++k) {
        os << "," << (k < static_cast<int>(v.size()) ? num(v[k]) : "nan");
      }
    };
    emit(r.rates_bits, out.num_info);
    emit(r.harvests, out.num_harvest);
    os << "," << num(r.mu);
    emit(r.targets, out.num_harvest);
    emit(r.alphas, out.num_harvest);
    emit(r.omegas, out.num_info);
    os << "\n";
  }
}

void write_summary_csv(const ExperimentOutput& out, std::ostream& os) {
  os << "metric,value\n";
  for (const auto& [k, v] : out.summary) {
    os << k << "," << num(v) << "\n";
  }
}

}  // namespace swipt
