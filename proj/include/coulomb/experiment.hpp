#ifndef COULOMB_EXPERIMENT_HPP
#define COULOMB_EXPERIMENT_HPP

// Concentration experiment driver: one cell per n, resumable through
// per-cell checkpoint files, deterministic CSV output.

#include <cmath>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "coulomb/concentration.hpp"
#include "coulomb/io.hpp"

namespace coulomb {

struct ExperimentRow {
  TailRow tail;
  double bound_fitted = 0.0;
  double bound_c1 = 0.0;
  double rate = 0.0;   // -log(p_hat)/beta
  double slack = 0.0;  // log-term + C/n (or C/n^{2/d}) + n D / beta
  std::string flags;
};

struct ExperimentResult {
  std::vector<ExperimentRow> rows;
  double fitted_c = 0.0;
  double entropy = 0.0;
  std::size_t violations = 0;  // rows with Wilson upper CI above the fitted bound
  bool trend_monotone = true;
  std::size_t flagged_mixing = 0;
  std::vector<int> resumed_cells;  // n values loaded from checkpoints
  std::vector<std::filesystem::path> outputs;
};

namespace detail {

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream s;
  s << std::setprecision(10) << v;
  return s.str();
}

inline io::json tail_row_to_json(const TailRow& r) {
  return {{"n", r.n},
          {"beta", r.beta},
          {"r", r.r},
          {"chains", r.chains},
          {"exceed_upper", r.exceed_upper},
          {"exceed_lower", r.exceed_lower},
          {"mixing_flag", r.mixing_flag}};
}

inline TailRow tail_row_from_json(const io::json& j, double level) {
  TailRow r;
  r.n = j.at("n").get<int>();
  r.beta = j.at("beta").get<double>();
  r.r = j.at("r").get<double>();
  r.chains = j.at("chains").get<std::size_t>();
  r.exceed_upper = j.at("exceed_upper").get<std::size_t>();
  r.exceed_lower = j.at("exceed_lower").get<std::size_t>();
  r.mixing_flag = j.at("mixing_flag").get<bool>();
  r.p_hat = static_cast<double>(r.exceed_upper) / static_cast<double>(r.chains);
  r.ci_upper = stats::wilson_interval(r.exceed_upper, r.chains, level);
  r.ci_lower = stats::wilson_interval(r.exceed_lower, r.chains, level);
  return r;
}

}  // namespace detail

// Hash of the canonical config JSON (sorted keys, no whitespace).
inline std::string config_hash(const io::json& config) { return io::hex64(io::fnv1a(config.dump())); }

// Contents of configs/torus2_small.json.
inline io::json torus2_small_config() {
  return io::json::parse(R"({
  "description": "Theorem 1 non-falsification on the flat 2-torus, n in {8, 16}, beta_n = n^2",
  "manifold": "torus2",
  "n_list": [8, 16],
  "beta_rule": "n2",
  "r_list": [0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5],
  "chains": 100,
  "sweeps": 500,
  "burn_in": 300,
  "seed": 20240611,
  "grid_resolution": 32
})");
}

struct ExperimentOptions {
  unsigned jobs = 0;
  bool resume = false;
  // Called after each cell with (n, resumed).
  std::function<void(int, bool)> progress;
};

// Runs every (n, beta) cell of the config and writes concentration.csv,
// rates.csv, concentration.gp, cells/ checkpoints and manifest.json into
// `output_dir`.
inline ExperimentResult run_experiment(const io::json& config_json, const std::filesystem::path& output_dir,
                                       const ExperimentOptions& options = {}) {
  namespace fs = std::filesystem;
  const io::ExperimentConfig config = io::parse_experiment_config(config_json);
  const std::string hash = config_hash(config_json);
  const std::string started = io::utc_timestamp();
  const Manifold m = Manifold::parse(config.manifold);
  const SpectralModel sm = io::load_or_build_model(m, 0, io::cache_dir_from_env());
  const int d = m.dim();
  const QuadratureGrid grid = build_grid(m, config.grid_resolution);
  std::optional<Potential> potential;
  if (config.potential) potential = Potential::named(config.potential->type, config.potential->amplitude, m);
  const EquilibriumMeasure eq = equilibrium_measure(sm, potential ? &*potential : nullptr, grid);

  ExperimentResult result;
  result.entropy = eq.entropy;
  Rng root(config.seed);
  if (config.fitted_c) {
    result.fitted_c = *config.fitted_c;
  } else {
    Rng fit_rng = root.split(0xf17);
    // The fit grid is fixed per manifold so that it resolves the small-t kernels.
    const int fit_resolution = d == 3 ? 16 : 32;
    result.fitted_c = fit_theorem_constant(sm, config.n_list, 10, fit_resolution, fit_rng).theorem_c;
  }

  fs::create_directories(output_dir / "cells");
  const double level = 0.95;
  std::vector<std::vector<TailRow>> cells;
  for (std::size_t idx = 0; idx < config.n_list.size(); ++idx) {
    const int n = config.n_list[idx];
    const double beta = config.beta_for(idx);
    const fs::path cell_path = output_dir / "cells" / ("cell_n" + std::to_string(n) + ".json");
    std::vector<TailRow> rows;
    bool resumed = false;
    if (options.resume && fs::exists(cell_path)) {
      const io::json cell = io::json::parse(io::read_file(cell_path));
      if (cell.value("config_hash", "") == hash) {
        for (const auto& r : cell.at("rows")) rows.push_back(detail::tail_row_from_json(r, level));
        resumed = true;
        result.resumed_cells.push_back(n);
      }
    }
    if (!resumed) {
      GibbsParams params;
      params.beta = beta;
      params.step = config.initial_step;
      params.potential = potential;
      TailOptions topt;
      topt.chains = config.chains;
      topt.sweeps = config.sweeps;
      topt.burn_in = config.burn_in;
      topt.jobs = options.jobs;
      topt.level = level;
      const TailEstimate est = estimate_tail(sm, params, n, config.r_list, eq, root.split(static_cast<std::uint64_t>(n)), topt);
      rows = est.rows;
      io::json cell;
      cell["config_hash"] = hash;
      cell["n"] = n;
      cell["beta"] = beta;
      cell["r_hat"] = est.r_hat;
      cell["acceptance"] = est.proposed ? static_cast<double>(est.accepted) / static_cast<double>(est.proposed) : 0.0;
      cell["w1"] = est.w1_values;
      cell["rows"] = io::json::array();
      for (const auto& r : rows) cell["rows"].push_back(detail::tail_row_to_json(r));
      io::write_file(cell_path, cell.dump(2) + "\n");
    }
    result.outputs.push_back(fs::path("cells") / cell_path.filename());
    if (options.progress) options.progress(n, resumed);
    cells.push_back(std::move(rows));
  }

  std::ostringstream csv, rates;
  csv << "manifold,n,beta,r,bound_fitted,bound_Ceq1,p_hat,ci_lo,ci_hi,flags\n";
  rates << "manifold,n,beta,r,rate,rate_lo,rate_hi,r2_over_4,slack\n";
  for (std::size_t idx = 0; idx < cells.size(); ++idx) {
    for (const TailRow& t : cells[idx]) {
      ExperimentRow row;
      row.tail = t;
      const double entropy_term = potential ? t.n * eq.entropy : 0.0;
      row.bound_fitted = std::exp(theorem1_log_bound(t.n, t.beta, t.r, d, result.fitted_c) + entropy_term);
      row.bound_c1 = std::exp(theorem1_log_bound(t.n, t.beta, t.r, d, 1.0) + entropy_term);
      row.rate = empirical_rate(t);
      row.slack = t.beta > 0.0 ? (theorem1_log_bound(t.n, t.beta, 0.0, d, result.fitted_c) + entropy_term) / t.beta
                               : std::numeric_limits<double>::infinity();
      std::vector<std::string> flags;
      if (t.ci_upper.upper > row.bound_fitted) {
        flags.push_back("violation");
        ++result.violations;
      }
      if (row.bound_fitted >= 1.0) flags.push_back("vacuous");
      if (t.mixing_flag) {
        flags.push_back("rhat");
        ++result.flagged_mixing;
      }
      for (std::size_t k = 0; k < flags.size(); ++k) row.flags += (k ? ";" : "") + flags[k];
      using detail::format_double;
      csv << config.manifold << ',' << t.n << ',' << format_double(t.beta) << ',' << format_double(t.r) << ','
          << format_double(row.bound_fitted) << ',' << format_double(row.bound_c1) << ',' << format_double(t.p_hat)
          << ',' << format_double(t.ci_upper.lower) << ',' << format_double(t.ci_upper.upper) << ',' << row.flags
          << '\n';
      const stats::Interval ri = rate_interval(t);
      rates << config.manifold << ',' << t.n << ',' << format_double(t.beta) << ',' << format_double(t.r) << ','
            << format_double(row.rate) << ',' << format_double(ri.lower) << ',' << format_double(ri.upper) << ','
            << format_double(t.r * t.r / 4.0) << ',' << format_double(row.slack) << '\n';
      result.rows.push_back(row);
    }
  }
  for (std::size_t idx = 0; idx + 1 < cells.size(); ++idx)
    if (config.n_list[idx] < config.n_list[idx + 1] && !rate_trend_monotone(cells[idx], cells[idx + 1]))
      result.trend_monotone = false;

  io::write_file(output_dir / "concentration.csv", csv.str());
  io::write_file(output_dir / "rates.csv", rates.str());
  io::write_file(output_dir / "concentration.gp", io::gnuplot_script("concentration.csv", config.n_list, config.manifold));
  result.outputs.insert(result.outputs.begin(), {"concentration.csv", "rates.csv", "concentration.gp"});

  io::RunManifest manifest;
  manifest.config_hash = hash;
  manifest.seed = config.seed;
  manifest.started = started;
  manifest.finished = io::utc_timestamp();
  manifest.outputs = result.outputs;
  io::json mj = io::manifest_to_json(manifest, output_dir);
  mj["fitted_C"] = result.fitted_c;
  mj["violations"] = result.violations;
  mj["trend_monotone"] = result.trend_monotone;
  mj["resumed_cells"] = result.resumed_cells;
  io::write_file(output_dir / "manifest.json", mj.dump(2) + "\n");
  result.outputs.push_back("manifest.json");
  return result;
}

}  // namespace coulomb

#endif  // COULOMB_EXPERIMENT_HPP
