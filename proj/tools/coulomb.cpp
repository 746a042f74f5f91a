// coulomb: command-line front end for the heat-kernel, transport, sampler
// and concentration modules.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "coulomb/concentration.hpp"
#include "coulomb/experiment.hpp"
#include "coulomb/io.hpp"
#include "coulomb/verify.hpp"

namespace fs = std::filesystem;
using namespace coulomb;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitCheckFailure = 1;
constexpr int kExitUsage = 2;

// Errors in user-supplied values that CLI11 cannot see (file contents etc.).
struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

const std::vector<std::string> kManifoldIds{"torus2", "torus3", "sphere2"};

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? sep : "") + parts[i];
  return out;
}

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

std::string point_text(const Manifold& m, const Point& p) {
  std::vector<std::string> c;
  for (int i = 0; i < m.coord_count(); ++i) c.push_back(fmt(p[i]));
  return join(c, ";");
}

// "a,b" (or "a;b") -> point; sphere points are projected onto the sphere.
Point parse_point(const Manifold& m, const std::string& text) {
  std::vector<double> c;
  std::string token;
  std::istringstream in(text);
  while (std::getline(in, token, ',')) {
    std::istringstream inner(token);
    std::string piece;
    while (std::getline(inner, piece, ';')) {
      try {
        c.push_back(std::stod(piece));
      } catch (const std::exception&) {
        throw UsageError("bad coordinate '" + piece + "' in '" + text + "'");
      }
    }
  }
  if (static_cast<int>(c.size()) != m.coord_count())
    throw UsageError("point '" + text + "' needs " + std::to_string(m.coord_count()) + " coordinates");
  if (!m.is_torus()) {
    const double norm = std::hypot(c[0], c[1], c[2]);
    if (!(norm > 0.0)) throw UsageError("sphere point must be nonzero");
    for (double& v : c) v /= norm;
  }
  return m.make_point(c);
}

void write_output(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    return;
  }
  io::write_file(path, content);
}

io::json read_json(const std::string& path) {
  try {
    return io::json::parse(io::read_file(path));
  } catch (const io::json::parse_error& e) {
    throw UsageError("'" + path + "' is not valid JSON: " + e.what());
  }
}

int grid_resolution_default(const Manifold& m) { return m.dim() == 3 ? 16 : (m.is_torus() ? 64 : 32); }

unsigned jobs_or_default(unsigned jobs) {
  if (jobs > 0) return jobs;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

// ------------------------------------------------------------ kernel-table

struct KernelTableArgs {
  std::string manifold;
  std::vector<double> times;
  std::vector<std::string> pairs;
  int random_pairs = 3;
  std::uint64_t seed = 1;
  std::string output;
};

int cmd_kernel_table(const KernelTableArgs& a) {
  const Manifold m = Manifold::parse(a.manifold);
  const SpectralModel sm = io::load_or_build_model(m, 0, io::cache_dir_from_env());
  std::vector<std::pair<Point, Point>> pairs;
  for (const std::string& spec : a.pairs) {
    const auto colon = spec.find(':');
    if (colon == std::string::npos) throw UsageError("--pair expects 'x:y', got '" + spec + "'");
    pairs.emplace_back(parse_point(m, spec.substr(0, colon)), parse_point(m, spec.substr(colon + 1)));
  }
  if (pairs.empty()) {
    Rng rng(a.seed);
    for (int k = 0; k < a.random_pairs; ++k) pairs.emplace_back(m.sample_uniform(rng), m.sample_uniform(rng));
  }
  const QuadratureGrid grid = build_grid(m, grid_resolution_default(m));
  std::ostringstream out;
  out << "t,x,y,p_t,truncation_bound,G,G_t,mass\n";
  for (const auto& [x, y] : pairs) {
    const double g = sm.green(x, y).value;
    for (double t : a.times) {
      const KernelValue p = sm.heat_kernel(t, x, y);
      double mass = 0.0;
      for (std::size_t k = 0; k < grid.size(); ++k) mass += grid.weights[k] * sm.heat_kernel(t, x, grid.nodes[k]).value;
      out << fmt(t) << ',' << point_text(m, x) << ',' << point_text(m, y) << ',' << fmt(p.value) << ','
          << fmt(p.truncation_bound) << ',' << fmt(g) << ',' << fmt(sm.regularized_green(t, x, y).value) << ','
          << fmt(mass) << '\n';
    }
  }
  write_output(a.output, out.str());
  return kExitPass;
}

// ------------------------------------------------------------------ verify

struct VerifyArgs {
  std::string suite = "all";
  std::string eigen_table;
  std::uint64_t seed = 20240611;
  unsigned jobs = 0;
  std::string output_dir;
};

int cmd_verify(const VerifyArgs& a) {
  verify::SuiteOptions options;
  options.seed = a.seed;
  options.jobs = jobs_or_default(a.jobs);
  if (!a.eigen_table.empty()) {
    io::EigenTable table;
    try {
      table = io::read_eigen_table(a.eigen_table);
    } catch (const std::runtime_error& e) {
      throw UsageError(e.what());
    }
    const Manifold m = table.manifold;
    options.models.emplace(m.kind(), SpectralModel::from_table(m, std::move(table.eigenvalues)));
  }
  options.on_check = [](const verify::CheckResult& r) { std::cout << verify::format_table({r}) << std::flush; };
  verify::Report report;
  if (a.suite == "concentration" && !a.output_dir.empty()) {
    verify::concentration_suite(report, options, fs::path(a.output_dir));
  } else {
    report = verify::run_suite(a.suite, options);
  }
  std::size_t failed = 0;
  double seconds = 0.0;
  for (const auto& r : report) {
    failed += r.passed ? 0 : 1;
    seconds += r.seconds;
  }
  std::cout << report.size() - failed << "/" << report.size() << " checks passed in " << std::fixed
            << std::setprecision(1) << seconds << " s\n";
  if (failed) {
    std::cerr << "failed checks:\n";
    for (const auto& r : report)
      if (!r.passed) std::cerr << "  " << r.suite << ": " << r.name << ": " << r.detail << '\n';
  }
  return failed ? kExitCheckFailure : kExitPass;
}

// ------------------------------------------------------------------ sample

struct SampleArgs {
  std::string manifold;
  int n = 8;
  std::optional<double> beta;
  std::size_t sweeps = 1000;
  std::size_t burn_in = 500;
  std::uint64_t seed = 1;
  double step = 0.1;
  std::string potential;
  double amplitude = 0.0;
  std::string checkpoint;
  std::string resume;
  std::string output;
  std::string trace;
};

int cmd_sample(const SampleArgs& a) {
  std::optional<io::ChainCheckpoint> restored;
  if (!a.resume.empty()) {
    try {
      restored = io::checkpoint_from_json(read_json(a.resume));
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  if (!restored && a.manifold.empty()) throw UsageError("--manifold is required unless --resume is given");
  const Manifold m = Manifold::parse(restored ? restored->manifold : a.manifold);
  const SpectralModel sm = io::load_or_build_model(m, 0, io::cache_dir_from_env());
  const int n = restored ? static_cast<int>(restored->n) : a.n;
  if (n < 1) throw UsageError("--n must be >= 1");
  GibbsParams params;
  params.beta = restored ? restored->beta : a.beta.value_or(static_cast<double>(n) * n);
  if (!(params.beta >= 0.0)) throw UsageError("--beta must be >= 0");
  params.step = restored ? restored->step : a.step;
  if (!a.potential.empty()) params.potential = Potential::named(a.potential, a.amplitude, m);

  const std::uint64_t seed = restored ? restored->seed : a.seed;
  Rng rng = restored ? Rng::from_state(restored->rng) : Rng(seed);
  std::vector<Point> start = restored ? restored->points : random_configuration(m, static_cast<std::size_t>(n), rng);
  GibbsChain chain(sm, params, std::move(start), rng);
  if (restored) {
    chain.set_sweep_count(restored->sweeps);
  } else if (a.burn_in > 0) {
    chain.burn_in(a.burn_in);
  }
  std::vector<double> trace;
  trace.reserve(a.sweeps);
  for (std::size_t s = 0; s < a.sweeps; ++s) {
    chain.sweep(false);
    trace.push_back(chain.energy());
  }

  std::cout << "manifold " << m.name() << ", n " << n << ", beta " << params.beta << '\n'
            << "sweeps " << chain.stats().sweeps << ", acceptance " << std::setprecision(4)
            << chain.stats().acceptance_rate() << ", step " << chain.step() << '\n'
            << "final energy H_n " << std::setprecision(10) << chain.energy() << '\n';
  if (trace.size() >= 40) {
    const stats::DriftResult drift = stats::split_half_drift(trace);
    std::cout << "energy split-half means " << drift.first_mean << " / " << drift.second_mean << " ("
              << (drift.stable ? "stable" : "drifting") << ")\n";
  }
  if (!a.output.empty()) {
    io::json j = io::measure_to_json(m, DiscreteMeasure::empirical(chain.points()));
    j["beta"] = params.beta;
    j["energy"] = chain.energy();
    io::write_file(a.output, j.dump(2) + "\n");
  }
  if (!a.trace.empty()) {
    std::ostringstream out;
    out << "sweep,energy\n";
    for (std::size_t s = 0; s < trace.size(); ++s) out << s << ',' << fmt(trace[s]) << '\n';
    io::write_file(a.trace, out.str());
  }
  if (!a.checkpoint.empty()) {
    io::ChainCheckpoint c;
    c.manifold = m.name();
    c.n = static_cast<std::size_t>(n);
    c.beta = params.beta;
    c.seed = seed;
    c.sweeps = chain.stats().sweeps;
    c.step = chain.step();
    c.rng = chain.rng().state();
    c.points = chain.points();
    io::write_file(a.checkpoint, io::checkpoint_to_json(m, c).dump(2) + "\n");
  }
  return kExitPass;
}

// --------------------------------------------------------------- transport

struct TransportArgs {
  std::string manifold;
  std::string mu;
  std::string nu;
  int resolution = 32;
  double epsilon = 0.0;
  std::string plan;
};

int cmd_transport(const TransportArgs& a) {
  const Manifold m = Manifold::parse(a.manifold);
  const SpectralModel sm = io::load_or_build_model(m, 0, io::cache_dir_from_env());
  auto load = [&](const std::string& spec) {
    if (spec == "uniform") return DiscreteMeasure::from_grid(build_grid(m, a.resolution));
    try {
      return io::measure_from_json(m, read_json(spec));
    } catch (const io::json::exception& e) {
      throw UsageError(spec + ": " + e.what());
    } catch (const std::runtime_error& e) {
      throw UsageError(e.what());
    }
  };
  const DiscreteMeasure mu = load(a.mu), nu = load(a.nu);
  const W1Result w = w1_exact(m, mu, nu);
  const DualCertificate cert = w1_dual_certificate(m, mu, nu, w.plan);
  std::cout << std::setprecision(12) << "W1 " << w.value << '\n'
            << "dual value " << cert.dual_value << ", gap " << std::setprecision(3) << cert.gap << '\n';
  const bool lattice = m.is_torus() && mu.lattice_resolution > 0 && mu.lattice_resolution == nu.lattice_resolution;
  if (lattice || (mu.size() + nu.size() <= 4000)) {
    // Off the shared lattice any surviving atom carries infinite self-energy.
    EnergyOptions eo;
    eo.path = lattice ? EnergyPath::Fourier : EnergyPath::DoubleSum;
    eo.exclude_diagonal = lattice;
    const double e = energy_distance_squared(sm, mu, nu, eo);
    std::cout << std::setprecision(12) << "energy distance sqrt(E) " << std::sqrt(e) << '\n';
  }
  if (a.epsilon > 0.0) {
    const EntropicBracket b = w1_entropic(m, mu, nu, a.epsilon);
    std::cout << std::setprecision(12) << "entropic bracket [" << b.lower << ", " << b.upper << "] after "
              << b.iterations << " iterations\n";
  }
  if (!a.plan.empty()) io::write_file(a.plan, io::plan_to_csv(w.plan));
  return kExitPass;
}

// -------------------------------------------------------------- experiment

struct ExperimentArgs {
  std::string config;
  std::string output;
  bool resume = false;
  unsigned jobs = 0;
};

int cmd_experiment(const ExperimentArgs& a) {
  const io::json config = read_json(a.config);
  (void)io::parse_experiment_config(config);
  ExperimentOptions options;
  options.jobs = jobs_or_default(a.jobs);
  options.resume = a.resume;
  options.progress = [](int n, bool resumed) {
    std::cerr << "cell n=" << n << (resumed ? " (from checkpoint)" : " done") << '\n';
  };
  const ExperimentResult r = run_experiment(config, a.output, options);
  std::size_t informative = 0;
  for (const auto& row : r.rows) {
    if (!(row.tail.p_hat > 0.0 && row.tail.p_hat < 1.0)) continue;
    ++informative;
    std::cout << std::setprecision(4) << "n=" << row.tail.n << " r=" << row.tail.r << ": -log(p)/beta = " << row.rate
              << " vs r^2/4 = " << row.tail.r * row.tail.r / 4 << " (slack " << row.slack << ")\n";
  }
  std::cout << "fitted C " << std::setprecision(6) << r.fitted_c << ", " << r.rows.size() << " rows, "
            << r.violations << " violations, " << r.flagged_mixing << " R-hat flags, trend "
            << (r.trend_monotone ? "monotone" : "NOT monotone") << '\n'
            << "outputs in " << a.output << '\n';
  return r.violations == 0 && r.trend_monotone ? kExitPass : kExitCheckFailure;
}

// ------------------------------------------------------------- equilibrium

struct EquilibriumArgs {
  std::string manifold;
  std::string potential;
  double amplitude = 0.0;
  int resolution = 32;
  std::string output;
};

int cmd_equilibrium(const EquilibriumArgs& a) {
  const Manifold m = Manifold::parse(a.manifold);
  const SpectralModel sm = io::load_or_build_model(m, 0, io::cache_dir_from_env());
  const QuadratureGrid grid = build_grid(m, a.resolution);
  std::optional<Potential> v;
  if (!a.potential.empty()) v = Potential::named(a.potential, a.amplitude, m);
  const EquilibriumMeasure eq = equilibrium_measure(sm, v ? &*v : nullptr, grid);
  double lo = eq.density.front(), hi = lo;
  for (double r : eq.density) {
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  std::cout << std::setprecision(12) << "density range [" << lo << ", " << hi << "]\n"
            << "relative entropy D(mu_eq | pi) " << eq.entropy << '\n';
  if (v) {
    Rng rng(7);
    std::vector<Point> probes;
    for (int k = 0; k < 6; ++k) probes.push_back(m.sample_uniform(rng));
    std::cout << "Euler-Lagrange residual spread " << std::setprecision(3)
              << euler_lagrange_residual(sm, *v, build_grid(m, m.dim() == 3 ? 16 : 48), probes) << '\n';
  }
  if (!a.output.empty()) {
    std::ostringstream out;
    out << "node,weight,density\n";
    for (std::size_t k = 0; k < grid.size(); ++k)
      out << point_text(m, grid.nodes[k]) << ',' << fmt(grid.weights[k]) << ',' << fmt(eq.density[k]) << '\n';
    io::write_file(a.output, out.str());
  }
  return kExitPass;
}

// ------------------------------------------------------------- eigen-table

struct EigenTableArgs {
  std::string manifold;
  int cutoff = 0;
  double scale = 1.0;
  std::string output;
};

// Writes the analytic eigenvalue table; --scale multiplies every nonzero
// eigenvalue (a deliberately corrupted table for negative controls).
int cmd_eigen_table(const EigenTableArgs& a) {
  const Manifold m = Manifold::parse(a.manifold);
  const SpectralModel sm(m, a.cutoff);
  std::vector<double> ev(sm.eigenvalues().begin(), sm.eigenvalues().end());
  for (std::size_t k = 1; k < ev.size(); ++k) ev[k] *= a.scale;
  io::write_eigen_table(a.output, m, ev);
  std::cout << "wrote " << ev.size() << " eigenvalues (cutoff " << ev.size() - 1 << ") to " << a.output << '\n';
  return kExitPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coulomb gases on compact manifolds: heat kernels, transport, sampling, concentration"};
  app.require_subcommand(1);
  app.set_version_flag("--version", io::kToolVersion);
  const auto manifold_check = CLI::IsMember(kManifoldIds);

  KernelTableArgs kt;
  auto* kernel = app.add_subcommand("kernel-table", "Tabulate p_t, G and G_t on point pairs");
  kernel->add_option("--manifold", kt.manifold, "torus2 | torus3 | sphere2")->required()->check(manifold_check);
  kernel->add_option("--t", kt.times, "Comma-separated times")->required()->delimiter(',')->check(
      CLI::PositiveNumber);
  kernel->add_option("--pair", kt.pairs, "Point pair 'x1,x2:y1,y2' (repeatable)");
  kernel->add_option("--random-pairs", kt.random_pairs, "Random pairs when no --pair is given")
      ->check(CLI::Range(1, 100000));
  kernel->add_option("--seed", kt.seed, "Seed for random pairs");
  kernel->add_option("-o,--output", kt.output, "CSV path (default stdout)");

  VerifyArgs va;
  auto* ver = app.add_subcommand("verify", "Run invariant suites and print the check table");
  std::vector<std::string> suites = verify::suite_names();
  suites.push_back("all");
  ver->add_option("--suite", va.suite, "Suite name")->check(CLI::IsMember(suites))->capture_default_str();
  ver->add_option("--eigen-table", va.eigen_table, "SPEC1 eigenvalue table replacing the analytic one")
      ->check(CLI::ExistingFile);
  ver->add_option("--seed", va.seed)->capture_default_str();
  ver->add_option("--jobs", va.jobs, "Worker threads (default: logical cores)");
  ver->add_option("--output-dir", va.output_dir, "Where the concentration suite writes its artifacts");

  SampleArgs sa;
  auto* sample = app.add_subcommand("sample", "Run one Metropolis chain of the Gibbs measure");
  sample->add_option("--manifold", sa.manifold)->check(manifold_check);
  sample->add_option("--n", sa.n, "Particles")->check(CLI::Range(1, 100000));
  sample->add_option("--beta", sa.beta, "Inverse temperature (default n^2)");
  sample->add_option("--sweeps", sa.sweeps)->capture_default_str();
  sample->add_option("--burn-in", sa.burn_in, "Step-tuning sweeps before sampling")->capture_default_str();
  sample->add_option("--seed", sa.seed)->capture_default_str();
  sample->add_option("--step", sa.step, "Initial proposal step")->check(CLI::PositiveNumber);
  sample->add_option("--potential", sa.potential, "constant | cosine | zonal")
      ->check(CLI::IsMember({"constant", "cosine", "zonal"}));
  sample->add_option("--amplitude", sa.amplitude, "Potential amplitude");
  sample->add_option("--checkpoint", sa.checkpoint, "Write a resumable checkpoint here");
  sample->add_option("--resume", sa.resume, "Continue from a checkpoint")->check(CLI::ExistingFile);
  sample->add_option("-o,--output", sa.output, "Final configuration as measure JSON");
  sample->add_option("--trace", sa.trace, "Energy trace CSV");

  TransportArgs ta;
  auto* transport = app.add_subcommand("transport", "Exact W1 between two measures with dual certificate");
  transport->add_option("--manifold", ta.manifold)->required()->check(manifold_check);
  transport->add_option("--mu", ta.mu, "Measure JSON or 'uniform'")->required();
  transport->add_option("--nu", ta.nu, "Measure JSON or 'uniform'")->required();
  transport->add_option("--resolution", ta.resolution, "Grid resolution for 'uniform'")->check(CLI::Range(2, 512));
  transport->add_option("--entropic", ta.epsilon, "Also bracket W1 by Sinkhorn at this epsilon")
      ->check(CLI::PositiveNumber);
  transport->add_option("--plan", ta.plan, "Write the optimal plan as CSV");

  ExperimentArgs ea;
  auto* experiment = app.add_subcommand("experiment", "Concentration experiment from a JSON config");
  experiment->add_option("--config", ea.config)->required()->check(CLI::ExistingFile);
  experiment->add_option("-o,--output", ea.output, "Output directory")->required();
  experiment->add_flag("--resume", ea.resume, "Reuse completed cells from the output directory");
  experiment->add_option("--jobs", ea.jobs, "Worker threads (default: logical cores)");

  EquilibriumArgs qa;
  auto* equilibrium = app.add_subcommand("equilibrium", "Equilibrium measure for a potential");
  equilibrium->add_option("--manifold", qa.manifold)->required()->check(manifold_check);
  equilibrium->add_option("--potential", qa.potential, "constant | cosine | zonal")
      ->check(CLI::IsMember({"constant", "cosine", "zonal"}));
  equilibrium->add_option("--amplitude", qa.amplitude);
  equilibrium->add_option("--resolution", qa.resolution)->check(CLI::Range(2, 512));
  equilibrium->add_option("-o,--output", qa.output, "Density CSV");

  EigenTableArgs et;
  auto* eigen = app.add_subcommand("eigen-table", "Write a SPEC1 eigenvalue table");
  eigen->add_option("--manifold", et.manifold)->required()->check(manifold_check);
  eigen->add_option("--cutoff", et.cutoff, "Largest index (default: the model default)")->check(CLI::Range(0, 1 << 20));
  eigen->add_option("--scale", et.scale, "Multiply nonzero eigenvalues")->check(CLI::PositiveNumber);
  eigen->add_option("-o,--output", et.output, "Table path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (kernel->parsed()) return cmd_kernel_table(kt);
    if (ver->parsed()) return cmd_verify(va);
    if (sample->parsed()) return cmd_sample(sa);
    if (transport->parsed()) return cmd_transport(ta);
    if (experiment->parsed()) return cmd_experiment(ea);
    if (equilibrium->parsed()) return cmd_equilibrium(qa);
    if (eigen->parsed()) return cmd_eigen_table(et);
  } catch (const io::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << '\n';
    return kExitCheckFailure;
  }
  return kExitUsage;
}
