#ifndef COULOMB_IO_HPP
#define COULOMB_IO_HPP

// File formats: eigenvalue tables, measures, plans, chain checkpoints,
// experiment configs, run manifests and plot scripts.

#include <algorithm>
#include <array>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "coulomb/gas.hpp"
#include "coulomb/manifold.hpp"
#include "coulomb/rng.hpp"
#include "coulomb/spectral.hpp"
#include "coulomb/transport.hpp"

namespace coulomb::io {

using nlohmann::json;
namespace fs = std::filesystem;

inline constexpr const char* kToolVersion = "1.0.0";

// ------------------------------------------------------------ eigen tables
//
// Little-endian layout: 5 bytes "SPEC1", u32 manifold id (0 torus2,
// 1 torus3, 2 sphere2), u32 cutoff, (cutoff + 1) f64 eigenvalues.

inline std::uint32_t manifold_id(const Manifold& m) { return static_cast<std::uint32_t>(m.kind()); }

inline Manifold manifold_from_id(std::uint32_t id) {
  if (id > 2) throw std::runtime_error("eigen table: unknown manifold id " + std::to_string(id));
  return Manifold(static_cast<ManifoldKind>(id));
}

namespace detail {

inline void put_u32(std::ostream& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xffu));
}

inline void put_u64(std::ostream& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xffu));
}

inline std::uint64_t get_uint(std::istream& in, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) {
    const int c = in.get();
    if (c == std::char_traits<char>::eof()) throw std::runtime_error("eigen table: truncated file");
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return v;
}

}  // namespace detail

struct EigenTable {
  Manifold manifold{ManifoldKind::Torus2};
  std::vector<double> eigenvalues;  // index 0..cutoff
};

inline void write_eigen_table(const fs::path& path, const Manifold& m, std::span<const double> eigenvalues) {
  if (eigenvalues.empty()) throw std::invalid_argument("write_eigen_table: empty table");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out.write("SPEC1", 5);
  detail::put_u32(out, manifold_id(m));
  detail::put_u32(out, static_cast<std::uint32_t>(eigenvalues.size() - 1));
  for (double v : eigenvalues) detail::put_u64(out, std::bit_cast<std::uint64_t>(v));
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

inline EigenTable read_eigen_table(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::array<char, 5> magic{};
  in.read(magic.data(), 5);
  if (!in || std::string(magic.data(), 5) != "SPEC1")
    throw std::runtime_error("'" + path.string() + "' is not a SPEC1 eigen table");
  EigenTable table;
  table.manifold = manifold_from_id(static_cast<std::uint32_t>(detail::get_uint(in, 4)));
  const auto cutoff = static_cast<std::uint32_t>(detail::get_uint(in, 4));
  if (cutoff > (1u << 24)) throw std::runtime_error("eigen table: implausible cutoff " + std::to_string(cutoff));
  table.eigenvalues.resize(static_cast<std::size_t>(cutoff) + 1);
  for (double& v : table.eigenvalues) v = std::bit_cast<double>(detail::get_uint(in, 8));
  return table;
}

inline fs::path eigen_cache_path(const fs::path& dir, const Manifold& m, int cutoff) {
  return dir / ("spec_" + m.name() + "_" + std::to_string(cutoff) + ".bin");
}

// Cache directory from COULOMB_CACHE_DIR, if set and nonempty.
inline std::optional<fs::path> cache_dir_from_env() {
  const char* dir = std::getenv("COULOMB_CACHE_DIR");
  if (!dir || !*dir) return std::nullopt;
  return fs::path(dir);
}

// Spectral model whose eigenvalue table is loaded from (or written to) the
// cache directory when one is given.
inline SpectralModel load_or_build_model(const Manifold& m, int cutoff = 0, std::optional<fs::path> cache = {}) {
  SpectralModel fresh(m, cutoff);
  if (!cache) return fresh;
  const fs::path path = eigen_cache_path(*cache, m, fresh.eigen_cutoff());
  if (fs::exists(path)) {
    EigenTable table = read_eigen_table(path);
    if (table.manifold.kind() != m.kind() || static_cast<int>(table.eigenvalues.size()) - 1 != fresh.eigen_cutoff())
      throw std::runtime_error("eigen table '" + path.string() + "' does not match (" + m.name() + ", " +
                               std::to_string(fresh.eigen_cutoff()) + ")");
    return SpectralModel::from_table(m, std::move(table.eigenvalues), fresh.crossover_time());
  }
  fs::create_directories(*cache);
  write_eigen_table(path, m, fresh.eigenvalues());
  return fresh;
}

// --------------------------------------------------- measures and plans

inline json point_to_json(const Manifold& m, const Point& p) {
  json a = json::array();
  for (int i = 0; i < m.coord_count(); ++i) a.push_back(p[i]);
  return a;
}

inline Point point_from_json(const Manifold& m, const json& j, const std::string& where) {
  if (!j.is_array() || static_cast<int>(j.size()) != m.coord_count())
    throw std::invalid_argument(where + ": expected an array of " + std::to_string(m.coord_count()) + " numbers");
  std::vector<double> c;
  for (const auto& v : j) {
    if (!v.is_number()) throw std::invalid_argument(where + ": coordinates must be numbers");
    c.push_back(v.get<double>());
  }
  return m.make_point(c);
}

inline json measure_to_json(const Manifold& m, const DiscreteMeasure& mu) {
  json j;
  j["manifold"] = m.name();
  j["coords"] = json::array();
  for (const Point& p : mu.atoms) j["coords"].push_back(point_to_json(m, p));
  j["weights"] = mu.weights;
  return j;
}

// Reads {"manifold"?, "coords": [[...]], "weights"?: [...]}; missing weights
// mean the empirical measure.
inline DiscreteMeasure measure_from_json(const Manifold& m, const json& j) {
  if (!j.is_object() || !j.contains("coords")) throw std::invalid_argument("measure: missing field 'coords'");
  if (j.contains("manifold") && j["manifold"].get<std::string>() != m.name())
    throw std::invalid_argument("measure: manifold '" + j["manifold"].get<std::string>() + "' does not match '" +
                                m.name() + "'");
  std::vector<Point> atoms;
  for (std::size_t i = 0; i < j["coords"].size(); ++i)
    atoms.push_back(point_from_json(m, j["coords"][i], "measure.coords[" + std::to_string(i) + "]"));
  if (atoms.empty()) throw std::invalid_argument("measure: no atoms");
  if (!j.contains("weights")) return DiscreteMeasure::empirical(std::move(atoms));
  DiscreteMeasure mu;
  mu.atoms = std::move(atoms);
  mu.weights = j["weights"].get<std::vector<double>>();
  mu.validate();
  return mu;
}

inline std::string plan_to_csv(const TransportPlan& plan) {
  std::ostringstream out;
  out << std::setprecision(17) << "source,sink,mass\n";
  for (const auto& f : plan.flows) out << f.source << ',' << f.sink << ',' << f.mass << '\n';
  return out.str();
}

// ---------------------------------------------------- chain checkpoints

struct ChainCheckpoint {
  std::string manifold;
  std::size_t n = 0;
  double beta = 0.0;
  std::uint64_t seed = 0;
  std::size_t sweeps = 0;
  double step = 0.0;
  Rng::State rng;
  std::vector<Point> points;
};

inline json checkpoint_to_json(const Manifold& m, const ChainCheckpoint& c) {
  json j;
  j["format"] = "coulomb-chain-checkpoint/1";
  j["manifold"] = c.manifold;
  j["n"] = c.n;
  j["beta"] = c.beta;
  j["seed"] = c.seed;
  j["sweeps"] = c.sweeps;
  j["step"] = c.step;
  j["rng"] = {{"key", c.rng.key}, {"counter", c.rng.counter}, {"spare", c.rng.spare}, {"has_spare", c.rng.has_spare}};
  j["points"] = json::array();
  for (const Point& p : c.points) j["points"].push_back(point_to_json(m, p));
  return j;
}

inline ChainCheckpoint checkpoint_from_json(const json& j) {
  ChainCheckpoint c;
  try {
    c.manifold = j.at("manifold").get<std::string>();
    const Manifold m = Manifold::parse(c.manifold);
    c.n = j.at("n").get<std::size_t>();
    c.beta = j.at("beta").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.sweeps = j.at("sweeps").get<std::size_t>();
    c.step = j.at("step").get<double>();
    const json& r = j.at("rng");
    c.rng = {r.at("key").get<std::uint64_t>(), r.at("counter").get<std::uint64_t>(), r.at("spare").get<double>(),
             r.at("has_spare").get<bool>()};
    const json& pts = j.at("points");
    for (std::size_t i = 0; i < pts.size(); ++i)
      c.points.push_back(point_from_json(m, pts[i], "checkpoint.points[" + std::to_string(i) + "]"));
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("chain checkpoint: ") + e.what());
  }
  if (c.points.size() != c.n) throw std::invalid_argument("chain checkpoint: point count differs from n");
  return c;
}

// ------------------------------------------------------ experiment config

// Schema violation carrying a JSON-path-like location.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(const std::string& path, const std::string& message)
      : std::invalid_argument(path + ": " + message), path_(path) {}
  [[nodiscard]] const std::string& path() const { return path_; }

 private:
  std::string path_;
};

struct PotentialSpec {
  std::string type;
  double amplitude = 0.0;
};

struct ExperimentConfig {
  std::string manifold;
  std::vector<int> n_list;
  std::string beta_rule;            // "n2", "4pi_n2" or "list"
  std::vector<double> beta_values;  // explicit list, one per n
  std::vector<double> r_list;
  std::size_t chains = 0;
  std::size_t sweeps = 0;
  std::size_t burn_in = 0;
  std::uint64_t seed = 0;
  int grid_resolution = 0;
  std::optional<PotentialSpec> potential;
  std::optional<double> fitted_c;  // frozen Theorem 1 constant
  double initial_step = 0.1;

  [[nodiscard]] double beta_for(std::size_t index) const {
    const double n = n_list.at(index);
    if (beta_rule == "n2") return n * n;
    if (beta_rule == "4pi_n2") return 4.0 * kPi * n * n;
    return beta_values.at(index);
  }
};

namespace detail {

inline const json& require(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.contains(key)) throw ConfigError(path + "." + key, "required field missing");
  return obj.at(key);
}

inline double number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(path, "must be finite");
  return x;
}

inline std::int64_t integer(const json& v, const std::string& path, std::int64_t min_value) {
  if (!v.is_number_integer()) throw ConfigError(path, "expected an integer");
  const auto x = v.get<std::int64_t>();
  if (x < min_value) throw ConfigError(path, "must be >= " + std::to_string(min_value));
  return x;
}

}  // namespace detail

inline ExperimentConfig parse_experiment_config(const json& j) {
  using detail::integer;
  using detail::number;
  using detail::require;
  if (!j.is_object()) throw ConfigError("$", "config must be a JSON object");
  static const std::vector<std::string> known{"manifold", "n_list", "beta_rule", "r_list", "chains", "sweeps",
                                              "burn_in", "seed", "grid_resolution", "potential", "fitted_C",
                                              "initial_step", "description"};
  for (const auto& [key, value] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end()) throw ConfigError("$." + key, "unknown field");

  ExperimentConfig c;
  const json& manifold = require(j, "manifold", "$");
  if (!manifold.is_string()) throw ConfigError("$.manifold", "expected a string");
  c.manifold = manifold.get<std::string>();
  try {
    (void)Manifold::parse(c.manifold);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("$.manifold", e.what());
  }

  const json& n_list = require(j, "n_list", "$");
  if (!n_list.is_array() || n_list.empty()) throw ConfigError("$.n_list", "expected a nonempty array");
  for (std::size_t i = 0; i < n_list.size(); ++i) {
    const auto n = integer(n_list[i], "$.n_list[" + std::to_string(i) + "]", 2);
    if (n > 64) throw ConfigError("$.n_list[" + std::to_string(i) + "]", "must be <= 64");
    c.n_list.push_back(static_cast<int>(n));
  }

  const json& rule = require(j, "beta_rule", "$");
  if (rule.is_string()) {
    c.beta_rule = rule.get<std::string>();
    if (c.beta_rule != "n2" && c.beta_rule != "4pi_n2")
      throw ConfigError("$.beta_rule", "expected \"n2\", \"4pi_n2\" or an array of numbers");
  } else if (rule.is_array()) {
    c.beta_rule = "list";
    if (rule.size() != c.n_list.size()) throw ConfigError("$.beta_rule", "explicit list must have one beta per n");
    for (std::size_t i = 0; i < rule.size(); ++i) {
      const double b = number(rule[i], "$.beta_rule[" + std::to_string(i) + "]");
      if (b < 0.0) throw ConfigError("$.beta_rule[" + std::to_string(i) + "]", "must be >= 0");
      c.beta_values.push_back(b);
    }
  } else {
    throw ConfigError("$.beta_rule", "expected \"n2\", \"4pi_n2\" or an array of numbers");
  }

  const json& r_list = require(j, "r_list", "$");
  if (!r_list.is_array() || r_list.empty()) throw ConfigError("$.r_list", "expected a nonempty array");
  for (std::size_t i = 0; i < r_list.size(); ++i) {
    const double r = number(r_list[i], "$.r_list[" + std::to_string(i) + "]");
    if (r < 0.0) throw ConfigError("$.r_list[" + std::to_string(i) + "]", "must be >= 0");
    c.r_list.push_back(r);
  }

  c.chains = static_cast<std::size_t>(integer(require(j, "chains", "$"), "$.chains", 2));
  c.sweeps = static_cast<std::size_t>(integer(require(j, "sweeps", "$"), "$.sweeps", 1));
  c.burn_in = static_cast<std::size_t>(integer(require(j, "burn_in", "$"), "$.burn_in", 0));
  c.seed = static_cast<std::uint64_t>(integer(require(j, "seed", "$"), "$.seed", 0));
  c.grid_resolution = static_cast<int>(integer(require(j, "grid_resolution", "$"), "$.grid_resolution", 4));
  const std::size_t nodes = c.manifold == "torus3"
                                ? static_cast<std::size_t>(c.grid_resolution) * c.grid_resolution * c.grid_resolution
                                : static_cast<std::size_t>(c.grid_resolution) * c.grid_resolution;
  if (nodes > kExactAtomCap)
    throw ConfigError("$.grid_resolution", "grid has " + std::to_string(nodes) + " nodes; exact transport allows " +
                                               std::to_string(kExactAtomCap));

  if (j.contains("potential") && !j["potential"].is_null()) {
    const json& p = j["potential"];
    if (!p.is_object()) throw ConfigError("$.potential", "expected an object");
    const json& type = require(p, "type", "$.potential");
    if (!type.is_string()) throw ConfigError("$.potential.type", "expected a string");
    PotentialSpec spec{type.get<std::string>(), number(require(p, "amplitude", "$.potential"), "$.potential.amplitude")};
    try {
      (void)Potential::named(spec.type, spec.amplitude, Manifold::parse(c.manifold));
    } catch (const std::invalid_argument& e) {
      throw ConfigError("$.potential.type", e.what());
    }
    c.potential = spec;
  }
  if (j.contains("fitted_C")) {
    c.fitted_c = number(j["fitted_C"], "$.fitted_C");
    if (*c.fitted_c < 0.0) throw ConfigError("$.fitted_C", "must be >= 0");
  }
  if (j.contains("initial_step")) {
    c.initial_step = number(j["initial_step"], "$.initial_step");
    if (!(c.initial_step > 0.0)) throw ConfigError("$.initial_step", "must be > 0");
  }
  return c;
}

inline ExperimentConfig load_experiment_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("$", "cannot open '" + path.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("$", std::string("invalid JSON: ") + e.what());
  }
  return parse_experiment_config(j);
}

// ------------------------------------------------------------ manifests

// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << v;
  return out.str();
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << content;
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

struct RunManifest {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string tool_version = kToolVersion;
  std::string started;
  std::string finished;
  std::vector<fs::path> outputs;  // relative to the output directory
};

// Manifest JSON with an FNV-1a hash of every listed output.
inline json manifest_to_json(const RunManifest& m, const fs::path& output_dir) {
  json j;
  j["config_hash"] = m.config_hash;
  j["seed"] = m.seed;
  j["tool_version"] = m.tool_version;
  j["started"] = m.started;
  j["finished"] = m.finished;
  j["outputs"] = json::array();
  for (const auto& p : m.outputs)
    j["outputs"].push_back({{"path", p.generic_string()}, {"fnv1a", hex64(fnv1a(read_file(output_dir / p)))}});
  return j;
}

// Gnuplot script plotting bound and Monte Carlo estimate against r, one
// panel per n, from the experiment CSV.
inline std::string gnuplot_script(const std::string& csv_name, const std::vector<int>& n_list,
                                  const std::string& manifold) {
  std::ostringstream s;
  s << "# Concentration bound vs Monte Carlo tail estimate (" << manifold << ")\n"
    << "set datafile separator ','\n"
    << "set terminal pngcairo size 1000," << 400 * n_list.size() << "\n"
    << "set output 'concentration.png'\n"
    << "set logscale y\n"
    << "set yrange [1e-4:10]\n"
    << "set xlabel 'r'\n"
    << "set ylabel 'P(W1 >= r)'\n"
    << "set key bottom left\n"
    << "set multiplot layout " << n_list.size() << ",1\n";
  for (int n : n_list) {
    s << "set title 'n = " << n << "'\n"
      << "plot '" << csv_name << "' using ($2==" << n << " ? $4 : 1/0):5 with lines title 'bound (fitted C)', \\\n"
      << "     '' using ($2==" << n << " ? $4 : 1/0):6 with lines dashtype 2 title 'bound (C = 1)', \\\n"
      << "     '' using ($2==" << n << " ? $4 : 1/0):7:8:9 with yerrorbars title 'p_hat (Wilson 95%)'\n";
  }
  s << "unset multiplot\n";
  return s.str();
}

}  // namespace coulomb::io

#endif  // COULOMB_IO_HPP
