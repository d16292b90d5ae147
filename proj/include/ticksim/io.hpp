#ifndef TICKSIM_IO_HPP
#define TICKSIM_IO_HPP

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ticksim/clock.hpp"
#include "ticksim/tickstats.hpp"

namespace ticksim {
namespace io {

using json = nlohmann::json;

inline const char* toolkit_version() { return "0.1.0"; }

// ---------------------------------------------------------------------------
// JSON <-> matrices: complex entries are two-element arrays [re, im].
// ---------------------------------------------------------------------------

inline json complex_to_json(const cxd& z) { return json::array({z.real(), z.imag()}); }

inline cxd json_to_complex(const json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw validation_error("config: complex entries must be [re, im] numbers");
  return cxd(j[0].get<double>(), j[1].get<double>());
}

inline json matrix_to_json(const Mat& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(complex_to_json(m(r, c)));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Mat json_to_matrix(const json& j) {
  if (!j.is_array() || j.empty())
    throw validation_error("config: matrix must be a nonempty array of rows");
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = static_cast<Eigen::Index>(j[0].size());
  Mat m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw validation_error("config: ragged matrix rows");
    for (Eigen::Index c = 0; c < cols; ++c)
      m(r, c) = json_to_complex(row[static_cast<std::size_t>(c)]);
  }
  return m;
}

// ---------------------------------------------------------------------------
// Clock specs
// ---------------------------------------------------------------------------

inline std::string mode_name(RegisterMode mode) {
  return mode == RegisterMode::Periodic ? "periodic" : "cut-off";
}

inline RegisterMode parse_mode(const std::string& name) {
  if (name == "periodic") return RegisterMode::Periodic;
  if (name == "cut-off" || name == "cutoff") return RegisterMode::CutOff;
  throw validation_error("config: mode must be \"periodic\" or \"cut-off\"");
}

// Explicit-operator form; round-trips any spec exactly (decimal doubles).
inline json spec_to_json(const ClockSpec& spec) {
  json j;
  j["d"] = spec.d;
  j["n_ticks"] = spec.n_ticks;
  j["mode"] = mode_name(spec.mode);
  j["h"] = matrix_to_json(spec.h);
  j["l_ops"] = json::array();
  for (const Mat& l : spec.l_ops) j["l_ops"].push_back(matrix_to_json(l));
  j["j_ops"] = json::array();
  for (const Mat& jo : spec.j_ops) j["j_ops"].push_back(matrix_to_json(jo));
  j["rho_c0"] = matrix_to_json(spec.rho_c0.mat);
  j["k0"] = spec.k0;
  return json{{"explicit", std::move(j)}};
}

namespace detail {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  return j.at(key).get<T>();
}

inline ClockSpec builtin_clock(const std::string& name, const json& params) {
  const Eigen::Index n_ticks =
      get_or<Eigen::Index>(params, "n_ticks", 3);
  const RegisterMode mode =
      parse_mode(get_or<std::string>(params, "mode", "cut-off"));
  if (name == "ladder")
    return ladder_clock(get_or<Eigen::Index>(params, "d", 2), n_ticks, mode);
  if (name == "thermodynamic") {
    ThermodynamicParams p;
    p.e_h = get_or(params, "e_h", p.e_h);
    p.e_c = get_or(params, "e_c", p.e_c);
    p.beta_h = get_or(params, "beta_h", p.beta_h);
    p.beta_c = get_or(params, "beta_c", p.beta_c);
    p.gamma_h = get_or(params, "gamma_h", p.gamma_h);
    p.gamma_c = get_or(params, "gamma_c", p.gamma_c);
    p.g = get_or(params, "g", p.g);
    p.gamma_emit = get_or(params, "gamma_emit", p.gamma_emit);
    p.d = get_or(params, "d", p.d);
    return thermodynamic_clock(p, n_ticks, mode);
  }
  if (name == "quasi-ideal") {
    QuasiIdealParams p;
    p.sigma = get_or(params, "sigma", p.sigma);
    p.n0 = get_or(params, "n0", p.n0);
    p.j0 = get_or(params, "j0", p.j0);
    p.jv = get_or(params, "jv", p.jv);
    p.v0 = get_or(params, "v0", p.v0);
    p.sigma_v = get_or(params, "sigma_v", p.sigma_v);
    p.reset = get_or(params, "reset", p.reset);
    return quasi_ideal_clock(get_or<Eigen::Index>(params, "d", 8), p, n_ticks,
                             mode);
  }
  throw validation_error("config: unknown builtin clock \"" + name + "\"");
}

}  // namespace detail

inline ClockSpec spec_from_json(const json& j) {
  if (!j.is_object())
    throw validation_error("config: clock section must be an object");
  const bool has_builtin = j.contains("builtin");
  const bool has_explicit = j.contains("explicit");
  if (has_builtin == has_explicit)
    throw validation_error(
        "config: clock needs exactly one of \"builtin\" or \"explicit\"");
  ClockSpec spec;
  if (has_builtin) {
    spec = detail::builtin_clock(j.at("builtin").get<std::string>(),
                                 j.value("params", json::object()));
  } else {
    const json& e = j.at("explicit");
    spec.d = e.at("d").get<Eigen::Index>();
    spec.n_ticks = e.at("n_ticks").get<Eigen::Index>();
    spec.mode = parse_mode(e.value("mode", std::string("cut-off")));
    spec.h = json_to_matrix(e.at("h"));
    for (const json& l : e.value("l_ops", json::array()))
      spec.l_ops.push_back(json_to_matrix(l));
    for (const json& jo : e.at("j_ops")) spec.j_ops.push_back(json_to_matrix(jo));
    spec.rho_c0 = DensityMatrix(json_to_matrix(e.at("rho_c0")));
    spec.k0 = e.value("k0", Eigen::Index{0});
  }
  spec.validate();
  return spec;
}

// ---------------------------------------------------------------------------
// Run configuration
// ---------------------------------------------------------------------------

struct CheckRequest {
  std::string name;
  double tolerance = -1.0;  // negative: use the check's default
  bool expect_fail = false;
  json params;  // check-specific extras (times, basis, eps, ...)
};

struct TrajectoryConfig {
  Eigen::Index n = 0;
  std::uint64_t seed = 0;
  double t_max = 0.0;
};

struct RunConfig {
  ClockSpec clock;
  std::optional<ClockSpec> clock_b;  // second clock for the alternation game
  double t_max = 0.0;
  Eigen::Index steps = 0;
  std::vector<Eigen::Index> k_values;
  std::optional<TrajectoryConfig> trajectories;
  std::vector<CheckRequest> checks;
  json raw;
};

inline RunConfig parse_config(const json& j) {
  if (!j.is_object()) throw validation_error("config: top level must be an object");
  RunConfig cfg;
  cfg.raw = j;
  cfg.clock = spec_from_json(j.at("clock"));
  if (j.contains("clock_b")) cfg.clock_b = spec_from_json(j.at("clock_b"));
  if (j.contains("grid")) {
    const json& g = j.at("grid");
    cfg.t_max = g.at("t_max").get<double>();
    cfg.steps = g.at("steps").get<Eigen::Index>();
    if (!std::isfinite(cfg.t_max) || cfg.t_max <= 0 || cfg.steps < 1)
      throw validation_error("config: grid needs t_max > 0 and steps >= 1");
  }
  if (j.contains("k")) {
    const json& k = j.at("k");
    if (k.is_number_integer())
      cfg.k_values.push_back(k.get<Eigen::Index>());
    else
      for (const json& kk : k) cfg.k_values.push_back(kk.get<Eigen::Index>());
    for (Eigen::Index kv : cfg.k_values)
      if (kv < 1) throw validation_error("config: k values must be >= 1");
  }
  if (j.contains("trajectories")) {
    const json& t = j.at("trajectories");
    TrajectoryConfig tc;
    tc.n = t.at("n").get<Eigen::Index>();
    tc.seed = t.value("seed", std::uint64_t{0});
    tc.t_max = t.at("t_max").get<double>();
    if (tc.n < 1 || !(tc.t_max > 0) || !std::isfinite(tc.t_max))
      throw validation_error("config: trajectories needs n >= 1, t_max > 0");
    cfg.trajectories = tc;
  }
  if (j.contains("checks")) {
    for (const json& c : j.at("checks")) {
      CheckRequest req;
      if (c.is_string()) {
        req.name = c.get<std::string>();
      } else {
        req.name = c.at("name").get<std::string>();
        req.tolerance = c.value("tolerance", -1.0);
        req.expect_fail = c.value("expect", std::string("pass")) == "fail";
        req.params = c;
      }
      cfg.checks.push_back(std::move(req));
    }
  }
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw validation_error("config: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw validation_error(std::string("config: parse error: ") + e.what());
  }
  return parse_config(j);
}

// ---------------------------------------------------------------------------
// Hashing: FNV-1a over the canonical (key-sorted, whitespace-free) dump.
// ---------------------------------------------------------------------------

inline std::string config_hash(const json& j) {
  const std::string canonical = j.dump();  // nlohmann objects iterate sorted
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------
// CSV: 17 significant digits, '.' separator, LF endings.
// ---------------------------------------------------------------------------

inline std::string format_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void write_csv(const std::string& path, const std::string& header,
                      const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path, std::ios::binary);  // binary keeps LF on any host
  if (!out) throw error("cannot open output file " + path);
  out << header << "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ",";
      out << row[i];
    }
    out << "\n";
  }
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

struct ResultManifest {
  std::string config_hash;
  std::string version = toolkit_version();
  std::string rng_algorithm = rng_algorithm_id();
  double runtime_seconds = 0.0;
  std::vector<std::string> files;

  json to_json() const {
    return json{{"config_hash", config_hash},
                {"version", version},
                {"rng_algorithm", rng_algorithm},
                {"runtime_seconds", runtime_seconds},
                {"files", files}};
  }
};

inline void write_manifest(const std::string& dir, const ResultManifest& m) {
  std::ofstream out(dir + "/manifest.json", std::ios::binary);
  if (!out) throw error("cannot open output file " + dir + "/manifest.json");
  out << m.to_json().dump(2) << "\n";
}

}  // namespace io
}  // namespace ticksim

#endif  // TICKSIM_IO_HPP
