#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "ticksim/ticksim.hpp"

using namespace ticksim;
using Catch::Approx;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string cli = TICKSIM_CLI_PATH;

int run(const std::string& args) {
  const int rc = std::system((cli + " " + args + " 2>/dev/null").c_str());
  return WEXITSTATUS(rc);
}

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("ticksim_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_config(const fs::path& dir, const std::string& body) {
  const fs::path p = dir / "config.json";
  std::ofstream(p) << body;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ostringstream ss;
  ss << std::ifstream(p).rdbuf();
  return ss.str();
}

double max_abs(const Mat& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("explicit config round-trips builtin specs") {
  std::vector<ClockSpec> specs = {ladder_clock(3, 2, RegisterMode::Periodic),
                                  thermodynamic_clock({}, 1),
                                  quasi_ideal_clock(4, {}, 1)};
  for (const ClockSpec& s : specs) {
    const ClockSpec back = io::spec_from_json(io::spec_to_json(s));
    GeneratorBundle g1 = build_generators(s);
    GeneratorBundle g2 = build_generators(back);
    REQUIRE(max_abs(g1.full.mat - g2.full.mat) <= 1e-15);
    REQUIRE(max_abs(g1.no_tick.mat - g2.no_tick.mat) <= 1e-15);
    REQUIRE(max_abs(s.rho_c0.mat - back.rho_c0.mat) <= 1e-15);
  }
}

TEST_CASE("config hash is canonical") {
  const auto a = json::parse(R"({"clock": {"builtin": "ladder"}, "grid": {"t_max": 1.0, "steps": 10}})");
  const auto b = json::parse(R"({
      "grid": {"steps": 10, "t_max": 1.0},
      "clock": {"builtin": "ladder"}
  })");
  REQUIRE(io::config_hash(a) == io::config_hash(b));
  auto c = a;
  c["grid"]["steps"] = 11;
  REQUIRE(io::config_hash(a) != io::config_hash(c));
}

TEST_CASE("csv values survive a 17-significant-digit round trip") {
  for (double v : {1.0 / 3.0, 2.718281828459045, 1e-17, 123456.789012345678}) {
    REQUIRE(std::stod(io::format_value(v)) == v);
  }
}

TEST_CASE("cli: usage and validation errors") {
  REQUIRE(run("delay --config /nonexistent.json") == 2);

  const fs::path dir = fresh_dir("validation");
  // k beyond N_T on a cut-off register
  const fs::path cfg = write_config(dir, R"({
    "clock": {"builtin": "ladder", "params": {"d": 2, "n_ticks": 3}},
    "grid": {"t_max": 10.0, "steps": 100},
    "k": [4]})");
  REQUIRE(run("delay --config " + cfg.string() + " --out " + dir.string()) == 2);

  // accuracy with an empty k range
  const fs::path cfg2 = write_config(dir, R"({
    "clock": {"builtin": "ladder", "params": {"d": 2}},
    "grid": {"t_max": 60.0, "steps": 600},
    "k": []})");
  REQUIRE(run("accuracy --config " + cfg2.string() + " --out " + dir.string()) == 2);

  // corrupted explicit spec: non-Hermitian H
  const fs::path cfg3 = write_config(dir, R"({
    "clock": {"explicit": {"d": 2, "n_ticks": 2, "mode": "cut-off",
      "h": [[[0,0],[1,0]],[[0,0],[0,0]]],
      "j_ops": [[[[0,0],[0,0]],[[1,0],[0,0]]]],
      "rho_c0": [[[1,0],[0,0]],[[0,0],[0,0]]]}},
    "grid": {"t_max": 10.0, "steps": 100}})");
  REQUIRE(run("verify --config " + cfg3.string() + " --out " + dir.string()) == 2);
}

TEST_CASE("cli: delay output matches the analytic density") {
  const fs::path dir = fresh_dir("delay");
  const fs::path cfg = write_config(dir, R"({
    "clock": {"builtin": "ladder", "params": {"d": 2}},
    "grid": {"t_max": 20.0, "steps": 2000},
    "k": [1]})");
  REQUIRE(run("delay --config " + cfg.string() + " --out " + dir.string()) == 0);

  std::ifstream csv(dir / "delay_k1.csv");
  std::string line;
  std::getline(csv, line);
  REQUIRE(line == "t,density");
  double worst = 0.0;
  while (std::getline(csv, line)) {
    const auto comma = line.find(',');
    const double t = std::stod(line.substr(0, comma));
    const double p = std::stod(line.substr(comma + 1));
    worst = std::max(worst, std::abs(p - t * std::exp(-t)));
  }
  REQUIRE(worst < 1e-8);

  // manifest lists every emitted file
  const json manifest = json::parse(slurp(dir / "manifest.json"));
  REQUIRE(manifest.at("rng_algorithm") == "splitmix64-v1");
  const auto& files = manifest.at("files");
  REQUIRE(std::find(files.begin(), files.end(), "delay_k1.csv") != files.end());
  REQUIRE(std::find(files.begin(), files.end(), "manifest.json") != files.end());
}

TEST_CASE("cli: horizon deficit exits with the accuracy code") {
  const fs::path dir = fresh_dir("horizon");
  const fs::path cfg = write_config(dir, R"({
    "clock": {"builtin": "ladder", "params": {"d": 5}},
    "grid": {"t_max": 3.0, "steps": 100},
    "k": [1]})");
  REQUIRE(run("delay --config " + cfg.string() + " --out " + dir.string()) == 3);
  REQUIRE(run("accuracy --config " + cfg.string() + " --out " + dir.string()) == 3);
}

TEST_CASE("cli: trajectories reproducibility") {
  const std::string body = R"({
    "clock": {"builtin": "ladder", "params": {"d": 3, "n_ticks": 3, "mode": "periodic"}},
    "trajectories": {"n": 500, "seed": 42, "t_max": 30.0},
    "k": [1]})";
  const fs::path d1 = fresh_dir("traj1"), d2 = fresh_dir("traj2"),
                 d3 = fresh_dir("traj3");
  const fs::path c1 = write_config(d1, body);
  REQUIRE(run("trajectories --config " + c1.string() + " --out " + d1.string() +
              " --threads 1") == 0);
  REQUIRE(run("trajectories --config " + c1.string() + " --out " + d2.string() +
              " --threads 1") == 0);
  REQUIRE(run("trajectories --config " + c1.string() + " --out " + d3.string() +
              " --threads 8") == 0);
  REQUIRE(slurp(d1 / "ticks.csv") == slurp(d2 / "ticks.csv"));
  REQUIRE(slurp(d1 / "ticks.csv") == slurp(d3 / "ticks.csv"));
  REQUIRE(slurp(d1 / "empirical_accuracy.csv") ==
          slurp(d3 / "empirical_accuracy.csv"));
  REQUIRE_FALSE(slurp(d1 / "ticks.csv").empty());

  // a different seed changes the output
  const fs::path d4 = fresh_dir("traj4");
  REQUIRE(run("trajectories --config " + c1.string() + " --out " + d4.string() +
              " --seed 43") == 0);
  REQUIRE(slurp(d1 / "ticks.csv") != slurp(d4 / "ticks.csv"));
}

TEST_CASE("cli: alternate ticks game output") {
  const fs::path dir = fresh_dir("atg");
  const fs::path cfg = write_config(dir, R"({
    "clock": {"builtin": "ladder", "params": {"d": 1, "n_ticks": 3, "mode": "periodic"}},
    "clock_b": {"builtin": "ladder", "params": {"d": 1, "n_ticks": 3, "mode": "periodic"}},
    "trajectories": {"n": 2000, "seed": 7, "t_max": 30.0},
    "k": [1]})");
  REQUIRE(run("trajectories --config " + cfg.string() + " --out " +
              dir.string()) == 0);
  std::ifstream csv(dir / "atg.csv");
  std::string line;
  std::getline(csv, line);
  REQUIRE(line == "game_id,length,winner");
  double total = 0.0;
  int n = 0;
  while (std::getline(csv, line)) {
    const auto c1 = line.find(','), c2 = line.find(',', c1 + 1);
    total += std::stod(line.substr(c1 + 1, c2 - c1 - 1));
    ++n;
  }
  REQUIRE(n == 2000);
  REQUIRE(total / n > 2.5);
  REQUIRE(total / n < 3.5);
}

TEST_CASE("cli: verify") {
  const fs::path dir = fresh_dir("verify");
  const fs::path cfg = write_config(dir, R"({
    "clock": {"builtin": "ladder", "params": {"d": 3, "n_ticks": 2, "mode": "periodic"}}})");
  REQUIRE(run("verify --config " + cfg.string() + " --out " + dir.string()) == 0);
  const json rep = json::parse(slurp(dir / "verify.json"));
  for (const auto& [name, entry] : rep.items()) {
    REQUIRE(entry.at("passed").get<bool>());
    REQUIRE(entry.at("max_deviation").get<double>() <=
            entry.at("tolerance").get<double>());
  }

  // expected failure is reported but does not fail the process
  const fs::path dir2 = fresh_dir("verify_expect");
  const fs::path cfg2 = write_config(dir2, R"({
    "clock": {"builtin": "quasi-ideal", "params": {"d": 8, "n_ticks": 1}},
    "checks": [{"name": "classical_clockwork", "expect": "fail", "t": 2.0}]})");
  REQUIRE(run("verify --config " + cfg2.string() + " --out " + dir2.string()) == 0);
  const json rep2 = json::parse(slurp(dir2 / "verify.json"));
  REQUIRE_FALSE(rep2.at("classical_clockwork").at("passed").get<bool>());
}
