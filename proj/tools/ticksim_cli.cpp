// Batch front end: delay functions, accuracy, trajectory sampling, and
// axiom verification from a JSON configuration.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ticksim/ticksim.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ticksim;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitAccuracy = 3;
constexpr int kExitResource = 4;
constexpr int kExitInternal = 5;

struct Options {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  int threads = 1;
};

struct Emitter {
  std::string dir;
  io::ResultManifest manifest;
  std::chrono::steady_clock::time_point start =
      std::chrono::steady_clock::now();

  explicit Emitter(const Options& opt, const io::RunConfig& cfg) : dir(opt.out_dir) {
    fs::create_directories(dir);
    manifest.config_hash = io::config_hash(cfg.raw);
  }

  std::string path(const std::string& name) {
    manifest.files.push_back(name);
    return dir + "/" + name;
  }

  void finish() {
    manifest.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    manifest.files.push_back("manifest.json");
    io::write_manifest(dir, manifest);
  }
};

TimeGrid grid_from(const io::RunConfig& cfg) {
  if (!(cfg.t_max > 0) || cfg.steps < 1)
    throw validation_error("config: a grid section with t_max and steps is required");
  return TimeGrid::from_horizon(cfg.t_max, cfg.steps);
}

int cmd_delay(const Options& opt, const io::RunConfig& cfg) {
  const TimeGrid grid = grid_from(cfg);
  std::vector<Eigen::Index> ks = cfg.k_values;
  if (ks.empty()) ks.push_back(1);

  Emitter em(opt, cfg);
  bool horizon_ok = true;
  for (Eigen::Index k : ks) {
    const DelayFunction df = delay_function(cfg.clock, k, grid);
    horizon_ok = horizon_ok && df.horizon_ok;
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < df.density.size(); ++i)
      rows.push_back({io::format_value(df.grid.time(static_cast<Eigen::Index>(i))),
                      io::format_value(df.density[i])});
    io::write_csv(em.path("delay_k" + std::to_string(k) + ".csv"), "t,density",
                  rows);
    if (!df.horizon_ok)
      std::cerr << "delay: horizon too short for k = " << k
                << " (mass " << df.mass << "); suggested t_max "
                << df.suggested_t_max << "\n";
  }
  em.finish();
  return horizon_ok ? kExitOk : kExitAccuracy;
}

int cmd_accuracy(const Options& opt, const io::RunConfig& cfg) {
  const TimeGrid grid = grid_from(cfg);
  if (cfg.k_values.empty())
    throw validation_error("accuracy: config needs a nonempty k range");

  Emitter em(opt, cfg);
  std::vector<std::vector<std::string>> rows;
  for (Eigen::Index k : cfg.k_values) {
    const AccuracySummary s = accuracy(delay_function(cfg.clock, k, grid));
    rows.push_back({std::to_string(k), io::format_value(s.mean),
                    io::format_value(s.variance), io::format_value(s.r_value)});
  }
  io::write_csv(em.path("accuracy.csv"), "k,mean,variance,R", rows);
  em.finish();
  return kExitOk;
}

int cmd_trajectories(const Options& opt, const io::RunConfig& cfg) {
  if (!cfg.trajectories)
    throw validation_error("trajectories: config needs a trajectories section");
  io::TrajectoryConfig tc = *cfg.trajectories;
  if (opt.seed) tc.seed = *opt.seed;

  Emitter em(opt, cfg);
  const std::vector<TickRecord> recs =
      sample_trajectories(cfg.clock, tc.t_max, tc.n, tc.seed, opt.threads);

  std::vector<std::vector<std::string>> tick_rows;
  for (const TickRecord& r : recs)
    for (std::size_t i = 0; i < r.tick_times.size(); ++i)
      tick_rows.push_back({std::to_string(r.trajectory_id),
                           std::to_string(i + 1),
                           io::format_value(r.tick_times[i])});
  io::write_csv(em.path("ticks.csv"), "trajectory_id,tick_index,time", tick_rows);

  std::vector<Eigen::Index> ks = cfg.k_values;
  if (ks.empty()) ks.push_back(1);
  std::vector<std::vector<std::string>> acc_rows;
  for (Eigen::Index k : ks) {
    const EmpiricalAccuracy ea = empirical_accuracy(recs, k);
    acc_rows.push_back(
        {std::to_string(k), io::format_value(ea.summary.mean),
         io::format_value(ea.summary.variance), io::format_value(ea.summary.r_value),
         io::format_value(ea.se_mean), io::format_value(ea.se_variance),
         io::format_value(ea.se_r), std::to_string(ea.n_used),
         std::to_string(ea.n_excluded)});
  }
  io::write_csv(em.path("empirical_accuracy.csv"),
                "k,mean,variance,R,se_mean,se_variance,se_R,n_used,n_excluded",
                acc_rows);

  if (cfg.clock_b) {
    // Independent stream for the second clock, still a pure function of the
    // master seed.
    const std::uint64_t seed_b = tc.seed ^ 0xA5A5A5A55A5A5A5AULL;
    const std::vector<TickRecord> recs_b =
        sample_trajectories(*cfg.clock_b, tc.t_max, tc.n, seed_b, opt.threads);
    std::vector<std::vector<std::string>> game_rows;
    for (const GameResult& g : atg_referee(recs, recs_b))
      game_rows.push_back({std::to_string(g.game_id),
                           std::to_string(g.consumed),
                           std::string(1, g.winner)});
    io::write_csv(em.path("atg.csv"), "game_id,length,winner", game_rows);
  }
  em.finish();
  return kExitOk;
}

json report_to_json(const VerificationReport& rep) {
  return json{{"passed", rep.passed},
              {"max_deviation", rep.max_deviation},
              {"tolerance", rep.tolerance}};
}

int cmd_verify(const Options& opt, const io::RunConfig& cfg) {
  const ClockSpec& spec = cfg.clock;
  std::vector<io::CheckRequest> checks = cfg.checks;
  if (checks.empty()) {
    for (const char* name :
         {"condition1", "condition3", "condition4", "classical_register",
          "self_timing", "cptp"})
      checks.push_back({name, -1.0, false, json::object()});
    if (spec.mode == RegisterMode::Periodic)
      checks.push_back({"k_independence", -1.0, false, json::object()});
    else
      checks.push_back({"condition5", -1.0, false, json::object()});
  }

  Emitter em(opt, cfg);
  json out = json::object();
  bool all_ok = true;
  for (const io::CheckRequest& req : checks) {
    const json& p = req.params.is_object() ? req.params : json::object();
    const double t = p.value("t", 1.0);
    auto tol = [&](double dflt) { return req.tolerance > 0 ? req.tolerance : dflt; };
    VerificationReport rep;
    if (req.name == "condition1") {
      rep = check_condition1(spec, t, p.value("samples", 10), tol(1e-10));
    } else if (req.name == "condition3") {
      rep = check_condition3(spec, tol(1e-12));
    } else if (req.name == "condition4") {
      rep = check_condition4(spec, p.value("samples", 3), tol(0.1));
    } else if (req.name == "condition5") {
      rep = check_condition5(spec, p.value("times", std::vector<double>{0.5, t}),
                             tol(1e-12), p.value("samples", 3));
    } else if (req.name == "classical_register") {
      rep = check_classical_register(spec, t, tol(1e-12), p.value("samples", 3));
    } else if (req.name == "classical_clockwork") {
      Mat basis = p.contains("basis") ? io::json_to_matrix(p.at("basis"))
                                      : Mat(Mat::Identity(spec.d, spec.d));
      rep = check_classical_clockwork(
          spec, basis, TimeGrid::from_horizon(t, p.value("steps", 16)),
          tol(1e-12));
    } else if (req.name == "measured_equivalence") {
      rep = check_measured_equivalence(
          spec, spec.rho_c0, spec.k0,
          p.value("times", std::vector<double>{0.3, 0.4, 0.5}), tol(1e-10));
    } else if (req.name == "finite_memory") {
      const FiniteMemoryResult fm = check_finite_running_memory(
          spec, basis_state(spec.register_dim(), spec.k0),
          p.value("eps", 1e-6), t);
      rep = fm.report;
    } else if (req.name == "self_timing") {
      const SelfTimingResult st =
          self_timing_check(spec, p.value("t1", 0.7), p.value("t2", 1.3), tol(1e-9));
      rep = {"self_timing", st.passed, st.max_deviation, tol(1e-9), {}};
    } else if (req.name == "cptp") {
      rep = check_cptp(build_generators(spec).full, t);
    } else if (req.name == "k_independence") {
      rep = check_k_independence(spec, t, p.value("samples", 3), tol(1e-10));
    } else {
      throw validation_error("verify: unknown check \"" + req.name + "\"");
    }
    out[req.name] = report_to_json(rep);
    if (req.expect_fail)
      out[req.name]["expected"] = "fail";
    else
      all_ok = all_ok && rep.passed;
  }

  {
    std::ofstream f(em.path("verify.json"), std::ios::binary);
    f << out.dump(2) << "\n";
  }
  em.finish();
  return all_ok ? kExitOk : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ticking-clock simulation toolkit"};
  app.require_subcommand(1);

  Options opt;
  std::string command;
  for (const char* name : {"delay", "accuracy", "trajectories", "verify"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", opt.config_path, "configuration file")->required();
    sub->add_option("--out", opt.out_dir, "output directory");
    sub->add_option("--seed", [&opt](const CLI::results_t& res) {
      opt.seed = std::stoull(res[0]);
      return true;
    }, "override the trajectory seed");
    sub->add_option("--threads", opt.threads, "worker threads");
    sub->callback([&command, name] { command = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return e.get_exit_code() == 0 ? kExitOk : kExitValidation;
  }

  try {
    const io::RunConfig cfg = io::load_config(opt.config_path);
    if (opt.threads < 1) throw validation_error("--threads must be >= 1");
    if (command == "delay") return cmd_delay(opt, cfg);
    if (command == "accuracy") return cmd_accuracy(opt, cfg);
    if (command == "trajectories") return cmd_trajectories(opt, cfg);
    return cmd_verify(opt, cfg);
  } catch (const validation_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const shape_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const resource_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitResource;
  } catch (const accuracy_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitAccuracy;
  } catch (const insufficient_data_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitAccuracy;
  } catch (const ticksim::error& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}
