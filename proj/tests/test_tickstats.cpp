#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "ticksim/tickstats.hpp"

using namespace ticksim;
using Catch::Approx;

namespace {

// Erlang(n, 1) density: t^{n-1} e^{-t} / (n-1)!
double erlang_density(int n, double t) {
  double fact = 1.0;
  for (int i = 2; i < n; ++i) fact *= i;
  return std::pow(t, n - 1) * std::exp(-t) / fact;
}

double max_density_error(const DelayFunction& df, int erlang_n) {
  double worst = 0.0;
  for (std::size_t i = 0; i < df.density.size(); ++i) {
    const double t = df.grid.time(static_cast<Eigen::Index>(i));
    worst = std::max(worst, std::abs(df.density[i] - erlang_density(erlang_n, t)));
  }
  return worst;
}

}  // namespace

TEST_CASE("ladder delay functions match Erlang densities") {
  REQUIRE(max_density_error(
              delay_function(ladder_clock(1), 1, TimeGrid::from_horizon(20, 400)),
              1) < 1e-9);
  REQUIRE(max_density_error(
              delay_function(ladder_clock(2), 1, TimeGrid::from_horizon(30, 600)),
              2) < 1e-9);
  REQUIRE(max_density_error(
              delay_function(ladder_clock(2), 2, TimeGrid::from_horizon(40, 800)),
              4) < 1e-9);
}

TEST_CASE("periodic winding counts cumulative ticks") {
  // k = 3 exceeds the register size; the periodic cascade must still count
  // three full revolutions: Erlang(6, 1).
  const ClockSpec s = ladder_clock(2, 1, RegisterMode::Periodic);
  const DelayFunction df = delay_function(s, 3, TimeGrid::from_horizon(50, 1000));
  REQUIRE(max_density_error(df, 6) < 1e-9);
}

TEST_CASE("delay function domain errors") {
  REQUIRE_THROWS_AS(
      delay_function(ladder_clock(2), 0, TimeGrid::from_horizon(10, 100)),
      validation_error);
  // cut-off register with N_T = 3
  REQUIRE_THROWS_AS(
      delay_function(ladder_clock(2), 4, TimeGrid::from_horizon(10, 100)),
      validation_error);
}

TEST_CASE("horizon warning on short grids") {
  const DelayFunction df =
      delay_function(ladder_clock(5), 1, TimeGrid::from_horizon(3.0, 60));
  REQUIRE_FALSE(df.horizon_ok);
  REQUIRE(df.suggested_t_max == Approx(6.0));
  REQUIRE_THROWS_AS(accuracy(df), accuracy_error);
}

TEST_CASE("pure-state fast path agrees with the cascade path") {
  const ClockSpec fast = quasi_ideal_clock(8);
  ClockSpec slow = fast;
  slow.l_ops.push_back(Mat::Zero(8, 8));  // forces the block-cascade path
  const TimeGrid grid = TimeGrid::from_horizon(40.0, 800);
  const DelayFunction a = delay_function(fast, 1, grid);
  const DelayFunction b = delay_function(slow, 1, grid);
  double worst = 0.0;
  for (std::size_t i = 0; i < a.density.size(); ++i)
    worst = std::max(worst, std::abs(a.density[i] - b.density[i]));
  REQUIRE(worst < 1e-10);
}

TEST_CASE("quasi-ideal reset and non-reset variants share first-tick statistics") {
  QuasiIdealParams nr;
  nr.reset = false;
  const TimeGrid grid = TimeGrid::from_horizon(40.0, 400);
  const DelayFunction a = delay_function(quasi_ideal_clock(8), 1, grid);
  const DelayFunction b = delay_function(quasi_ideal_clock(8, nr), 1, grid);
  double worst = 0.0;
  for (std::size_t i = 0; i < a.density.size(); ++i)
    worst = std::max(worst, std::abs(a.density[i] - b.density[i]));
  REQUIRE(worst < 1e-10);
}

TEST_CASE("accuracy on analytic Erlang input") {
  DelayFunction df;
  df.k = 1;
  df.grid = TimeGrid::from_horizon(40.0, 4000);
  for (Eigen::Index i = 0; i <= df.grid.steps; ++i)
    df.density.push_back(erlang_density(2, df.grid.time(i)));
  df.mass = 1.0;
  const AccuracySummary s = accuracy(df);
  REQUIRE(s.mean == Approx(2.0).margin(1e-5));
  REQUIRE(s.variance == Approx(2.0).margin(1e-4));
  REQUIRE(s.r_value == Approx(2.0).margin(1e-4));
}

TEST_CASE("ladder accuracy R_k = k d and grid-refinement stability") {
  const ClockSpec s = ladder_clock(5);
  const AccuracySummary a =
      accuracy(delay_function(s, 1, TimeGrid::from_horizon(100.0, 10000)));
  REQUIRE(a.r_value == Approx(5.0).margin(1e-3));

  const AccuracySummary fine =
      accuracy(delay_function(s, 1, TimeGrid::from_horizon(100.0, 20000)));
  REQUIRE(std::abs(fine.r_value - a.r_value) < 0.1 * 1e-3);
}

TEST_CASE("reset-clock law R_k = k R_1") {
  const ClockSpec s = ladder_clock(3);
  double r1 = 0.0;
  for (Eigen::Index k = 1; k <= 3; ++k) {
    const AccuracySummary a = accuracy(
        delay_function(s, k, TimeGrid::from_horizon(20.0 * 3 * k, 3000 * k)));
    if (k == 1)
      r1 = a.r_value;
    else
      REQUIRE(std::abs(a.r_value - k * r1) / (k * r1) < 0.005);
  }
}

TEST_CASE("trajectory sampling: exponential clock") {
  ClockSpec s;
  s.d = 1;
  s.n_ticks = 3;
  s.mode = RegisterMode::Periodic;
  s.h = Mat::Zero(1, 1);
  s.j_ops = {Mat::Identity(1, 1)};
  s.rho_c0 = basis_state(1, 0);

  const auto recs = sample_trajectories(s, 50.0, 2000, 7u);
  // Only gaps opening well before the horizon: the final gap of each
  // trajectory is censored at t_max, which would bias against long waits.
  std::vector<double> gaps;
  for (const auto& r : recs) {
    double prev = 0.0;
    for (double t : r.tick_times) {
      if (prev < 25.0) gaps.push_back(t - prev);
      prev = t;
    }
  }
  REQUIRE(gaps.size() > 10000);
  std::sort(gaps.begin(), gaps.end());
  double ks = 0.0;
  const double n = static_cast<double>(gaps.size());
  for (std::size_t i = 0; i < gaps.size(); ++i) {
    const double cdf = 1.0 - std::exp(-gaps[i]);
    ks = std::max(ks, std::abs(cdf - (i + 1) / n));
    ks = std::max(ks, std::abs(cdf - i / n));
  }
  REQUIRE(ks < 1.63 / std::sqrt(n));  // 1% critical value
}

TEST_CASE("trajectory sampling determinism") {
  const ClockSpec s = ladder_clock(3, 5, RegisterMode::Periodic);
  const auto a = sample_trajectories(s, 30.0, 200, 42u, 1);
  const auto b = sample_trajectories(s, 30.0, 200, 42u, 1);
  const auto c = sample_trajectories(s, 30.0, 200, 42u, 4);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    REQUIRE(a[i].tick_times == b[i].tick_times);
    REQUIRE(a[i].tick_times == c[i].tick_times);
    REQUIRE(a[i].trajectory_id == c[i].trajectory_id);
  }
  const auto d = sample_trajectories(s, 30.0, 200, 43u, 1);
  bool any_diff = false;
  for (std::size_t i = 0; i < a.size(); ++i)
    any_diff = any_diff || a[i].tick_times != d[i].tick_times;
  REQUIRE(any_diff);
}

TEST_CASE("cut-off sampling truncates at N_T ticks") {
  const ClockSpec s = ladder_clock(2, 2, RegisterMode::CutOff);
  const auto recs = sample_trajectories(s, 200.0, 100, 5u);
  for (const auto& r : recs) {
    REQUIRE(r.tick_times.size() <= 2);
    REQUIRE(std::is_sorted(r.tick_times.begin(), r.tick_times.end()));
    if (r.tick_times.size() == 2) REQUIRE(r.truncated);
  }
}

TEST_CASE("empirical accuracy matches deterministic moments") {
  const ClockSpec s = ladder_clock(3, 3, RegisterMode::Periodic);
  const auto recs = sample_trajectories(s, 60.0, 20000, 11u);
  const EmpiricalAccuracy ea = empirical_accuracy(recs, 1);
  const AccuracySummary det =
      accuracy(delay_function(s, 1, TimeGrid::from_horizon(60.0, 6000)));
  REQUIRE(std::abs(ea.summary.mean - det.mean) < 3.0 * ea.se_mean);
  REQUIRE(std::abs(ea.summary.variance - det.variance) < 3.0 * ea.se_variance);
  REQUIRE(std::abs(ea.summary.r_value - det.r_value) < 3.0 * ea.se_r);
  REQUIRE(ea.n_used == 20000);
}

TEST_CASE("empirical accuracy error paths") {
  std::vector<TickRecord> same(5);
  for (std::int64_t i = 0; i < 5; ++i) {
    same[static_cast<std::size_t>(i)].trajectory_id = i;
    same[static_cast<std::size_t>(i)].tick_times = {1.0};
  }
  REQUIRE_THROWS_AS(empirical_accuracy(same, 1), ticksim::error);

  std::vector<TickRecord> thin(3);
  for (std::int64_t i = 0; i < 3; ++i) {
    thin[static_cast<std::size_t>(i)].trajectory_id = i;
    thin[static_cast<std::size_t>(i)].truncated = true;
  }
  REQUIRE_THROWS_AS(empirical_accuracy(thin, 1), insufficient_data_error);

  std::vector<TickRecord> mixed(4);
  for (std::int64_t i = 0; i < 4; ++i) mixed[static_cast<std::size_t>(i)].trajectory_id = i;
  mixed[0].tick_times = {1.0};
  mixed[1].tick_times = {2.0};
  mixed[2].tick_times = {1.5};
  mixed[3].truncated = true;
  const EmpiricalAccuracy ea = empirical_accuracy(mixed, 1);
  REQUIRE(ea.n_used == 3);
  REQUIRE(ea.n_excluded == 1);
}

TEST_CASE("alternate ticks game referee") {
  auto rec = [](std::int64_t id, std::vector<double> times) {
    TickRecord r;
    r.trajectory_id = id;
    r.tick_times = std::move(times);
    return r;
  };

  // perfect alternation
  auto g1 = atg_referee({rec(0, {1, 3, 5})}, {rec(0, {2, 4, 6})});
  REQUIRE(g1.size() == 1);
  REQUIRE_FALSE(g1[0].violation);
  REQUIRE(g1[0].alternation_length == 6);
  REQUIRE(g1[0].consumed == 6);

  // violation at the second tick of a
  auto g2 = atg_referee({rec(0, {1, 2})}, {rec(0, {3})});
  REQUIRE(g2[0].violation);
  REQUIRE(g2[0].alternation_length == 1);
  REQUIRE(g2[0].consumed == 2);
  REQUIRE(g2[0].winner == 'b');
  REQUIRE(g2[0].length_start_a == 1);
  REQUIRE(g2[0].length_start_b == 0);

  // exact tie ends as a draw
  auto g3 = atg_referee({rec(0, {1.0})}, {rec(0, {1.0})});
  REQUIRE(g3[0].draw);

  REQUIRE_THROWS_AS(atg_referee({rec(0, {1.0})}, {rec(1, {2.0})}),
                    ticksim::error);
}

TEST_CASE("alternate ticks game: Poisson oracle") {
  ClockSpec s;
  s.d = 1;
  s.n_ticks = 3;
  s.mode = RegisterMode::Periodic;
  s.h = Mat::Zero(1, 1);
  s.j_ops = {Mat::Identity(1, 1)};
  s.rho_c0 = basis_state(1, 0);

  const auto a = sample_trajectories(s, 40.0, 10000, 101u);
  const auto b = sample_trajectories(s, 40.0, 10000, 202u);
  const auto games = atg_referee(a, b);
  double mean_len = 0.0;
  std::int64_t n = 0;
  for (const auto& g : games) {
    if (g.draw) continue;
    mean_len += static_cast<double>(g.consumed);
    ++n;
  }
  mean_len /= static_cast<double>(n);
  REQUIRE(mean_len > 2.5);
  REQUIRE(mean_len < 3.5);
}

TEST_CASE("rng metadata") {
  REQUIRE(std::string(rng_algorithm_id()) == "splitmix64-v1");
}
