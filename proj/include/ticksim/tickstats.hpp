#ifndef TICKSIM_TICKSTATS_HPP
#define TICKSIM_TICKSTATS_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <limits>
#include <optional>
#include <thread>
#include <utility>
#include <vector>

#include "ticksim/clock.hpp"
#include "ticksim/evolve.hpp"
#include "ticksim/linalg.hpp"

namespace ticksim {

// ---------------------------------------------------------------------------
// Delay functions
// ---------------------------------------------------------------------------

struct DelayFunction {
  Eigen::Index k = 1;
  TimeGrid grid;
  std::vector<double> density;  // per unit coordinate time, on grid points
  double mass = 0.0;            // trapezoidal integral
  bool horizon_ok = true;       // false: mass deficit with non-negligible tail
  double suggested_t_max = 0.0;
};

namespace detail {

inline double trapezoid(const std::vector<double>& f, double dt) {
  if (f.size() < 2) return 0.0;
  double acc = 0.5 * (f.front() + f.back());
  for (std::size_t i = 1; i + 1 < f.size(); ++i) acc += f[i];
  return acc * dt;
}

inline Mat jump_rate_operator(const ClockSpec& spec) {
  Mat jj = Mat::Zero(spec.d, spec.d);
  for (const Mat& j : spec.j_ops) jj += j.adjoint() * j;
  return jj;
}

}  // namespace detail

// k-th tick delay density P^(k)(t) = tr[sum_j J_j rho^(k-1)(t) J_j^dag] on
// the grid.  The number-resolved blocks 0..k-1 evolve under the open chain
// d rho^(n)/dt = C1 rho^(n) + C2 rho^(n-1); in periodic mode the block index
// counts cumulative ticks (winding), not the aliased register value.
inline DelayFunction delay_function(const ClockSpec& spec, Eigen::Index k,
                                    const TimeGrid& grid) {
  spec.validate();
  if (k < 1) throw validation_error("delay_function: k must be >= 1");
  if (spec.mode == RegisterMode::CutOff && k > spec.n_ticks)
    throw validation_error("delay_function: k exceeds N_T for a cut-off register");

  const Eigen::Index d = spec.d;
  const Mat jj = detail::jump_rate_operator(spec);

  DelayFunction df;
  df.k = k;
  df.grid = grid;
  df.density.reserve(static_cast<std::size_t>(grid.points()));

  const bool pure0 = std::abs((spec.rho_c0.mat * spec.rho_c0.mat).trace().real() - 1.0) < 1e-12;
  if (k == 1 && spec.l_ops.empty() && pure0) {
    // No-L clockwork keeps a pure state pure under the no-tick evolution:
    // rho^(0)(t) = e^{-i H_eff t} rho0 e^{+i H_eff^dag t}.  O(d) state size.
    GeneratorBundle gen = build_generators(spec, false);
    Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(spec.rho_c0.mat));
    Vec phi = es.eigenvectors().col(d - 1);  // the unit eigenvector
    const Mat u_step = matrix_exp(Mat(cxd(0.0, -1.0) * grid.dt * gen.h_eff));
    if (grid.t0 > 0)
      phi = matrix_exp(Mat(cxd(0.0, -1.0) * grid.t0 * gen.h_eff)) * phi;
    for (Eigen::Index i = 0; i <= grid.steps; ++i) {
      if (i > 0) phi = u_step * phi;
      df.density.push_back(std::real(cxd(phi.adjoint() * jj * phi)));
    }
  } else {
    GeneratorBundle gen = build_generators(spec, false);
    const Eigen::Index bs = d * d;
    std::vector<double> th(static_cast<std::size_t>(k), 1.0);
    const Mat big = detail::cascade_generator(gen, d, k, th, /*wrap=*/false);
    const Mat step = matrix_exp(Mat(grid.dt * big));
    Vec state = Vec::Zero(bs * k);
    state.head(bs) = vectorize(spec.rho_c0.mat);
    if (grid.t0 > 0) state = matrix_exp(Mat(grid.t0 * big)) * state;
    const Vec jj_vec = vectorize(Mat(jj.adjoint()));
    for (Eigen::Index i = 0; i <= grid.steps; ++i) {
      if (i > 0) state = step * state;
      // tr[jj * rho^(k-1)] = <vec(jj^dag), vec(rho)>
      df.density.push_back(std::real(jj_vec.dot(state.tail(bs))));
    }
  }

  double min_density = 0.0;
  for (double& v : df.density) min_density = std::min(min_density, v);
  if (min_density < -1e-12)
    throw numeric_error("delay_function: density negativity " +
                        std::to_string(min_density));

  df.mass = detail::trapezoid(df.density, grid.dt);
  if (df.mass < 0.999 && df.density.back() > 1e-8) {
    df.horizon_ok = false;
    df.suggested_t_max = 2.0 * grid.t_max();
    std::cerr << "delay_function: warning: mass " << df.mass
              << " with tail density " << df.density.back()
              << " at t_max; consider t_max >= " << df.suggested_t_max << "\n";
  }
  return df;
}

// ---------------------------------------------------------------------------
// Accuracy R_k = mean^2 / variance of the delay function
// ---------------------------------------------------------------------------

struct AccuracySummary {
  Eigen::Index k = 0;
  double mean = 0.0;
  double variance = 0.0;
  double r_value = 0.0;
  double mass = 0.0;
};

inline AccuracySummary accuracy(const DelayFunction& df) {
  if (df.mass < 0.999)
    throw accuracy_error("accuracy: delay function mass " +
                             std::to_string(df.mass) +
                             " < 0.999; truncated support invalidates moments",
                         df.suggested_t_max > 0 ? df.suggested_t_max
                                                : 2.0 * df.grid.t_max());
  const double dt = df.grid.dt;
  std::vector<double> m1(df.density.size()), m2(df.density.size());
  for (std::size_t i = 0; i < df.density.size(); ++i) {
    const double t = df.grid.time(static_cast<Eigen::Index>(i));
    m1[i] = t * df.density[i];
    m2[i] = t * t * df.density[i];
  }
  const double mean = detail::trapezoid(m1, dt) / df.mass;
  const double variance = detail::trapezoid(m2, dt) / df.mass - mean * mean;
  if (variance <= 0)
    throw error("accuracy: degenerate distribution (variance <= 0)");
  return {df.k, mean, variance, mean * mean / variance, df.mass};
}

// ---------------------------------------------------------------------------
// Monte Carlo trajectory sampling (tick-only unravelling)
// ---------------------------------------------------------------------------

struct TickRecord {
  std::int64_t trajectory_id = 0;
  std::vector<double> tick_times;
  bool truncated = false;  // hit t_max or register full
};

// Identifier of the substream scheme; recorded in output metadata.
inline const char* rng_algorithm_id() { return "splitmix64-v1"; }

namespace detail {

// splitmix64: the per-trajectory substream is a pure function of
// (master_seed, trajectory index).
struct SplitMix64 {
  std::uint64_t state;
  explicit SplitMix64(std::uint64_t seed) : state(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
  // uniform in (0, 1)
  double uniform() {
    const double u = static_cast<double>(next() >> 11) * 0x1.0p-53;
    return u > 0.0 ? u : 0x1.0p-53;
  }
};

inline std::uint64_t substream_seed(std::uint64_t master, std::uint64_t idx) {
  SplitMix64 mix(master ^ (0xD1B54A32D192ED03ULL * (idx + 1)));
  mix.next();
  return mix.next();
}

// Shared read-only tables for the sampler: coarse survival grid from a fixed
// start state, Taylor coefficients of the survival function at each grid
// point, and the state vectors needed to continue past a tick.
struct SurvivalTable {
  static constexpr int taylor_order = 9;
  double dt = 0.0;
  Eigen::Index n_steps = 0;
  std::vector<double> survival;           // S_i at grid points
  std::vector<std::array<double, taylor_order + 1>> taylor;  // S^(m)(t_i)
  std::vector<Vec> states;                // vec(rho) at grid points

  // Solve S(t_i + x) = u inside cell i; |S - u| <= 1e-10 by bisection on the
  // local Taylor polynomial.
  double refine(Eigen::Index i, double u) const {
    const auto& c = taylor[static_cast<std::size_t>(i)];
    auto eval = [&](double x) {
      double acc = 0.0, pw = 1.0, fact = 1.0;
      for (int m = 0; m <= taylor_order; ++m) {
        acc += c[static_cast<std::size_t>(m)] * pw / fact;
        pw *= x;
        fact *= static_cast<double>(m + 1);
      }
      return acc;
    };
    double lo = 0.0, hi = dt;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      const double s = eval(mid);
      if (std::abs(s - u) <= 1e-10) return mid;
      // survival decreases with time
      if (s > u)
        lo = mid;
      else
        hi = mid;
      if (hi - lo < 1e-300) break;
    }
    return 0.5 * (lo + hi);
  }
};

inline SurvivalTable build_survival_table(const Superoperator& no_tick,
                                          const Mat& rho_start, double t_span) {
  const Eigen::Index d = no_tick.dim;
  SurvivalTable tab;
  const double norm1 = no_tick.mat.cwiseAbs().colwise().sum().maxCoeff();
  // Keep ||N|| dt small so the local Taylor series converges far below 1e-10.
  const double max_dt = 0.125 / std::max(norm1, 1e-12);
  tab.n_steps = std::max<Eigen::Index>(
      64, static_cast<Eigen::Index>(std::ceil(t_span / max_dt)));
  tab.dt = t_span / static_cast<double>(tab.n_steps);

  const Mat step = matrix_exp(Mat(tab.dt * no_tick.mat));
  const Vec id_vec = vectorize(Mat(Mat::Identity(d, d)));

  Vec v = vectorize(rho_start);
  tab.survival.reserve(static_cast<std::size_t>(tab.n_steps + 1));
  tab.taylor.reserve(static_cast<std::size_t>(tab.n_steps + 1));
  tab.states.reserve(static_cast<std::size_t>(tab.n_steps + 1));
  double prev = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i <= tab.n_steps; ++i) {
    if (i > 0) v = step * v;
    const double s = std::real(id_vec.dot(v));
    if (s > prev + 1e-10)
      throw numeric_error("sample_trajectories: survival not monotone");
    prev = s;
    std::array<double, SurvivalTable::taylor_order + 1> c{};
    Vec der = v;
    for (int m = 0; m <= SurvivalTable::taylor_order; ++m) {
      c[static_cast<std::size_t>(m)] = std::real(id_vec.dot(der));
      if (m < SurvivalTable::taylor_order) der = no_tick.mat * der;
    }
    tab.survival.push_back(s);
    tab.taylor.push_back(c);
    tab.states.push_back(v);
  }
  return tab;
}

// rho at t_i + x from the stored grid state via the same Taylor expansion.
inline Mat state_at(const SurvivalTable& tab, const Superoperator& no_tick,
                    Eigen::Index i, double x) {
  Vec acc = tab.states[static_cast<std::size_t>(i)];
  Vec der = acc;
  double pw = 1.0, fact = 1.0;
  Vec total = Vec::Zero(acc.size());
  for (int m = 0; m <= SurvivalTable::taylor_order; ++m) {
    total += der * (pw / fact);
    if (m < SurvivalTable::taylor_order) der = no_tick.mat * der;
    pw *= x;
    fact *= static_cast<double>(m + 1);
  }
  return devectorize(total, no_tick.dim);
}

struct ResetInfo {
  bool is_reset = false;
  Mat post_state;  // fixed normalized post-tick state
};

// Reset clock: every canonical Kraus operator of the tick map is rank one
// with a common output direction, so the post-tick state never depends on
// the pre-tick state.
inline ResetInfo detect_reset(const ClockSpec& spec) {
  ResetInfo info;
  const std::vector<Mat> kraus = canonicalize_jumps(spec.j_ops, spec.d);
  if (kraus.empty()) return info;
  Vec out_dir;
  for (const Mat& k : kraus) {
    Eigen::JacobiSVD<Mat> svd(k, Eigen::ComputeThinU);
    const auto& sv = svd.singularValues();
    if (sv.size() > 1 && sv(1) > 1e-10 * sv(0)) return info;
    Vec u = svd.matrixU().col(0);
    if (out_dir.size() == 0)
      out_dir = u;
    else if (std::abs(std::abs(cxd(out_dir.adjoint() * u)) - 1.0) > 1e-10)
      return info;
  }
  info.is_reset = true;
  info.post_state = out_dir * out_dir.adjoint();
  return info;
}

}  // namespace detail

inline std::vector<TickRecord> sample_trajectories(const ClockSpec& spec,
                                                   double t_max,
                                                   std::int64_t n_traj,
                                                   std::uint64_t seed,
                                                   int threads = 1) {
  spec.validate();
  if (t_max <= 0) throw validation_error("sample_trajectories: t_max > 0");
  if (n_traj < 1) throw validation_error("sample_trajectories: n_traj >= 1");

  GeneratorBundle gen = build_generators(spec, false);
  const detail::ResetInfo reset = detail::detect_reset(spec);
  const bool bounded_ticks = spec.mode == RegisterMode::CutOff;

  // Survival table from the initial state; reset clocks reuse it for every
  // inter-tick segment.
  const detail::SurvivalTable tab0 =
      detail::build_survival_table(gen.no_tick, spec.rho_c0.mat, t_max);
  std::optional<detail::SurvivalTable> tab_reset;
  if (reset.is_reset &&
      (reset.post_state - spec.rho_c0.mat).cwiseAbs().maxCoeff() > 1e-12)
    tab_reset = detail::build_survival_table(gen.no_tick, reset.post_state, t_max);

  auto draw_tick = [&](const detail::SurvivalTable& tab, double u,
                       double budget) -> std::optional<double> {
    // Find the grid cell where survival crosses u, then refine.
    if (tab.survival.back() >= u) return std::nullopt;  // no tick in span
    auto it = std::upper_bound(tab.survival.begin(), tab.survival.end(), u,
                               [](double a, double b) { return a > b; });
    Eigen::Index cell = static_cast<Eigen::Index>(it - tab.survival.begin()) - 1;
    cell = std::clamp<Eigen::Index>(cell, 0, tab.n_steps - 1);
    const double t =
        tab.dt * static_cast<double>(cell) + tab.refine(cell, u);
    if (t > budget) return std::nullopt;
    return t;
  };

  auto run_one = [&](std::int64_t id) {
    detail::SplitMix64 rng(detail::substream_seed(seed, static_cast<std::uint64_t>(id)));
    TickRecord rec;
    rec.trajectory_id = id;
    double t_acc = 0.0;
    Mat rho = spec.rho_c0.mat;
    bool first_segment = true;
    // Non-reset clocks rebuild the survival table per segment; reset clocks
    // never enter that branch.
    std::optional<detail::SurvivalTable> local_tab;

    while (true) {
      if (bounded_ticks &&
          static_cast<Eigen::Index>(rec.tick_times.size()) >= spec.n_ticks) {
        rec.truncated = true;  // register full
        break;
      }
      if (t_max - t_acc < 1e-12) {
        rec.truncated = true;
        break;
      }
      const detail::SurvivalTable* tab;
      if (first_segment) {
        tab = &tab0;
      } else if (reset.is_reset) {
        tab = tab_reset ? &*tab_reset : &tab0;
      } else {
        local_tab = detail::build_survival_table(gen.no_tick, rho,
                                                 t_max - t_acc);
        tab = &*local_tab;
      }

      const double u = rng.uniform();
      const auto dt_tick = draw_tick(*tab, u, t_max - t_acc);
      if (!dt_tick) {
        rec.truncated = true;  // ran out of coordinate time
        break;
      }
      t_acc += *dt_tick;
      rec.tick_times.push_back(t_acc);

      if (reset.is_reset) {
        rho = reset.post_state;
      } else {
        const Eigen::Index cell = static_cast<Eigen::Index>(*dt_tick / tab->dt);
        const Eigen::Index c = std::clamp<Eigen::Index>(cell, 0, tab->n_steps - 1);
        Mat rho_tilde = detail::state_at(*tab, gen.no_tick, c,
                                         *dt_tick - tab->dt * static_cast<double>(c));
        // Attribute the tick to one J_j with probability prop. to its rate.
        std::vector<double> w(spec.j_ops.size());
        double wsum = 0.0;
        for (std::size_t j = 0; j < spec.j_ops.size(); ++j) {
          w[j] = std::max(
              0.0,
              (spec.j_ops[j] * rho_tilde * spec.j_ops[j].adjoint()).trace().real());
          wsum += w[j];
        }
        std::size_t pick = 0;
        if (spec.j_ops.size() > 1 && wsum > 0) {
          double target = rng.uniform() * wsum, acc = 0.0;
          for (std::size_t j = 0; j < w.size(); ++j) {
            acc += w[j];
            if (target <= acc) {
              pick = j;
              break;
            }
          }
        }
        Mat post = spec.j_ops[pick] * rho_tilde * spec.j_ops[pick].adjoint();
        const double tr = post.trace().real();
        if (tr <= 0)
          throw numeric_error("sample_trajectories: zero-trace post-tick state");
        rho = symmetrize(post / tr);
      }
      first_segment = false;
    }
    return rec;
  };

  std::vector<TickRecord> out(static_cast<std::size_t>(n_traj));
  const int nthreads = std::max(1, threads);
  if (nthreads == 1) {
    for (std::int64_t i = 0; i < n_traj; ++i)
      out[static_cast<std::size_t>(i)] = run_one(i);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < nthreads; ++w)
      pool.emplace_back([&, w] {
        for (std::int64_t i = w; i < n_traj; i += nthreads)
          out[static_cast<std::size_t>(i)] = run_one(i);
      });
    for (auto& th : pool) th.join();
  }

  std::int64_t with_tick = 0;
  for (const auto& r : out)
    if (!r.tick_times.empty()) ++with_tick;
  if (with_tick * 100 < n_traj)
    std::cerr << "sample_trajectories: warning: fewer than 1% of trajectories "
                 "ticked before t_max\n";
  return out;
}

// ---------------------------------------------------------------------------
// Empirical accuracy estimator
// ---------------------------------------------------------------------------

struct EmpiricalAccuracy {
  AccuracySummary summary;
  double se_mean = 0.0;
  double se_variance = 0.0;
  double se_r = 0.0;
  std::int64_t n_used = 0;
  std::int64_t n_excluded = 0;  // records truncated before the k-th tick
};

inline EmpiricalAccuracy empirical_accuracy(const std::vector<TickRecord>& records,
                                            Eigen::Index k) {
  if (k < 1) throw validation_error("empirical_accuracy: k must be >= 1");
  std::vector<double> times;
  std::int64_t excluded = 0;
  for (const auto& r : records) {
    if (static_cast<Eigen::Index>(r.tick_times.size()) >= k)
      times.push_back(r.tick_times[static_cast<std::size_t>(k - 1)]);
    else
      ++excluded;
  }
  if (times.size() < 2)
    throw insufficient_data_error(
        "empirical_accuracy: fewer than 2 records contain tick " +
        std::to_string(k));

  const double n = static_cast<double>(times.size());
  double mean = 0.0;
  for (double t : times) mean += t;
  mean /= n;
  double var = 0.0;
  for (double t : times) var += (t - mean) * (t - mean);
  var /= (n - 1.0);
  if (var <= 0)
    throw error("empirical_accuracy: degenerate distribution (variance 0)");

  EmpiricalAccuracy out;
  out.summary = {k, mean, var, mean * mean / var,
                 static_cast<double>(times.size()) /
                     static_cast<double>(records.size())};
  out.n_used = static_cast<std::int64_t>(times.size());
  out.n_excluded = excluded;
  out.se_mean = std::sqrt(var / n);
  out.se_variance = var * std::sqrt(2.0 / (n - 1.0));
  // Delta method: R = m^2/v, var(R) ~ (2m/v)^2 var(m) + (m^2/v^2)^2 var(v).
  const double dm = 2.0 * mean / var;
  const double dv = mean * mean / (var * var);
  out.se_r = std::sqrt(dm * dm * (var / n) +
                       dv * dv * (2.0 * var * var / (n - 1.0)));
  return out;
}

// ---------------------------------------------------------------------------
// Alternate-ticks-game referee
// ---------------------------------------------------------------------------

struct GameResult {
  std::int64_t game_id = 0;
  // Ticks before the first alternation violation, first tick free to come
  // from either clock.  `consumed` additionally counts the violating tick.
  std::int64_t alternation_length = 0;
  std::int64_t consumed = 0;
  std::int64_t length_start_a = 0;  // convention: clock A must tick first
  std::int64_t length_start_b = 0;
  bool violation = false;
  bool draw = false;  // exactly equal tick times end the game as a draw
  char winner = '-';  // clock that did not cause the violation, or '-'
};

inline std::vector<GameResult> atg_referee(const std::vector<TickRecord>& a,
                                           const std::vector<TickRecord>& b) {
  if (a.size() != b.size())
    throw error("atg_referee: record lists must pair up");
  std::vector<GameResult> out;
  out.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].trajectory_id != b[i].trajectory_id)
      throw error("atg_referee: trajectory ids do not pair up");
    // Merge the two streams in time order, tagging the source.
    std::vector<std::pair<double, char>> merged;
    for (double t : a[i].tick_times) merged.emplace_back(t, 'a');
    for (double t : b[i].tick_times) merged.emplace_back(t, 'b');
    std::sort(merged.begin(), merged.end());

    GameResult g;
    g.game_id = a[i].trajectory_id;

    auto play = [&](char required_first) {
      char expect = required_first;
      std::int64_t len = 0;
      for (std::size_t m = 0; m < merged.size(); ++m) {
        if (m + 1 < merged.size() && merged[m].first == merged[m + 1].first)
          return len;  // simultaneous ticks: draw, game over here
        if (merged[m].second != expect) return len;
        ++len;
        expect = (expect == 'a') ? 'b' : 'a';
      }
      return len;
    };
    g.length_start_a = play('a');
    g.length_start_b = play('b');
    g.alternation_length = std::max(g.length_start_a, g.length_start_b);

    const auto n = static_cast<std::int64_t>(merged.size());
    if (g.alternation_length < n) {
      const auto& offender = merged[static_cast<std::size_t>(g.alternation_length)];
      const std::size_t pos = static_cast<std::size_t>(g.alternation_length);
      if (pos + 1 < merged.size() && merged[pos].first == merged[pos + 1].first) {
        g.draw = true;
        g.consumed = g.alternation_length;
      } else {
        g.violation = true;
        g.consumed = g.alternation_length + 1;
        g.winner = (offender.second == 'a') ? 'b' : 'a';
      }
    } else {
      g.consumed = n;  // streams exhausted without violation
    }
    out.push_back(g);
  }
  return out;
}

}  // namespace ticksim

#endif  // TICKSIM_TICKSTATS_HPP
