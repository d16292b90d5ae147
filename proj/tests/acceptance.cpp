// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Each criterion is self-contained and uses its own oracle.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "ticksim/ticksim.hpp"

using namespace ticksim;

namespace {

int failures = 0;

template <typename F>
void criterion(int id, const char* label, F body) {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = false;
  std::string note;
  try {
    ok = body();
  } catch (const std::exception& e) {
    note = std::string(" [exception: ") + e.what() + "]";
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  std::printf("%s criterion %2d: %s (%.2f s)%s\n", ok ? "[PASS]" : "[FAIL]",
              id, label, secs, note.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

double max_abs(const Mat& m) { return m.cwiseAbs().maxCoeff(); }

Mat rand_mat(Eigen::Index d, unsigned seed) {
  std::srand(seed);
  return Mat::Random(d, d);
}

ClockSpec random_spec(Eigen::Index d, Eigen::Index n_ticks, RegisterMode mode,
                      unsigned seed) {
  ClockSpec s;
  s.d = d;
  s.n_ticks = n_ticks;
  s.mode = mode;
  s.h = symmetrize(rand_mat(d, seed));
  s.l_ops = {rand_mat(d, seed + 1)};
  s.j_ops = {rand_mat(d, seed + 2)};
  Mat g = rand_mat(d, seed + 3);
  Mat rho = g * g.adjoint();
  s.rho_c0 = DensityMatrix(symmetrize(Mat(rho / rho.trace())));
  return s;
}

double erlang_density(int n, double t) {
  if (t <= 0) return n == 1 ? 1.0 : 0.0;
  double log_p = (n - 1) * std::log(t) - t;
  for (int i = 2; i < n; ++i) log_p -= std::log(static_cast<double>(i));
  return (n == 1) ? std::exp(-t) : std::exp(log_p);
}

double first_tick_r(Eigen::Index d) {
  const ClockSpec s = quasi_ideal_clock(d, {}, 1);
  const TimeGrid grid = TimeGrid::from_horizon(20.0 * static_cast<double>(d), 4000);
  return accuracy(delay_function(s, 1, grid)).r_value;
}

}  // namespace

int main() {
  criterion(1, "ladder clock accuracy R_k = k d (d = 10)", [] {
    const ClockSpec s = ladder_clock(10);
    for (int k = 1; k <= 3; ++k) {
      const TimeGrid grid = TimeGrid::from_horizon(20.0 * k * 10, 4000 * k);
      const AccuracySummary a = accuracy(delay_function(s, k, grid));
      if (std::abs(a.r_value - 10.0 * k) > 1e-3 * k) return false;
    }
    return true;
  });

  criterion(2, "ladder first-tick density matches Erlang(d, 1)", [] {
    for (Eigen::Index d : {1, 2, 5}) {
      const ClockSpec s = ladder_clock(d);
      const DelayFunction df =
          delay_function(s, 1, TimeGrid::from_horizon(30.0, 1500));
      for (std::size_t i = 0; i < df.density.size(); ++i) {
        const double t = df.grid.time(static_cast<Eigen::Index>(i));
        if (std::abs(df.density[i] - erlang_density(static_cast<int>(d), t)) >
            1e-8)
          return false;
      }
    }
    return true;
  });

  criterion(3, "quasi-ideal super-classical scaling of R_1", [] {
    const double r8 = first_tick_r(8), r16 = first_tick_r(16),
                 r32 = first_tick_r(32);
    return r16 / r8 > 2.0 && r32 / r16 > 2.0 && r16 > 16.0 && r32 > 32.0;
  });

  criterion(4, "thermodynamic no-tick generator has H_eff form", [] {
    detail::SplitMix64 rng(2024);
    ThermodynamicParams p;
    p.e_h = 0.5 + rng.uniform();
    p.e_c = 0.1 + 0.5 * rng.uniform();
    p.beta_h = 0.2 + 0.5 * rng.uniform();
    p.beta_c = 1.5 + rng.uniform();
    p.gamma_h = 0.5 + rng.uniform();
    p.gamma_c = 0.5 + rng.uniform();
    p.g = 0.2 + rng.uniform();
    p.gamma_emit = 0.5 + rng.uniform();
    p.d = 3;
    const ClockSpec s = thermodynamic_clock(p);
    GeneratorBundle g = build_generators(s, false);

    Mat pin = Mat::Zero(p.d, p.d);
    pin(p.d - 1, p.d - 1) = 1.0;
    const Mat proj_top =
        kron(kron(Mat(Mat::Identity(2, 2)), Mat(Mat::Identity(2, 2))), pin);
    const Mat h_eff = s.h - cxd(0.0, 0.5) * p.gamma_emit * proj_top;
    Superoperator expect = Superoperator(
        s.d, Mat(-cxd(0.0, 1.0) *
                 (kron(Mat(Mat::Identity(s.d, s.d)), h_eff) -
                  kron(Mat(h_eff.adjoint().transpose()),
                       Mat(Mat::Identity(s.d, s.d))))));
    for (const Mat& l : s.l_ops) {
      expect = expect + sandwich_superop(l, Mat(l.adjoint()));
      expect = expect + anticommutator_superop(Mat(l.adjoint() * l));
    }
    return max_abs(g.no_tick.mat - expect.mat) <= 1e-12;
  });

  criterion(5, "measured-register equivalence, no Zeno distortion", [] {
    const ClockSpec s = random_spec(2, 2, RegisterMode::CutOff, 501);
    if (!check_measured_equivalence(s, s.rho_c0, 0, {0.2, 0.3, 0.5}, 1e-10)
             .passed)
      return false;
    for (int n : {2, 4, 8}) {
      std::vector<double> times(static_cast<std::size_t>(n), 1.0 / n);
      const auto rep = check_measured_equivalence(s, s.rho_c0, 0, times, 1e-10);
      if (!rep.passed || rep.max_deviation > 1e-10) return false;
    }
    return true;
  });

  criterion(6, "axiom suite passes on 10 random clock specs", [] {
    for (unsigned i = 0; i < 10; ++i) {
      const Eigen::Index d = 2 + i % 2;
      const Eigen::Index nt = 1 + i % 3;
      const auto mode = i % 2 ? RegisterMode::CutOff : RegisterMode::Periodic;
      const ClockSpec s = random_spec(d, nt, mode, 601 + i * 17);
      if (!check_condition1(s, 0.5, 4).passed) return false;
      if (!check_condition3(s).passed) return false;
      if (!check_condition4(s, 2).passed) return false;
      if (!check_classical_register(s, 0.5, 1e-12, 3).passed) return false;
      if (mode == RegisterMode::Periodic) {
        if (!check_k_independence(s, 0.5, 3).passed) return false;
      } else {
        if (!check_condition5(s, {0.5, 2.0}, 1e-12, 3).passed) return false;
      }
      if (!self_timing_check(s, 0.7, 1.3).passed) return false;
      for (double t : {0.1, 1.0})
        if (!check_cptp(build_generators(s).full, t, 1e-9, 1e-10).passed)
          return false;
    }
    return true;
  });

  criterion(7, "Euler composition converges at first order", [] {
    const ClockSpec s = random_spec(2, 1, RegisterMode::Periodic, 701);
    GeneratorBundle gen = build_generators(s);
    const Mat exact = channel_at(gen, s, 1.0, 0, s.rho_c0).mat;
    const Mat joint0 = kron(s.rho_c0.mat, Mat(basis_state(2, 0).mat));
    auto euler_error = [&](int n) {
      const Superoperator step = euler_step(s, 1.0 / n);
      Vec v = vectorize(joint0);
      for (int i = 0; i < n; ++i) v = step.mat * v;
      return max_abs(devectorize(v, 4) - exact);
    };
    const double e64 = euler_error(64), e128 = euler_error(128),
                 e256 = euler_error(256);
    return e64 / e128 > 1.5 && e64 / e128 < 2.5 && e128 / e256 > 1.5 &&
           e128 / e256 < 2.5;
  });

  criterion(8, "Monte Carlo matches R_1 and is reproducible", [] {
    const ClockSpec s = ladder_clock(5);
    const double t_max = 40.0;
    const std::int64_t n = 100000;
    const std::uint64_t seed = 90210;
    const auto recs1 = sample_trajectories(s, t_max, n, seed, 1);
    const auto recs2 = sample_trajectories(s, t_max, n, seed, 1);
    const auto recs8 = sample_trajectories(s, t_max, n, seed, 8);
    for (std::size_t i = 0; i < recs1.size(); ++i) {
      if (recs1[i].tick_times != recs2[i].tick_times) return false;
      if (recs1[i].tick_times != recs8[i].tick_times) return false;
    }
    const EmpiricalAccuracy ea = empirical_accuracy(recs1, 1);
    return std::abs(ea.summary.r_value - 5.0) <= 3.0 * ea.se_r;
  });

  criterion(9, "redundant tick operators reduce to a canonical set", [] {
    std::vector<Mat> base = {rand_mat(2, 902), rand_mat(2, 903),
                             rand_mat(2, 904)};
    std::vector<Mat> many;
    std::srand(905);
    for (int i = 0; i < 9; ++i) {
      Mat combo = Mat::Zero(2, 2);
      for (int b = 0; b < 3; ++b)
        combo += cxd(std::rand() / double(RAND_MAX) - 0.5,
                     std::rand() / double(RAND_MAX) - 0.5) *
                 base[static_cast<std::size_t>(b)];
      many.push_back(std::move(combo));
    }
    const auto reduced = canonicalize_jumps(many, 2);
    if (reduced.size() > 3) return false;
    Superoperator t_in = Superoperator::zero(2), t_out = Superoperator::zero(2);
    for (const Mat& m : many) t_in = t_in + sandwich_superop(m, Mat(m.adjoint()));
    for (const Mat& m : reduced)
      t_out = t_out + sandwich_superop(m, Mat(m.adjoint()));
    return max_abs(t_in.mat - t_out.mat) < 1e-10;
  });

  criterion(10, "reset clock obeys R_k = k R_1 (quasi-ideal, d = 8)", [] {
    const ClockSpec s = quasi_ideal_clock(8);
    double r1 = 0.0;
    for (int k = 1; k <= 3; ++k) {
      const TimeGrid grid = TimeGrid::from_horizon(160.0 * k, 4000 * k);
      const AccuracySummary a = accuracy(delay_function(s, k, grid));
      if (k == 1) {
        r1 = a.r_value;
        continue;
      }
      if (std::abs(a.r_value - k * r1) / (k * r1) >= 0.005) return false;
    }
    return true;
  });

  if (failures > 0) {
    std::printf("%d criterion(s) failed\n", failures);
    return 1;
  }
  std::printf("all criteria passed\n");
  return 0;
}
