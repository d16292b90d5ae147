#ifndef TICKSIM_EVOLVE_HPP
#define TICKSIM_EVOLVE_HPP

#include <cmath>
#include <iostream>
#include <vector>

#include "ticksim/clock.hpp"
#include "ticksim/linalg.hpp"

namespace ticksim {

struct TimeGrid {
  double t0 = 0.0;
  double dt = 0.0;
  Eigen::Index steps = 0;

  TimeGrid() = default;
  TimeGrid(double t0_, double dt_, Eigen::Index steps_)
      : t0(t0_), dt(dt_), steps(steps_) {
    if (t0 < 0 || dt <= 0 || steps < 1 || !std::isfinite(t0 + steps * dt))
      throw validation_error("TimeGrid: need t0 >= 0, dt > 0, steps >= 1");
  }
  static TimeGrid from_horizon(double t_max, Eigen::Index steps) {
    return TimeGrid(0.0, t_max / static_cast<double>(steps), steps);
  }

  double time(Eigen::Index i) const { return t0 + dt * static_cast<double>(i); }
  Eigen::Index points() const { return steps + 1; }
  double t_max() const { return time(steps); }
};

// ---------------------------------------------------------------------------
// Deterministic propagation
// ---------------------------------------------------------------------------

inline DensityMatrix propagate(const Superoperator& gen,
                               const DensityMatrix& rho, double t,
                               double tol = 1e-12) {
  if (t < 0) throw error("propagate: t must be nonnegative");
  if (rho.dim() != gen.dim) throw shape_error("propagate: dimension mismatch");
  const Mat prop = matrix_exp(Mat(t * gen.mat), tol);
  Mat out = devectorize(prop * vectorize(rho.mat), gen.dim);
  return DensityMatrix(symmetrize(out), /*subnormalized=*/true);
}

// M^{t,k}: inject the clockwork state at register index k and propagate the
// joint system.  The overload taking a prebuilt bundle avoids regenerating
// superoperators in inner loops.
inline DensityMatrix channel_at(const GeneratorBundle& gen,
                                const ClockSpec& spec, double t,
                                Eigen::Index k, const DensityMatrix& rho_c,
                                double tol = 1e-12) {
  if (k < 0 || k > spec.n_ticks)
    throw error("channel_at: register index out of range");
  if (rho_c.dim() != spec.d)
    throw shape_error("channel_at: clockwork dimension mismatch");
  Mat reg = Mat::Zero(spec.register_dim(), spec.register_dim());
  reg(k, k) = 1.0;
  DensityMatrix joint(kron(rho_c.mat, reg));
  return propagate(gen.full, joint, t, tol);
}

inline DensityMatrix channel_at(const ClockSpec& spec, double t,
                                Eigen::Index k, const DensityMatrix& rho_c,
                                double tol = 1e-12) {
  return channel_at(build_generators(spec), spec, t, k, rho_c, tol);
}

// First-order Euler step: rho -> rho (x) |k><k| + dt C1k(rho) (x) |k><k|
// + dt C2k(rho) (x) |f(k)><f(k)| as a superoperator from the clockwork to
// the joint space, then embedded on the joint space for composition.
inline Superoperator euler_channel(const ClockSpec& spec, double dt,
                                   Eigen::Index k) {
  spec.validate();
  if (dt <= 0) throw validation_error("euler_channel: dt must be positive");
  if (k < 0 || k > spec.n_ticks)
    throw error("euler_channel: register index out of range");

  GeneratorBundle gen = build_generators(spec);
  const double gen_norm = gen.full.mat.cwiseAbs().colwise().sum().maxCoeff();
  if (dt * gen_norm > 0.1)
    std::cerr << "euler_channel: warning: dt * ||generator|| = "
              << dt * gen_norm << " > 0.1, first-order error may dominate\n";

  const Eigen::Index nr = spec.register_dim();
  const double th = theta(k, spec.n_ticks, spec.mode);
  const Eigen::Index fk = (k + 1) % nr;

  // theta enters C1 through the J anticommutator and scales C2 entirely.
  Mat jj_sum = Mat::Zero(spec.d, spec.d);
  for (const Mat& j : spec.j_ops) jj_sum += j.adjoint() * j;
  Superoperator c1k =
      gen.no_tick + anticommutator_superop(jj_sum).scaled(1.0 - th).scaled(-1.0);
  Superoperator c2k = gen.tick.scaled(th);

  Mat proj_k = Mat::Zero(nr, nr);
  proj_k(k, k) = 1.0;
  Mat proj_fk = Mat::Zero(nr, nr);
  proj_fk(fk, fk) = 1.0;

  // Embed a clockwork map followed by (x) |n><n| as a joint-space map acting
  // on the k-th register block.
  auto lift = [&](const Superoperator& s, const Mat& out_proj) {
    const Eigen::Index jd = spec.joint_dim();
    Mat m = Mat::Zero(jd * jd, jd * jd);
    // vec index on joint space: column-major over (clockwork, register)
    // with joint basis |c> (x) |r> at index c * nr + r.
    for (Eigen::Index c_out = 0; c_out < spec.d; ++c_out)
      for (Eigen::Index c_in = 0; c_in < spec.d; ++c_in)
        for (Eigen::Index r_out = 0; r_out < nr; ++r_out)
          for (Eigen::Index r_in = 0; r_in < nr; ++r_in) {
            if (out_proj(r_out, r_out).real() == 0.0 || r_out != r_in) continue;
            for (Eigen::Index cc_out = 0; cc_out < spec.d; ++cc_out)
              for (Eigen::Index cc_in = 0; cc_in < spec.d; ++cc_in) {
                const cxd val =
                    s.mat(c_out + spec.d * c_in, cc_out + spec.d * cc_in);
                if (val == cxd(0.0)) continue;
                const Eigen::Index row =
                    (c_out * nr + r_out) + jd * (c_in * nr + r_in);
                const Eigen::Index col =
                    (cc_out * nr + k) + jd * (cc_in * nr + k);
                m(row, col) += val;
              }
          }
    return Superoperator(jd, std::move(m));
  };

  Superoperator step = lift(Superoperator::identity(spec.d), proj_k) +
                       lift(c1k, proj_k).scaled(dt) +
                       lift(c2k, proj_fk).scaled(dt);
  return step;
}

// Full first-order step acting on every register-diagonal block at once;
// composing N of these approximates the exact channel at t = N dt.
inline Superoperator euler_step(const ClockSpec& spec, double dt) {
  Superoperator step = euler_channel(spec, dt, 0);
  for (Eigen::Index k = 1; k <= spec.n_ticks; ++k)
    step = step + euler_channel(spec, dt, k);
  return step;
}

// ---------------------------------------------------------------------------
// Number-resolved cascade: blocks rho^(n)(t), n = 0..N_T, evolving under
// d rho^(n)/dt = C1(n) rho^(n) + C2 rho^(n-1) (cut-off: rho^(-1) = 0;
// periodic: block indices wrap).
// ---------------------------------------------------------------------------

struct CascadeState {
  std::vector<Mat> blocks;  // subnormalized clockwork states per tick count
  double time = 0.0;

  double total_trace() const {
    double tr = 0.0;
    for (const Mat& b : blocks) tr += b.trace().real();
    return tr;
  }
};

namespace detail {

// Block-structured cascade generator on n_blocks copies of the clockwork
// operator space.  theta_of(n) gates both the tick loss in block n and the
// gain into block n+1; wrap closes the chain for the periodic register.
inline Mat cascade_generator(const GeneratorBundle& gen, Eigen::Index d,
                             Eigen::Index n_blocks,
                             const std::vector<double>& theta_of, bool wrap) {
  const Eigen::Index bs = d * d;
  Mat jj_sum_super;
  {
    // theta = 0 removes the J anticommutator from C1 as well.
    Superoperator c1_theta0 = gen.no_tick;
    Mat jj = Mat::Zero(d, d);
    // Reconstruct sum_j J_j^dag J_j from the tick superoperator: applying the
    // adjoint map to the identity gives sum_j J_j^dag J_j.
    Superoperator tick_adj(d, Mat(gen.tick.mat.adjoint()));
    jj = tick_adj.apply(Mat::Identity(d, d));
    jj_sum_super = anticommutator_superop(symmetrize(jj)).mat;
  }

  Mat big = Mat::Zero(bs * n_blocks, bs * n_blocks);
  for (Eigen::Index n = 0; n < n_blocks; ++n) {
    const double th = theta_of[static_cast<std::size_t>(n)];
    Mat diag = gen.no_tick.mat + (1.0 - th) * (-1.0) * jj_sum_super;
    big.block(n * bs, n * bs, bs, bs) = diag;
    const Eigen::Index next = n + 1;
    if (next < n_blocks)
      big.block(next * bs, n * bs, bs, bs) = th * gen.tick.mat;
    else if (wrap)
      big.block(0, n * bs, bs, bs) = th * gen.tick.mat;
  }
  return big;
}

}  // namespace detail

inline std::vector<CascadeState> cascade(const ClockSpec& spec,
                                         const TimeGrid& grid) {
  spec.validate();
  GeneratorBundle gen = build_generators(spec, false);
  const Eigen::Index d = spec.d;
  const Eigen::Index nb = spec.register_dim();
  const Eigen::Index bs = d * d;

  std::vector<double> th(static_cast<std::size_t>(nb));
  for (Eigen::Index n = 0; n < nb; ++n)
    th[static_cast<std::size_t>(n)] = theta(n, spec.n_ticks, spec.mode);
  const bool wrap = spec.mode == RegisterMode::Periodic;
  const Mat big = detail::cascade_generator(gen, d, nb, th, wrap);
  const Mat step = matrix_exp(Mat(grid.dt * big));

  Vec state = Vec::Zero(bs * nb);
  state.segment(spec.k0 * bs, bs) = vectorize(spec.rho_c0.mat);
  if (grid.t0 > 0) {
    const Mat warm = matrix_exp(Mat(grid.t0 * big));
    state = warm * state;
  }

  std::vector<CascadeState> out;
  out.reserve(static_cast<std::size_t>(grid.points()));
  for (Eigen::Index i = 0; i <= grid.steps; ++i) {
    if (i > 0) state = step * state;
    CascadeState cs;
    cs.time = grid.time(i);
    double total = 0.0;
    for (Eigen::Index n = 0; n < nb; ++n) {
      Mat block = devectorize(state.segment(n * bs, bs), d);
      total += block.trace().real();
      cs.blocks.push_back(std::move(block));
    }
    if (std::abs(total - 1.0) > 1e-6)
      throw accuracy_error(
          "cascade: trace leakage " + std::to_string(std::abs(total - 1.0)) +
              " at t = " + std::to_string(cs.time) + "; reduce dt",
          grid.dt / 2.0);
    out.push_back(std::move(cs));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Self-timing (semigroup) check: exp((t1+t2) L) vs exp(t1 L) exp(t2 L).
// ---------------------------------------------------------------------------

struct SelfTimingResult {
  bool passed = false;
  double max_deviation = 0.0;
};

inline SelfTimingResult self_timing_check(const ClockSpec& spec, double t1,
                                          double t2, double tol = 1e-9) {
  if (t1 < 0 || t2 < 0)
    throw error("self_timing_check: times must be nonnegative");
  GeneratorBundle gen = build_generators(spec);
  const Mat lhs = matrix_exp(Mat((t1 + t2) * gen.full.mat));
  const Mat rhs =
      matrix_exp(Mat(t1 * gen.full.mat)) * matrix_exp(Mat(t2 * gen.full.mat));
  const double dev = (lhs - rhs).cwiseAbs().maxCoeff();
  return {dev <= tol, dev};
}

}  // namespace ticksim

#endif  // TICKSIM_EVOLVE_HPP
