#ifndef TICKSIM_CLOCK_HPP
#define TICKSIM_CLOCK_HPP

#include <cmath>
#include <iostream>
#include <numbers>
#include <optional>
#include <vector>

#include "ticksim/linalg.hpp"

namespace ticksim {

enum class RegisterMode { Periodic, CutOff };

// theta(k): tick suppression factor of the register boundary.  1 everywhere
// for the periodic register, 0 at the full cut-off register.
inline double theta(Eigen::Index k, Eigen::Index n_ticks, RegisterMode mode) {
  if (mode == RegisterMode::CutOff && k == n_ticks) return 0.0;
  return 1.0;
}

// ---------------------------------------------------------------------------
// ClockSpec: the tuple (d, N_T, mode, H, {L_j}, {J_j}, rho_C0, k0) defining
// one ticking clock.  Rates are dimensionless (coordinate time rescaled).
// ---------------------------------------------------------------------------

struct ClockSpec {
  Eigen::Index d = 0;        // clockwork dimension
  Eigen::Index n_ticks = 0;  // N_T; register has N_T + 1 states
  RegisterMode mode = RegisterMode::CutOff;
  Mat h;                     // d x d Hermitian
  std::vector<Mat> l_ops;    // non-tick Lindblad operators
  std::vector<Mat> j_ops;    // tick operators
  DensityMatrix rho_c0;      // initial clockwork state
  Eigen::Index k0 = 0;       // initial register index
  // Escape hatch for Zeno-style checks on deliberately trivial clocks; every
  // factory leaves this false.
  bool allow_never_ticking = false;

  Eigen::Index register_dim() const { return n_ticks + 1; }
  Eigen::Index joint_dim() const { return d * (n_ticks + 1); }

  void validate() const {
    if (d < 1) throw validation_error("ClockSpec: d must be >= 1");
    if (n_ticks < 1) throw validation_error("ClockSpec: n_ticks must be >= 1");
    if (k0 < 0 || k0 > n_ticks)
      throw validation_error("ClockSpec: k0 out of register range");
    require_hermitian(h, 1e-12, "ClockSpec: h");
    if (h.rows() != d) throw shape_error("ClockSpec: h dimension mismatch");
    for (const Mat& l : l_ops)
      if (l.rows() != d || l.cols() != d)
        throw shape_error("ClockSpec: L operator dimension mismatch");
    double j_norm = 0.0;
    for (const Mat& j : j_ops) {
      if (j.rows() != d || j.cols() != d)
        throw shape_error("ClockSpec: J operator dimension mismatch");
      j_norm += j.norm();
    }
    if (!allow_never_ticking && (j_ops.empty() || j_norm == 0.0))
      throw validation_error("ClockSpec: no nonzero tick operator; the device never ticks");
    if (rho_c0.dim() != d)
      throw shape_error("ClockSpec: rho_c0 dimension mismatch");
  }
};

// O_R^(l) = sum_{n=0}^{N_T-1} |n+1><n| + l |0><N_T|, l = 1 periodic, 0 cut-off.
inline Mat build_register_shift(Eigen::Index n_ticks, RegisterMode mode) {
  if (n_ticks < 1) throw validation_error("build_register_shift: n_ticks >= 1");
  const Eigen::Index nr = n_ticks + 1;
  Mat o = Mat::Zero(nr, nr);
  for (Eigen::Index n = 0; n < n_ticks; ++n) o(n + 1, n) = 1.0;
  if (mode == RegisterMode::Periodic) o(0, n_ticks) = 1.0;
  return o;
}

// ---------------------------------------------------------------------------
// GeneratorBundle: all generators of the explicit representation.
//   full      on d(N_T+1): -i[H (x) I, .] + dissipators {L (x) I, J (x) O}
//   clockwork on d:        same with register traced out (= no_tick + tick)
//   no_tick   on d:        conditional no-tick generator (theta(0) = 1)
//   tick      on d:        rho -> sum_j J_j rho J_j^dag
//   h_eff                  H - (i/2) sum_j (L_j^dag L_j + J_j^dag J_j)
// ---------------------------------------------------------------------------

struct GeneratorBundle {
  Superoperator full;
  Superoperator clockwork;
  Superoperator no_tick;
  Superoperator tick;
  Mat h_eff;
};

// include_full = false skips the joint-space superoperator, whose size is
// (d(N_T+1))^2 squared; clockwork-level consumers do not need it.
inline GeneratorBundle build_generators(const ClockSpec& spec,
                                        bool include_full = true) {
  spec.validate();
  const Eigen::Index d = spec.d;

  Superoperator full;
  if (include_full) {
    const Mat id_reg = Mat::Identity(spec.register_dim(), spec.register_dim());
    const Mat o_reg = build_register_shift(spec.n_ticks, spec.mode);
    std::vector<Mat> joint_diss;
    for (const Mat& l : spec.l_ops) joint_diss.push_back(kron(l, id_reg));
    for (const Mat& j : spec.j_ops) joint_diss.push_back(kron(j, o_reg));
    full = lindblad_superop(kron(spec.h, id_reg), joint_diss);
  }

  std::vector<Mat> all_diss = spec.l_ops;
  all_diss.insert(all_diss.end(), spec.j_ops.begin(), spec.j_ops.end());
  Superoperator clockwork = lindblad_superop(spec.h, all_diss);

  Superoperator tick = Superoperator::zero(d);
  Mat jj_sum = Mat::Zero(d, d);
  for (const Mat& j : spec.j_ops) {
    tick = tick + sandwich_superop(j, Mat(j.adjoint()));
    jj_sum += j.adjoint() * j;
  }

  Superoperator no_tick = clockwork - tick;

  Mat ll_sum = Mat::Zero(d, d);
  for (const Mat& l : spec.l_ops) ll_sum += l.adjoint() * l;
  Mat h_eff = spec.h - cxd(0.0, 0.5) * (ll_sum + jj_sum);

  return {std::move(full), std::move(clockwork), std::move(no_tick),
          std::move(tick), std::move(h_eff)};
}

// ---------------------------------------------------------------------------
// Minimal Kraus set for the tick map: eigendecompose the Choi matrix of
// rho -> sum_j J_j rho J_j^dag and keep eigenvalues above cutoff.  The
// returned operators reproduce the same map.
// ---------------------------------------------------------------------------

inline std::vector<Mat> canonicalize_jumps(const std::vector<Mat>& j_ops,
                                           Eigen::Index d,
                                           double cutoff = 1e-12) {
  Superoperator tick = Superoperator::zero(d);
  for (const Mat& j : j_ops) {
    if (j.rows() != d || j.cols() != d)
      throw shape_error("canonicalize_jumps: operator dimension mismatch");
    tick = tick + sandwich_superop(j, Mat(j.adjoint()));
  }
  const Mat choi = symmetrize(choi_matrix(tick));
  Eigen::SelfAdjointEigenSolver<Mat> es(choi);

  std::vector<Mat> out;
  for (Eigen::Index m = 0; m < es.eigenvalues().size(); ++m) {
    const double lam = es.eigenvalues()(m);
    if (lam <= cutoff) continue;
    const Vec v = es.eigenvectors().col(m);
    // Choi vector |w> = sum_i |i> (x) K|i>, so w[i*d + a] = K(a, i).
    Mat k(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index a = 0; a < d; ++a) k(a, i) = v(i * d + a);
    out.push_back(std::sqrt(lam) * k);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Example clocks
// ---------------------------------------------------------------------------

// Ladder clock: population hops up a d-level ladder at unit rate, the top
// level emits back to the bottom and produces the tick.  H = 0; classical.
inline ClockSpec ladder_clock(Eigen::Index d, Eigen::Index n_ticks = 3,
                              RegisterMode mode = RegisterMode::CutOff) {
  if (d < 1) throw validation_error("ladder_clock: d must be >= 1");
  ClockSpec spec;
  spec.d = d;
  spec.n_ticks = n_ticks;
  spec.mode = mode;
  spec.h = Mat::Zero(d, d);
  for (Eigen::Index j = 0; j + 1 < d; ++j) {
    Mat l = Mat::Zero(d, d);
    l(j + 1, j) = 1.0;
    spec.l_ops.push_back(std::move(l));
  }
  Mat j_top = Mat::Zero(d, d);
  j_top(0, d - 1) = 1.0;
  spec.j_ops.push_back(std::move(j_top));
  spec.rho_c0 = basis_state(d, 0);
  return spec;
}

struct ThermodynamicParams {
  double e_h = 1.0;      // hot qubit gap
  double e_c = 0.2;      // cold qubit gap
  double beta_h = 0.5;   // hot inverse temperature
  double beta_c = 2.0;   // cold inverse temperature
  double gamma_h = 1.0;  // hot qubit rate
  double gamma_c = 1.0;  // cold qubit rate
  double g = 0.5;        // three-body interaction strength
  double gamma_emit = 1.0;  // ladder-top emission rate (Gamma)
  Eigen::Index d = 3;    // ladder dimension
  // Optional override for the interaction Hamiltonian on the full 4d space.
  std::optional<Mat> h_int_override;
};

// Thermodynamic clock: two thermal qubits drive population up a d-level
// ladder; emission from the top rung back to the bottom is the tick.
// Clockwork space = qubit_h (x) qubit_c (x) ladder(d), dimension 4d.
inline ClockSpec thermodynamic_clock(const ThermodynamicParams& p,
                                     Eigen::Index n_ticks = 3,
                                     RegisterMode mode = RegisterMode::CutOff) {
  if (p.d < 2) throw validation_error("thermodynamic_clock: d must be >= 2");
  if (p.gamma_h <= 0 || p.gamma_c <= 0 || p.gamma_emit <= 0 || p.g < 0)
    throw validation_error("thermodynamic_clock: rates must be positive");
  if (p.beta_h >= p.beta_c)
    std::cerr << "thermodynamic_clock: warning: beta_h >= beta_c, the hot "
                 "bath is not hotter than the cold one\n";

  const Eigen::Index dw = p.d;
  const Mat id2 = Mat::Identity(2, 2);
  const Mat idw = Mat::Identity(dw, dw);

  Mat lower = Mat::Zero(2, 2);  // |0><1|
  lower(0, 1) = 1.0;
  const Mat raise = lower.adjoint();

  auto embed_h = [&](const Mat& a) { return kron(kron(a, id2), idw); };
  auto embed_c = [&](const Mat& a) { return kron(kron(id2, a), idw); };
  auto embed_w = [&](const Mat& a) { return kron(kron(id2, id2), a); };

  ClockSpec spec;
  spec.d = 4 * dw;
  spec.n_ticks = n_ticks;
  spec.mode = mode;

  spec.l_ops = {
      std::sqrt(p.gamma_h) * embed_h(lower),
      std::sqrt(p.gamma_h * std::exp(-p.beta_h * p.e_h)) * embed_h(raise),
      std::sqrt(p.gamma_c) * embed_c(lower),
      std::sqrt(p.gamma_c * std::exp(-p.beta_c * p.e_c)) * embed_c(raise),
  };

  Mat j_emit = Mat::Zero(dw, dw);  // |0><d-1|_w
  j_emit(0, dw - 1) = 1.0;
  spec.j_ops = {std::sqrt(p.gamma_emit) * embed_w(j_emit)};

  // H0: local gaps, ladder spacing E_w = E_h - E_c (resonance condition).
  const double e_w = p.e_h - p.e_c;
  Mat n_w = Mat::Zero(dw, dw);
  for (Eigen::Index n = 0; n < dw; ++n) n_w(n, n) = static_cast<double>(n);
  Mat h0 = p.e_h * embed_h(Mat(raise * lower)) +
           p.e_c * embed_c(Mat(raise * lower)) + e_w * embed_w(n_w);

  Mat h_int;
  if (p.h_int_override) {
    h_int = *p.h_int_override;
    require_hermitian(h_int, 1e-12, "thermodynamic_clock: h_int override");
    if (h_int.rows() != spec.d)
      throw shape_error("thermodynamic_clock: h_int override dimension");
  } else {
    // Resonant exchange: hot qubit relaxes, cold qubit excites, ladder climbs.
    Mat a_w = Mat::Zero(dw, dw);  // sum_n |n><n+1|_w
    for (Eigen::Index n = 0; n + 1 < dw; ++n) a_w(n, n + 1) = 1.0;
    Mat term = p.g * kron(kron(lower, raise), Mat(a_w.adjoint()));
    h_int = term + term.adjoint();
  }
  spec.h = h0 + h_int;

  // Initial state: qubits thermal at their bath temperatures, ladder ground.
  auto thermal_qubit = [](double beta, double e) {
    const double w = std::exp(-beta * e);
    Mat m = Mat::Zero(2, 2);
    m(0, 0) = 1.0 / (1.0 + w);
    m(1, 1) = w / (1.0 + w);
    return m;
  };
  Mat ground_w = Mat::Zero(dw, dw);
  ground_w(0, 0) = 1.0;
  spec.rho_c0 = DensityMatrix(
      kron(kron(thermal_qubit(p.beta_h, p.e_h), thermal_qubit(p.beta_c, p.e_c)),
           ground_w));
  return spec;
}

struct QuasiIdealParams {
  double sigma = -1.0;    // Gaussian width of the clock state (default sqrt d)
  double n0 = -1.0;       // mean energy index (default d/2)
  double j0 = 0.0;        // initial peak position in the time basis
  double jv = -1.0;       // potential peak position (default d/2)
  double v0 = -1.0;       // peak tick rate (default d/(2 pi))
  double sigma_v = -1.0;  // potential width (default sqrt(d)/2)
  bool reset = true;      // reset variant J_j = sqrt(2 V_j)|psi><t_j|
};

// Quasi-ideal clock: a complex Gaussian wavepacket rotating in the time
// basis ticks when it overlaps a Gaussian rate profile V_j.
inline ClockSpec quasi_ideal_clock(Eigen::Index d, QuasiIdealParams p = {},
                                   Eigen::Index n_ticks = 3,
                                   RegisterMode mode = RegisterMode::CutOff) {
  if (d < 2) throw validation_error("quasi_ideal_clock: d must be >= 2");
  const double pi = std::numbers::pi;
  const double dd = static_cast<double>(d);
  if (p.sigma < 0) p.sigma = std::sqrt(dd);
  if (p.n0 < 0) p.n0 = dd / 2.0;
  if (p.jv < 0) p.jv = dd / 2.0;
  if (p.v0 < 0) p.v0 = dd / (2.0 * pi);
  if (p.sigma_v < 0) p.sigma_v = std::sqrt(dd) / 2.0;
  if (p.sigma <= 0 || p.sigma >= dd)
    throw validation_error("quasi_ideal_clock: need 0 < sigma < d");
  if (p.sigma_v <= 0)
    throw validation_error("quasi_ideal_clock: sigma_v must be positive");
  if (p.v0 == 0)
    throw validation_error("quasi_ideal_clock: V0 = 0 never ticks");

  // H = sum_n omega n |E_n><E_n|, omega = 2 pi / d, |E_n> the Fourier basis.
  const double omega = 2.0 * pi / dd;
  Mat fourier(d, d);
  for (Eigen::Index n = 0; n < d; ++n)
    for (Eigen::Index j = 0; j < d; ++j)
      fourier(j, n) = std::exp(cxd(0.0, 2.0 * pi * n * j / dd)) / std::sqrt(dd);
  Mat h_diag = Mat::Zero(d, d);
  for (Eigen::Index n = 0; n < d; ++n) h_diag(n, n) = omega * n;
  Mat h = fourier * h_diag * fourier.adjoint();
  h = symmetrize(h);

  // Gaussian clock state in the time basis, wrapped over the nearest period.
  auto wrap = [&](double x) {
    double r = std::fmod(x, dd);
    if (r > dd / 2.0) r -= dd;
    if (r < -dd / 2.0) r += dd;
    return r;
  };
  Vec psi(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const double dj = wrap(static_cast<double>(j) - p.j0);
    psi(j) = std::exp(-pi * dj * dj / (p.sigma * p.sigma)) *
             std::exp(cxd(0.0, 2.0 * pi * p.n0 * dj / dd));
  }
  psi /= psi.norm();

  std::vector<double> v(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const double dj = wrap(static_cast<double>(j) - p.jv);
    v[j] = p.v0 * std::exp(-pi * dj * dj / (p.sigma_v * p.sigma_v));
  }

  ClockSpec spec;
  spec.d = d;
  spec.n_ticks = n_ticks;
  spec.mode = mode;
  spec.h = std::move(h);
  if (p.reset) {
    for (Eigen::Index j = 0; j < d; ++j) {
      Mat op = std::sqrt(2.0 * v[j]) * (psi * Vec::Unit(d, j).adjoint());
      spec.j_ops.push_back(std::move(op));
    }
  } else {
    // Non-reset variant: single J = sum_j sqrt(2 V_j) |j><t_j|.  First-tick
    // statistics coincide with the reset variant.
    Mat op = Mat::Zero(d, d);
    for (Eigen::Index j = 0; j < d; ++j) op(j, j) = std::sqrt(2.0 * v[j]);
    spec.j_ops.push_back(std::move(op));
  }
  spec.rho_c0 = pure_state(psi);
  return spec;
}

}  // namespace ticksim

#endif  // TICKSIM_CLOCK_HPP
