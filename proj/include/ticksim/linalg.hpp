#ifndef TICKSIM_LINALG_HPP
#define TICKSIM_LINALG_HPP

#include <complex>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ticksim {

using cxd = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

// ---------------------------------------------------------------------------
// Error taxonomy.  The CLI maps these onto distinct exit codes.
// ---------------------------------------------------------------------------

struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct validation_error : error {
  using error::error;
};
struct shape_error : error {
  using error::error;
};
struct numeric_error : error {
  using error::error;
};
// Grid/horizon problems: result would be silently wrong at the requested
// resolution.  Carries a suggestion for a workable parameter.
struct accuracy_error : error {
  double suggested = 0.0;
  accuracy_error(const std::string& msg, double sugg)
      : error(msg), suggested(sugg) {}
};
struct resource_error : error {
  using error::error;
};
struct insufficient_data_error : error {
  using error::error;
};

// ---------------------------------------------------------------------------
// Basic helpers
// ---------------------------------------------------------------------------

inline Eigen::Index max_matrix_dim() {
  static const Eigen::Index cap = [] {
    if (const char* env = std::getenv("TICKSIM_MAX_DIM")) {
      long v = std::atol(env);
      if (v > 0) return static_cast<Eigen::Index>(v);
    }
    return static_cast<Eigen::Index>(4096);
  }();
  return cap;
}

inline bool all_finite(const Mat& m) {
  return m.allFinite();
}

inline double herm_deviation(const Mat& m) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

inline void require_hermitian(const Mat& m, double tol, const char* what) {
  if (m.rows() != m.cols())
    throw shape_error(std::string(what) + ": not square");
  if (herm_deviation(m) > tol)
    throw validation_error(std::string(what) + ": not Hermitian within " +
                           std::to_string(tol));
}

inline Mat symmetrize(const Mat& m) {
  return 0.5 * (m + m.adjoint());
}

// Column-stacking vectorization, fixed project-wide: vec(AXB) = (B^T (x) A) vec(X).
inline Vec vectorize(const Mat& m) {
  return Eigen::Map<const Vec>(m.data(), m.size());
}

inline Mat devectorize(const Vec& v, Eigen::Index n) {
  if (v.size() != n * n) throw shape_error("devectorize: size mismatch");
  return Eigen::Map<const Mat>(v.data(), n, n);
}

// ---------------------------------------------------------------------------
// Kronecker product and partial trace
// ---------------------------------------------------------------------------

inline Mat kron(const Mat& a, const Mat& b) {
  const Eigen::Index rows = a.rows() * b.rows();
  const Eigen::Index cols = a.cols() * b.cols();
  if (rows > max_matrix_dim() || cols > max_matrix_dim())
    throw shape_error("kron: result exceeds maximum matrix dimension " +
                      std::to_string(max_matrix_dim()));
  Mat out(rows, cols);
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// Reduced matrix over the kept subsystems; `dims` lists subsystem dimensions
// in tensor order, `keep` is the sorted set of subsystem indices to retain.
inline Mat partial_trace(const Mat& m, const std::vector<Eigen::Index>& dims,
                         const std::vector<std::size_t>& keep) {
  Eigen::Index total = 1;
  for (auto d : dims) {
    if (d <= 0) throw shape_error("partial_trace: nonpositive dimension");
    total *= d;
  }
  if (m.rows() != total || m.cols() != total)
    throw shape_error("partial_trace: dims product does not match matrix");

  const std::size_t ns = dims.size();
  std::vector<bool> kept(ns, false);
  for (auto k : keep) {
    if (k >= ns) throw shape_error("partial_trace: keep index out of range");
    kept[k] = true;
  }

  Eigen::Index keep_dim = 1, trace_dim = 1;
  for (std::size_t s = 0; s < ns; ++s)
    (kept[s] ? keep_dim : trace_dim) *= dims[s];

  // Strides of each subsystem in the flattened row index (row-major over
  // tensor order: subsystem 0 is the slowest).
  std::vector<Eigen::Index> stride(ns);
  {
    Eigen::Index acc = 1;
    for (std::size_t s = ns; s-- > 0;) {
      stride[s] = acc;
      acc *= dims[s];
    }
  }

  auto compose = [&](Eigen::Index keep_idx, Eigen::Index trace_idx) {
    Eigen::Index full = 0;
    Eigen::Index kq = keep_idx, tq = trace_idx;
    for (std::size_t s = ns; s-- > 0;) {
      Eigen::Index digit;
      if (kept[s]) {
        digit = kq % dims[s];
        kq /= dims[s];
      } else {
        digit = tq % dims[s];
        tq /= dims[s];
      }
      full += digit * stride[s];
    }
    return full;
  };
  // compose() consumes digits from the least significant end, so the kept
  // subsystems keep their relative tensor order in the output.

  Mat out = Mat::Zero(keep_dim, keep_dim);
  for (Eigen::Index i = 0; i < keep_dim; ++i)
    for (Eigen::Index j = 0; j < keep_dim; ++j) {
      cxd acc = 0.0;
      for (Eigen::Index t = 0; t < trace_dim; ++t)
        acc += m(compose(i, t), compose(j, t));
      out(i, j) = acc;
    }
  return out;
}

// ---------------------------------------------------------------------------
// Matrix exponential: scaling and squaring with a truncated Taylor series.
// The argument is scaled until its 1-norm is at most 0.5, the series is
// summed until the term norm drops below tol relative to the partial sum,
// then the result is squared back up.
// ---------------------------------------------------------------------------

inline Mat matrix_exp(const Mat& m, double tol = 1e-12) {
  if (m.rows() != m.cols()) throw shape_error("matrix_exp: not square");
  if (!all_finite(m)) throw numeric_error("matrix_exp: non-finite entries");
  const Eigen::Index n = m.rows();

  const double norm1 = m.cwiseAbs().colwise().sum().maxCoeff();
  int s = 0;
  double scaled = norm1;
  while (scaled > 0.5) {
    scaled *= 0.5;
    ++s;
  }
  Mat a = m / std::pow(2.0, s);

  Mat result = Mat::Identity(n, n);
  Mat term = Mat::Identity(n, n);
  double ref = 1.0;
  for (int k = 1; k <= 64; ++k) {
    term = (term * a) / static_cast<double>(k);
    result += term;
    const double tn = term.cwiseAbs().colwise().sum().maxCoeff();
    ref = std::max(ref, result.cwiseAbs().colwise().sum().maxCoeff());
    if (tn <= tol * ref) break;
  }
  for (int i = 0; i < s; ++i) result = result * result;
  return result;
}

// ---------------------------------------------------------------------------
// Superoperator: matrix of a linear map on n x n operators under the
// column-stacking convention.
// ---------------------------------------------------------------------------

struct Superoperator {
  Eigen::Index dim = 0;  // operator space is dim x dim
  Mat mat;               // dim^2 x dim^2

  Superoperator() = default;
  Superoperator(Eigen::Index d, Mat m) : dim(d), mat(std::move(m)) {
    if (mat.rows() != d * d || mat.cols() != d * d)
      throw shape_error("Superoperator: matrix must be dim^2 x dim^2");
  }

  static Superoperator zero(Eigen::Index d) {
    return Superoperator(d, Mat::Zero(d * d, d * d));
  }
  static Superoperator identity(Eigen::Index d) {
    return Superoperator(d, Mat::Identity(d * d, d * d));
  }

  Mat apply(const Mat& rho) const {
    if (rho.rows() != dim || rho.cols() != dim)
      throw shape_error("Superoperator::apply: dimension mismatch");
    return devectorize(mat * vectorize(rho), dim);
  }

  Superoperator operator+(const Superoperator& o) const {
    return Superoperator(dim, mat + o.mat);
  }
  Superoperator operator-(const Superoperator& o) const {
    return Superoperator(dim, mat - o.mat);
  }
  Superoperator operator*(const Superoperator& o) const {
    return Superoperator(dim, mat * o.mat);
  }
  Superoperator scaled(double c) const { return Superoperator(dim, c * mat); }
};

// Superoperator of rho -> A rho B.
inline Superoperator sandwich_superop(const Mat& a, const Mat& b) {
  return Superoperator(a.rows(), kron(b.transpose(), a));
}

// rho -> -i[h, rho] + sum_j (D_j rho D_j^dag - 1/2 {D_j^dag D_j, rho}).
inline Superoperator lindblad_superop(const Mat& h,
                                      const std::vector<Mat>& dissipators) {
  require_hermitian(h, 1e-12, "lindblad_superop: h");
  const Eigen::Index n = h.rows();
  const Mat id = Mat::Identity(n, n);
  const cxd I(0.0, 1.0);

  Mat sup = -I * (kron(id, h) - kron(h.transpose(), id));
  for (const Mat& d : dissipators) {
    if (d.rows() != n || d.cols() != n)
      throw shape_error("lindblad_superop: dissipator dimension mismatch");
    const Mat dd = d.adjoint() * d;
    sup += kron(d.conjugate(), d);
    sup -= 0.5 * (kron(id, dd) + kron(dd.transpose(), id));
  }
  return Superoperator(n, std::move(sup));
}

// Anticommutator part only: rho -> -1/2 {A, rho} with A Hermitian PSD.
inline Superoperator anticommutator_superop(const Mat& a) {
  const Eigen::Index n = a.rows();
  const Mat id = Mat::Identity(n, n);
  return Superoperator(n, Mat(-0.5 * (kron(id, a) + kron(a.transpose(), id))));
}

// ---------------------------------------------------------------------------
// Choi matrix and positivity diagnostics
// ---------------------------------------------------------------------------

// C = sum_{ij} |i><j| (x) S(|i><j|), size n^2 x n^2.
inline Mat choi_matrix(const Superoperator& s) {
  const Eigen::Index n = s.dim;
  Mat choi = Mat::Zero(n * n, n * n);
  Mat basis = Mat::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      basis(i, j) = 1.0;
      choi.block(i * n, j * n, n, n) = s.apply(basis);
      basis(i, j) = 0.0;
    }
  return choi;
}

struct PsdResult {
  bool psd = false;
  double min_eigenvalue = 0.0;
};

inline PsdResult is_psd(const Mat& m, double tol) {
  require_hermitian(m, 1e-10, "is_psd: input");
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(m),
                                        Eigen::EigenvaluesOnly);
  const double min_eig = es.eigenvalues().minCoeff();
  return {min_eig >= -tol, min_eig};
}

inline double min_eigenvalue(const Mat& hermitian) {
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(hermitian),
                                        Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

inline double trace_norm(const Mat& m) {
  return m.jacobiSvd().singularValues().sum();
}

// ---------------------------------------------------------------------------
// DensityMatrix: validated quantum state
// ---------------------------------------------------------------------------

struct DensityMatrix {
  Mat mat;

  static constexpr double tol_herm = 1e-12;
  static constexpr double tol_trace = 1e-12;
  static constexpr double tol_psd = 1e-10;

  DensityMatrix() = default;

  // subnormalized relaxes the trace invariant to [0, 1 + tol].
  explicit DensityMatrix(Mat m, bool subnormalized = false) : mat(std::move(m)) {
    if (mat.rows() != mat.cols())
      throw shape_error("DensityMatrix: not square");
    if (!all_finite(mat))
      throw numeric_error("DensityMatrix: non-finite entries");
    if (herm_deviation(mat) > tol_herm)
      throw validation_error("DensityMatrix: not Hermitian");
    const double tr = mat.trace().real();
    if (subnormalized) {
      if (tr < -tol_trace || tr > 1.0 + tol_trace)
        throw validation_error("DensityMatrix: trace outside [0,1]");
    } else {
      if (std::abs(tr - 1.0) > tol_trace)
        throw validation_error("DensityMatrix: trace != 1");
    }
    if (mat.rows() > 0 && min_eigenvalue(mat) < -tol_psd)
      throw validation_error("DensityMatrix: negative eigenvalue");
  }

  Eigen::Index dim() const { return mat.rows(); }
  double trace() const { return mat.trace().real(); }
};

inline DensityMatrix pure_state(const Vec& psi) {
  Vec n = psi / psi.norm();
  return DensityMatrix(Mat(n * n.adjoint()));
}

inline DensityMatrix basis_state(Eigen::Index dim, Eigen::Index k) {
  if (k < 0 || k >= dim) throw shape_error("basis_state: index out of range");
  Mat m = Mat::Zero(dim, dim);
  m(k, k) = 1.0;
  return DensityMatrix(std::move(m));
}

}  // namespace ticksim

#endif  // TICKSIM_LINALG_HPP
