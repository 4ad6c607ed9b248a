#pragma once

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "gkdr/kernels.hpp"
#include "gkdr/linalg.hpp"
#include "gkdr/types.hpp"

namespace gkdr {

enum class Method { Gkdr, GkdrI, GkdrV };

inline const char* method_name(Method m) {
  switch (m) {
    case Method::Gkdr: return "gkdr";
    case Method::GkdrI: return "gkdr-i";
    case Method::GkdrV: return "gkdr-v";
  }
  return "gkdr";
}

inline Method parse_method(const std::string& name) {
  if (name == "gkdr") return Method::Gkdr;
  if (name == "gkdr-i" || name == "gkdr_i") return Method::GkdrI;
  if (name == "gkdr-v" || name == "gkdr_v") return Method::GkdrV;
  throw std::invalid_argument("unknown method: " + name);
}

/// m x m symmetric PSD candidate matrix (per-point or averaged).
using CandidateMatrix = Matrix;

struct LowRankOptions {
  Scalar tol = 1e-6;
  Index max_rank = 0;  // 0 means n
};

struct GkdrConfig {
  Index d = 1;
  KernelSpec spec;
  std::optional<LowRankOptions> low_rank;
  std::vector<Index> i_schedule;  // empty: geometric 5-stage default
  Index v_partition = 0;          // 0: per-point when n*m^2 <= 1e7, else blocks of 100
};

/// Estimated projection onto the EDR subspace: orthonormal columns of B span
/// the subspace, eigenvalues give the (clamped, descending) spectrum behind it.
struct Projection {
  Matrix B;
  Vector eigenvalues;
  Method method = Method::Gkdr;
  KernelSpec spec;
};

namespace detail {

inline void check_fit_inputs(const Matrix& X, const Matrix& Y, const GkdrConfig& config) {
  const Index n = X.rows(), m = X.cols();
  require(n >= 2, "fit: need at least two samples");
  require(Y.rows() == n, "fit: X and Y row counts differ");
  require(config.d >= 1 && config.d < m, "fit: require 1 <= d < m");
  require(X.allFinite() && Y.allFinite(), "fit: non-finite values in data");
  config.spec.validate();
  bool degenerate = true;
  for (Index i = 1; i < n && degenerate; ++i)
    if ((X.row(i) - X.row(0)).norm() > 0) degenerate = false;
  require(!degenerate, "fit: degenerate data, all X rows identical");
}

/// A = (G_X + c I)^{-1} G_Y (G_X + c I)^{-1}, symmetrized.
inline Matrix sandwich_operator(const Matrix& Gx, const Matrix& Gy, Scalar c) {
  Matrix H = Gx;
  H.diagonal().array() += c;
  Eigen::LLT<Matrix> llt(H);
  if (llt.info() != Eigen::Success)
    throw NumericalError("gkdr: Cholesky of regularized Gram matrix failed");
  Matrix A = llt.solve(llt.solve(Gy).transpose());
  return 0.5 * (A + A.transpose());
}

/// Gradient stack at sample point i, reusing the Gram column for the
/// exponential factors: row j = (1/sigma^2) (X_j - X_i) G(j, i).
inline Matrix gradient_stack_from_gram(const Matrix& X, const Matrix& Gx, Scalar sigma, Index i) {
  const Index n = X.rows();
  const Scalar invs = 1.0 / (sigma * sigma);
  Matrix D(n, X.cols());
  for (Index j = 0; j < n; ++j)
    D.row(j) = (invs * Gx(j, i)) * (X.row(j) - X.row(i));
  return D;
}

inline Projection top_eigvec_projection(const CandidateMatrix& M, Index d, Method method,
                                        const KernelSpec& spec) {
  EigenResult eig = sym_eig(M);
  Projection out;
  out.B = eig.eigenvectors.leftCols(d);
  out.eigenvalues = eig.eigenvalues.head(d).cwiseMax(0.0);
  out.method = method;
  out.spec = spec;
  return out;
}

}  // namespace detail

/// Per-point candidate matrix
///   M(x) = grad_k(x)^T (G_X + n eps I)^{-1} G_Y (G_X + n eps I)^{-1} grad_k(x),
/// computed in the PSD-preserving form S^T G_Y S with S the regularized solve
/// of the gradient stack.
inline CandidateMatrix candidate_matrix_at(const Matrix& X, const GramMatrix& Gx,
                                           const GramMatrix& Gy, const KernelSpec& spec,
                                           const Vector& x) {
  const Index n = X.rows();
  spec.validate();
  require(Gx.values.rows() == n && Gx.values.cols() == n, "candidate_matrix_at: G_X shape");
  require(Gy.values.rows() == n && Gy.values.cols() == n, "candidate_matrix_at: G_Y shape");
  const Matrix D = kernel_gradient_stack(X, x, spec.sigma_x);
  const Matrix S = regularized_solve(Gx.values, n * spec.epsilon, D);
  Matrix M = S.transpose() * Gy.values * S;
  return 0.5 * (M + M.transpose());
}

/// Averaged candidate matrix M~ = (1/n) sum_i M(X_i). Uses the Hadamard-stack
/// identity: with T_a(j,i) = (1/sigma^2)(X_j^a - X_i^a) G_X(j,i),
/// M~_{ab} = (1/n) sum(T_a .* (A T_b)) for the sandwich operator A.
inline CandidateMatrix average_candidate(const Matrix& X, const GramMatrix& Gx,
                                         const GramMatrix& Gy, const KernelSpec& spec) {
  const Index n = X.rows(), m = X.cols();
  spec.validate();
  require(Gx.values.rows() == n && Gx.values.cols() == n, "average_candidate: G_X shape");
  require(Gy.values.rows() == n && Gy.values.cols() == n, "average_candidate: G_Y shape");

  const Matrix A = detail::sandwich_operator(Gx.values, Gy.values, n * spec.epsilon);
  const Scalar invs = 1.0 / (spec.sigma_x * spec.sigma_x);

  std::vector<Matrix> T(static_cast<std::size_t>(m));
  for (Index a = 0; a < m; ++a) {
    T[static_cast<std::size_t>(a)] =
        invs * (X.col(a).replicate(1, n) - X.col(a).transpose().replicate(n, 1))
                   .cwiseProduct(Gx.values);
  }

  Matrix M = Matrix::Zero(m, m);
  for (Index b = 0; b < m; ++b) {
    const Matrix U = A * T[static_cast<std::size_t>(b)];
    for (Index a = 0; a <= b; ++a) {
      const Scalar v = T[static_cast<std::size_t>(a)].cwiseProduct(U).sum() / Scalar(n);
      M(a, b) = v;
      M(b, a) = v;
    }
  }
  return M;
}

/// Low-rank path for M~ from incomplete Cholesky factors G_X ~ R R^T,
/// G_Y ~ H H^T. Works through Gamma_i = grad_k(X_i)^T F with
/// F = (R R^T + n eps I)^{-1} H; no n x n matrix is ever formed, working
/// storage is O(n m r).
inline CandidateMatrix average_candidate_lowrank(const Matrix& X, const LowRankFactor& Rfac,
                                                 const LowRankFactor& Hfac,
                                                 const KernelSpec& spec) {
  const Index n = X.rows(), m = X.cols();
  spec.validate();
  require(Rfac.R.rows() == n, "average_candidate_lowrank: R factor row count");
  require(Hfac.R.rows() == n, "average_candidate_lowrank: H factor row count");

  const Index rx = Rfac.R.cols(), ry = Hfac.R.cols();
  if (rx == 0 || ry == 0) return Matrix::Zero(m, m);

  const Matrix& R = Rfac.R;
  const Scalar invs = 1.0 / (spec.sigma_x * spec.sigma_x);

  const Matrix F = woodbury_apply(Rfac, n * spec.epsilon, Hfac.R);  // n x ry
  const Matrix W = R * (R.transpose() * F);                         // n x ry

  // P_flat row s = vec over (a, t) of (1/sigma^2) X^T diag(R(:,s)) F
  Matrix P_flat(rx, m * ry);
  for (Index s = 0; s < rx; ++s) {
    const Matrix Ps = invs * X.transpose() * (R.col(s).asDiagonal() * F);  // m x ry
    for (Index a = 0; a < m; ++a) P_flat.row(s).segment(a * ry, ry) = Ps.row(a);
  }
  const Matrix G_flat = R * P_flat;  // n x (m*ry)

  Matrix M = Matrix::Zero(m, m);
  Matrix Gi(m, ry);
  for (Index i = 0; i < n; ++i) {
    for (Index a = 0; a < m; ++a)
      Gi.row(a) = G_flat.row(i).segment(a * ry, ry) - (invs * X(i, a)) * W.row(i);
    M.noalias() += Gi * Gi.transpose();
  }
  M /= Scalar(n);
  return 0.5 * (M + M.transpose());
}

/// Geometric dimension schedule from m down to d (5 stages by default),
/// rounded, clamped to [d, m-1], duplicates dropped.
inline std::vector<Index> default_i_schedule(Index m, Index d, Index stages = 5) {
  std::vector<Index> sched;
  for (Index k = 1; k <= stages; ++k) {
    const double t = static_cast<double>(k) / static_cast<double>(stages);
    double v = std::pow(static_cast<double>(m), 1.0 - t) * std::pow(static_cast<double>(d), t);
    Index dim = std::min<Index>(std::max<Index>(static_cast<Index>(std::lround(v)), d), m - 1);
    if (sched.empty() || dim < sched.back()) sched.push_back(dim);
  }
  if (sched.empty() || sched.back() != d) sched.push_back(d);
  return sched;
}

inline Projection fit_gkdr(const Matrix& X, const Matrix& Y, const GkdrConfig& config) {
  detail::check_fit_inputs(X, Y, config);
  const Index n = X.rows();
  const GramMatrix Gx = gram(X, config.spec.sigma_x, GramKind::Input);
  const GramMatrix Gy = gram(Y, config.spec.sigma_y, GramKind::Output);

  CandidateMatrix M;
  if (config.low_rank) {
    const LowRankOptions& lr = *config.low_rank;
    const Index cap = lr.max_rank > 0 ? std::min(lr.max_rank, n) : n;
    const LowRankFactor Rf = incomplete_cholesky(Gx.values, lr.tol, cap);
    const LowRankFactor Hf = incomplete_cholesky(Gy.values, lr.tol, cap);
    M = average_candidate_lowrank(X, Rf, Hf, config.spec);
  } else {
    M = average_candidate(X, Gx, Gy, config.spec);
  }
  return detail::top_eigvec_projection(M, config.d, Method::Gkdr, config.spec);
}

/// Iterative variant: fit at a decreasing dimension schedule, projecting the
/// data between stages and re-running the median heuristic with the stage-1
/// bandwidth multiplier; the composed projection is re-orthonormalized.
inline Projection fit_gkdr_i(const Matrix& X, const Matrix& Y, const GkdrConfig& config) {
  detail::check_fit_inputs(X, Y, config);
  const Index m = X.cols();

  std::vector<Index> schedule =
      config.i_schedule.empty() ? default_i_schedule(m, config.d) : config.i_schedule;
  require(!schedule.empty() && schedule.front() < m && schedule.back() == config.d,
          "fit_gkdr_i: schedule must start below m and end at d");
  for (std::size_t s = 0; s < schedule.size(); ++s) {
    require(schedule[s] >= 1, "fit_gkdr_i: schedule entries must be positive");
    require(s == 0 || schedule[s] < schedule[s - 1], "fit_gkdr_i: schedule must be strictly decreasing");
  }

  const Scalar multiplier = config.spec.sigma_x / median_heuristic(X);

  Matrix Z = X;
  Matrix B = Matrix::Identity(m, m);
  Projection stage;
  for (std::size_t s = 0; s < schedule.size(); ++s) {
    GkdrConfig stage_config = config;
    stage_config.d = schedule[s];
    stage_config.i_schedule.clear();
    stage_config.spec.sigma_x = (s == 0) ? config.spec.sigma_x : multiplier * median_heuristic(Z);
    stage = fit_gkdr(Z, Y, stage_config);
    B = B * stage.B;
    Z = Z * stage.B;
  }

  // product of orthonormal-column factors is orthonormal; QR just polishes
  // round-off, with the R-diagonal kept positive for determinism
  Eigen::HouseholderQR<Matrix> qr(B);
  Matrix Q = qr.householderQ() * Matrix::Identity(m, config.d);
  const Matrix Rdiag = qr.matrixQR().topLeftCorner(config.d, config.d);
  for (Index c = 0; c < config.d; ++c)
    if (Rdiag(c, c) < 0) Q.col(c) = -Q.col(c);

  Projection out;
  out.B = std::move(Q);
  out.eigenvalues = stage.eigenvalues;
  out.method = Method::GkdrI;
  out.spec = config.spec;
  return out;
}

/// Projector-averaging variant: per consecutive index block, sum the
/// per-point candidate matrices, take its top eigenvectors (capped at the
/// block's numerical rank), and average the resulting projectors.
inline Projection fit_gkdr_v(const Matrix& X, const Matrix& Y, const GkdrConfig& config) {
  detail::check_fit_inputs(X, Y, config);
  const Index n = X.rows(), m = X.cols();
  require(config.v_partition >= 0, "fit_gkdr_v: v_partition must be >= 1");

  Index block = config.v_partition;
  if (block == 0) block = (static_cast<double>(n) * m * m <= 1e7) ? 1 : 100;

  const GramMatrix Gx = gram(X, config.spec.sigma_x, GramKind::Input);
  const GramMatrix Gy = gram(Y, config.spec.sigma_y, GramKind::Output);
  const Matrix A = detail::sandwich_operator(Gx.values, Gy.values, n * config.spec.epsilon);

  Matrix P = Matrix::Zero(m, m);
  Index blocks = 0;
  for (Index lo = 0; lo < n; lo += block) {
    const Index hi = std::min(lo + block, n);
    Matrix Mb = Matrix::Zero(m, m);
    for (Index i = lo; i < hi; ++i) {
      const Matrix D = detail::gradient_stack_from_gram(X, Gx.values, config.spec.sigma_x, i);
      Mb.noalias() += D.transpose() * (A * D);
    }
    Mb = 0.5 * (Mb + Mb.transpose());
    const EigenResult eig = sym_eig(Mb);
    const Scalar lam = std::max(eig.eigenvalues(0), Scalar(0));
    Index numerical_rank = 0;
    if (lam > 0)
      for (Index c = 0; c < m; ++c)
        if (eig.eigenvalues(c) > 1e-8 * lam) ++numerical_rank;
    const Index dp = std::min(config.d, numerical_rank);
    if (dp > 0) {
      const Matrix Bb = eig.eigenvectors.leftCols(dp);
      P.noalias() += Bb * Bb.transpose();
    }
    ++blocks;
  }
  P /= Scalar(blocks);
  P = 0.5 * (P + P.transpose());

  Projection out = detail::top_eigvec_projection(P, config.d, Method::GkdrV, config.spec);
  out.eigenvalues = out.eigenvalues.cwiseMin(1.0);  // averaged projectors have spectrum in [0,1]
  return out;
}

inline Projection fit(const Matrix& X, const Matrix& Y, const GkdrConfig& config, Method method) {
  switch (method) {
    case Method::Gkdr: return fit_gkdr(X, Y, config);
    case Method::GkdrI: return fit_gkdr_i(X, Y, config);
    case Method::GkdrV: return fit_gkdr_v(X, Y, config);
  }
  throw std::invalid_argument("fit: unknown method");
}

inline Matrix project(const Projection& proj, const Matrix& X) {
  require(X.cols() == proj.B.rows(), "project: dimension mismatch");
  return X * proj.B;
}

}  // namespace gkdr
