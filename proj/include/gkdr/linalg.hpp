#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "gkdr/types.hpp"

namespace gkdr {

/// Eigendecomposition of a symmetric matrix with eigenvalues sorted in
/// non-increasing order; column i of eigenvectors pairs with eigenvalue i.
struct EigenResult {
  Vector eigenvalues;
  Matrix eigenvectors;
};

/// Pivoted incomplete Cholesky factor: G ~ R R^T with trace residual
/// ||G - R R^T|| <= residual_bound.
struct LowRankFactor {
  Matrix R;
  std::vector<Index> pivots;
  Index rank = 0;
  Scalar residual_bound = 0.0;
};

/// Deterministic symmetric eigendecomposition. Sign convention: in each
/// eigenvector the entry of largest magnitude is positive, ties resolved by
/// lowest index, so identical inputs give identical outputs.
inline EigenResult sym_eig(const Matrix& A) {
  require(A.rows() == A.cols() && A.rows() >= 1, "sym_eig: square matrix required");
  require(A.allFinite(), "sym_eig: non-finite entries");
  const Scalar scale = A.norm();
  require((A - A.transpose()).norm() <= 1e-10 * std::max(scale, Scalar(1)),
          "sym_eig: input not symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(0.5 * (A + A.transpose()));
  if (solver.info() != Eigen::Success) throw NumericalError("sym_eig: eigensolver failed");

  const Index m = A.rows();
  EigenResult out;
  out.eigenvalues = solver.eigenvalues().reverse();
  out.eigenvectors = solver.eigenvectors().rowwise().reverse();
  for (Index c = 0; c < m; ++c) {
    Index arg = 0;
    Scalar best = -1.0;
    for (Index r = 0; r < m; ++r) {
      const Scalar mag = std::abs(out.eigenvectors(r, c));
      if (mag > best) {
        best = mag;
        arg = r;
      }
    }
    if (out.eigenvectors(arg, c) < 0) out.eigenvectors.col(c) = -out.eigenvectors.col(c);
  }
  return out;
}

/// Solves (G + c I) S = B for PSD G via Cholesky; G + cI is positive definite
/// for any c > 0.
inline Matrix regularized_solve(const Matrix& G, Scalar c, const Matrix& B) {
  require(G.rows() == G.cols(), "regularized_solve: square matrix required");
  require(c > 0 && std::isfinite(c), "regularized_solve: c must be positive");
  require(G.rows() == B.rows(), "regularized_solve: dimension mismatch");
  require(G.allFinite() && B.allFinite(), "regularized_solve: non-finite entries");
  Matrix H = G;
  H.diagonal().array() += c;
  Eigen::LLT<Matrix> llt(H);
  if (llt.info() != Eigen::Success)
    throw NumericalError("regularized_solve: Cholesky failed (ill-conditioned input)");
  return llt.solve(B);
}

/// Greedy pivoted incomplete Cholesky of a PSD matrix. Stops once the trace
/// of the residual drops to tol * trace(G) or the rank cap is hit.
inline LowRankFactor incomplete_cholesky(const Matrix& G, Scalar tol, Index max_rank) {
  const Index n = G.rows();
  require(G.cols() == n && n >= 1, "incomplete_cholesky: square matrix required");
  require(tol >= 0, "incomplete_cholesky: tol must be non-negative");
  require(max_rank >= 1 && max_rank <= n, "incomplete_cholesky: max_rank out of range");
  require(G.allFinite(), "incomplete_cholesky: non-finite entries");

  Vector d = G.diagonal();
  const Scalar trace = d.sum();
  const Scalar neg_tol = 1e-10 * std::max(trace, Scalar(1));
  const Scalar target = tol * trace;

  Matrix R = Matrix::Zero(n, max_rank);
  std::vector<Index> pivots;
  std::vector<char> used(static_cast<std::size_t>(n), 0);
  Scalar residual = trace;

  Index k = 0;
  while (k < max_rank && residual > target) {
    Index p = -1;
    Scalar best = -std::numeric_limits<Scalar>::infinity();
    for (Index i = 0; i < n; ++i) {
      if (!used[static_cast<std::size_t>(i)] && d(i) > best) {
        best = d(i);
        p = i;
      }
    }
    if (p < 0) break;
    if (best < -neg_tol) throw NumericalError("incomplete_cholesky: negative pivot, input not PSD");
    if (best <= 0) break;

    const Scalar rkk = std::sqrt(best);
    R(p, k) = rkk;
    for (Index i = 0; i < n; ++i) {
      if (used[static_cast<std::size_t>(i)] || i == p) continue;
      Scalar v = G(i, p);
      for (Index j = 0; j < k; ++j) v -= R(i, j) * R(p, j);
      R(i, k) = v / rkk;
      d(i) -= R(i, k) * R(i, k);
    }
    used[static_cast<std::size_t>(p)] = 1;
    d(p) = 0.0;
    pivots.push_back(p);
    ++k;

    residual = 0.0;
    for (Index i = 0; i < n; ++i)
      if (!used[static_cast<std::size_t>(i)]) residual += std::max(d(i), Scalar(0));
  }

  LowRankFactor out;
  out.R = R.leftCols(k);
  out.pivots = std::move(pivots);
  out.rank = k;
  out.residual_bound = std::max(residual, Scalar(0));
  return out;
}

/// (R R^T + c I)^{-1} B via the Woodbury identity,
/// (1/c) (B - R (c I_r + R^T R)^{-1} R^T B); only the r x r system is solved.
inline Matrix woodbury_apply(const LowRankFactor& factor, Scalar c, const Matrix& B) {
  require(c > 0 && std::isfinite(c), "woodbury_apply: c must be positive");
  require(factor.R.rows() == B.rows(), "woodbury_apply: dimension mismatch");
  const Index r = factor.R.cols();
  if (r == 0) return B / c;
  Matrix inner = factor.R.transpose() * factor.R;
  inner.diagonal().array() += c;
  Eigen::LLT<Matrix> llt(inner);
  if (llt.info() != Eigen::Success)
    throw NumericalError("woodbury_apply: inner system ill-conditioned (factor tol too loose)");
  return (B - factor.R * llt.solve(factor.R.transpose() * B)) / c;
}

}  // namespace gkdr
