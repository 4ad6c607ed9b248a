#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "gkdr/types.hpp"

namespace gkdr {

/// Gaussian kernel bandwidths and Tikhonov regularization for the two-Gram
/// estimator pipeline. epsilon enters the estimators as n*epsilon*I.
struct KernelSpec {
  Scalar sigma_x = 1.0;
  Scalar sigma_y = 1.0;
  Scalar epsilon = 1e-7;

  void validate() const {
    require(sigma_x > 0 && std::isfinite(sigma_x), "KernelSpec: sigma_x must be positive");
    require(sigma_y > 0 && std::isfinite(sigma_y), "KernelSpec: sigma_y must be positive");
    require(epsilon > 0 && std::isfinite(epsilon), "KernelSpec: epsilon must be positive");
  }
};

enum class GramKind { Input, Output };

/// Pairwise Gaussian kernel matrix; symmetric with unit diagonal by
/// construction, entries in (0, 1].
struct GramMatrix {
  Matrix values;
  GramKind source_kind = GramKind::Input;
};

/// Rows of the stack hold the kernel derivative d k(X_j, .) / dx at a query
/// point; row j is zero exactly when X_j coincides with the query.
using GradientStack = Matrix;

inline Scalar gaussian_kernel(const Vector& x, const Vector& y, Scalar sigma) {
  require(sigma > 0 && std::isfinite(sigma), "gaussian_kernel: sigma must be positive");
  require(x.size() == y.size(), "gaussian_kernel: dimension mismatch");
  return std::exp(-(x - y).squaredNorm() / (2.0 * sigma * sigma));
}

inline GramMatrix gram(const Matrix& X, Scalar sigma, GramKind kind = GramKind::Input) {
  require(X.rows() >= 1, "gram: empty input");
  require(sigma > 0 && std::isfinite(sigma), "gram: sigma must be positive");
  const Index n = X.rows();
  const Scalar inv = 1.0 / (2.0 * sigma * sigma);
  Matrix G(n, n);
  for (Index i = 0; i < n; ++i) {
    G(i, i) = 1.0;
    for (Index j = i + 1; j < n; ++j) {
      // squared distance as a sum of squares; cannot go negative
      const Scalar d2 = (X.row(i) - X.row(j)).squaredNorm();
      const Scalar v = std::exp(-d2 * inv);
      G(i, j) = v;
      G(j, i) = v;
    }
  }
  return GramMatrix{std::move(G), kind};
}

/// Row j holds (1/sigma^2) (X_j - x) exp(-||X_j - x||^2 / (2 sigma^2)), the
/// analytic gradient of k(X_j, .) at x.
inline GradientStack kernel_gradient_stack(const Matrix& X, const Vector& x, Scalar sigma) {
  require(sigma > 0 && std::isfinite(sigma), "kernel_gradient_stack: sigma must be positive");
  require(X.cols() == x.size(), "kernel_gradient_stack: dimension mismatch");
  const Index n = X.rows();
  const Scalar inv2 = 1.0 / (2.0 * sigma * sigma);
  const Scalar invs = 1.0 / (sigma * sigma);
  Matrix D(n, X.cols());
  for (Index j = 0; j < n; ++j) {
    const Scalar d2 = (X.row(j).transpose() - x).squaredNorm();
    D.row(j) = invs * std::exp(-d2 * inv2) * (X.row(j).transpose() - x);
  }
  return D;
}

/// Median of the n(n-1)/2 pairwise Euclidean distances; the mean of the two
/// middle values for an even count. A zero median (duplicate-dominated data)
/// is unusable as a bandwidth and throws.
inline Scalar median_heuristic(const Matrix& X) {
  const Index n = X.rows();
  require(n >= 2, "median_heuristic: need at least two points");
  std::vector<Scalar> dist;
  dist.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j)
      dist.push_back((X.row(i) - X.row(j)).norm());
  const std::size_t half = dist.size() / 2;
  std::nth_element(dist.begin(), dist.begin() + half, dist.end());
  Scalar med = dist[half];
  if (dist.size() % 2 == 0) {
    auto lower = std::max_element(dist.begin(), dist.begin() + half);
    med = 0.5 * (*lower + med);
  }
  require(med > 0, "median_heuristic: median pairwise distance is zero, supply a bandwidth");
  return med;
}

}  // namespace gkdr
