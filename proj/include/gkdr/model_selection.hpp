#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>
#include <vector>

#include "gkdr/gkdr.hpp"
#include "gkdr/kernels.hpp"
#include "gkdr/rng.hpp"
#include "gkdr/types.hpp"

namespace gkdr {

inline std::vector<Scalar> default_multipliers() {
  std::vector<Scalar> out(8);
  for (std::size_t j = 0; j < out.size(); ++j)
    out[j] = 0.5 * std::pow(20.0, static_cast<double>(j) / 7.0);
  return out;
}

struct CVConfig {
  int k_neighbors = 5;
  int folds = 5;
  std::vector<Scalar> multipliers = default_multipliers();
  std::vector<Scalar> epsilons = {1e-7};
  Task task = Task::Regression;
  std::uint64_t seed = 0;
};

struct CVEntry {
  Scalar multiplier = 0;
  Scalar epsilon = 0;
  Scalar mean_error = 0;
  std::vector<Scalar> fold_errors;
};

struct CVReport {
  std::vector<CVEntry> table;
  Scalar selected_multiplier = 0;
  Scalar selected_epsilon = 0;
  Scalar selected_mean_error = 0;
  Scalar sigma_med_x = 0;
  Scalar sigma_med_y = 0;
};

inline std::vector<Index> labels_from_onehot(const Matrix& Y) {
  std::vector<Index> labels(static_cast<std::size_t>(Y.rows()));
  for (Index i = 0; i < Y.rows(); ++i) {
    Index cls;
    Y.row(i).maxCoeff(&cls);
    labels[static_cast<std::size_t>(i)] = cls;
  }
  return labels;
}

/// Output-kernel bandwidth: median pairwise distance of Y. One-hot label
/// blocks with a dominant class can have a zero median with positive
/// distances present; fall back to the smallest positive distance then.
inline Scalar output_bandwidth(const Matrix& Y) {
  const Index n = Y.rows();
  require(n >= 2, "output_bandwidth: need at least two samples");
  std::vector<Scalar> dist;
  dist.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) dist.push_back((Y.row(i) - Y.row(j)).norm());
  const std::size_t half = dist.size() / 2;
  std::nth_element(dist.begin(), dist.begin() + half, dist.end());
  Scalar med = dist[half];
  if (dist.size() % 2 == 0)
    med = 0.5 * (*std::max_element(dist.begin(), dist.begin() + half) + med);
  if (med > 0) return med;
  Scalar smallest = 0;
  for (Scalar v : dist)
    if (v > 0 && (smallest == 0 || v < smallest)) smallest = v;
  require(smallest > 0, "output_bandwidth: all responses identical");
  return smallest;
}

/// kNN prediction on projected coordinates. Regression returns the mean of
/// the k nearest responses; classification the majority one-hot label with
/// vote ties resolved toward the smallest label index and distance ties
/// toward the smallest training index.
inline Matrix knn_predict(const Matrix& train_Z, const Matrix& train_Y, const Matrix& query_Z,
                          int k, Task task) {
  const Index n = train_Z.rows();
  require(n >= 1, "knn_predict: empty training set");
  require(k >= 1 && k <= n, "knn_predict: require 1 <= k <= n");
  require(train_Y.rows() == n, "knn_predict: training shapes differ");
  require(query_Z.cols() == train_Z.cols(), "knn_predict: dimension mismatch");

  Matrix out(query_Z.rows(), train_Y.cols());
  std::vector<std::pair<Scalar, Index>> order(static_cast<std::size_t>(n));
  for (Index q = 0; q < query_Z.rows(); ++q) {
    for (Index i = 0; i < n; ++i)
      order[static_cast<std::size_t>(i)] = {(train_Z.row(i) - query_Z.row(q)).squaredNorm(), i};
    std::nth_element(order.begin(), order.begin() + (k - 1), order.end());
    std::sort(order.begin(), order.begin() + k);

    if (task == Task::Regression) {
      Vector mean = Vector::Zero(train_Y.cols());
      for (int j = 0; j < k; ++j) mean += train_Y.row(order[static_cast<std::size_t>(j)].second);
      out.row(q) = mean / static_cast<Scalar>(k);
    } else {
      std::vector<int> votes(static_cast<std::size_t>(train_Y.cols()), 0);
      for (int j = 0; j < k; ++j) {
        Index cls;
        train_Y.row(order[static_cast<std::size_t>(j)].second).maxCoeff(&cls);
        ++votes[static_cast<std::size_t>(cls)];
      }
      Index winner = 0;
      for (Index c = 1; c < train_Y.cols(); ++c)
        if (votes[static_cast<std::size_t>(c)] > votes[static_cast<std::size_t>(winner)]) winner = c;
      out.row(q).setZero();
      out(q, winner) = 1.0;
    }
  }
  return out;
}

namespace detail {

inline std::vector<int> fold_assignment(const Matrix& Y, Index n, int folds, Task task,
                                        std::uint64_t seed) {
  std::vector<int> fold_of(static_cast<std::size_t>(n));
  Rng rng(seed);
  if (task == Task::Classification) {
    // stratified: deal each class's shuffled members round-robin
    std::vector<std::vector<Index>> by_class(static_cast<std::size_t>(Y.cols()));
    for (Index i = 0; i < n; ++i) {
      Index cls;
      Y.row(i).maxCoeff(&cls);
      by_class[static_cast<std::size_t>(cls)].push_back(i);
    }
    for (auto& members : by_class) {
      rng.shuffle(members);
      for (std::size_t j = 0; j < members.size(); ++j)
        fold_of[static_cast<std::size_t>(members[j])] = static_cast<int>(j % static_cast<std::size_t>(folds));
    }
  } else {
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    rng.shuffle(order);
    for (Index pos = 0; pos < n; ++pos) {
      const int f = static_cast<int>((static_cast<long long>(pos) * folds) / n);
      fold_of[static_cast<std::size_t>(order[static_cast<std::size_t>(pos)])] = f;
    }
  }
  return fold_of;
}

inline Scalar prediction_error(const Matrix& pred, const Matrix& truth, Task task) {
  if (task == Task::Classification) {
    const std::vector<Index> p = labels_from_onehot(pred);
    const std::vector<Index> t = labels_from_onehot(truth);
    Index wrong = 0;
    for (std::size_t i = 0; i < p.size(); ++i)
      if (p[i] != t[i]) ++wrong;
    return static_cast<Scalar>(wrong) / static_cast<Scalar>(p.size());
  }
  return (pred - truth).rowwise().squaredNorm().mean();
}

}  // namespace detail

/// Grid search over bandwidth multipliers (and epsilons) scored by k-fold CV
/// with a kNN predictor on the projected data. The multiplier scales the
/// input bandwidth only, sigma_x = c * median(X); the output bandwidth stays
/// at its median value. Selection minimizes mean CV error with ties broken by
/// smaller multiplier, then smaller epsilon.
inline CVReport cross_validate(const Matrix& X, const Matrix& Y, Index d, const CVConfig& cv,
                               Method method, const GkdrConfig& base_config = GkdrConfig{}) {
  const Index n = X.rows();
  require(cv.folds >= 2, "cross_validate: need at least two folds");
  require(n >= cv.folds, "cross_validate: more folds than samples");
  require(!cv.multipliers.empty(), "cross_validate: empty multiplier grid");
  for (Scalar c : cv.multipliers) require(c > 0, "cross_validate: multipliers must be positive");
  for (Scalar e : cv.epsilons) require(e > 0, "cross_validate: epsilons must be positive");
  require(cv.k_neighbors >= 1, "cross_validate: k_neighbors must be positive");

  const std::vector<int> fold_of = detail::fold_assignment(Y, n, cv.folds, cv.task, cv.seed);
  std::vector<Index> fold_sizes(static_cast<std::size_t>(cv.folds), 0);
  for (int f : fold_of) ++fold_sizes[static_cast<std::size_t>(f)];
  for (Index size : fold_sizes)
    require(n - size >= cv.k_neighbors, "cross_validate: fold leaves fewer training points than k_neighbors");

  CVReport report;
  report.sigma_med_x = median_heuristic(X);
  report.sigma_med_y = output_bandwidth(Y);

  const Index m = X.cols();
  for (Scalar c : cv.multipliers) {
    for (Scalar eps : cv.epsilons) {
      CVEntry entry;
      entry.multiplier = c;
      entry.epsilon = eps;
      for (int f = 0; f < cv.folds; ++f) {
        const Index n_test = fold_sizes[static_cast<std::size_t>(f)];
        const Index n_train = n - n_test;
        Matrix Xtr(n_train, m), Ytr(n_train, Y.cols());
        Matrix Xte(n_test, m), Yte(n_test, Y.cols());
        Index tr = 0, te = 0;
        for (Index i = 0; i < n; ++i) {
          if (fold_of[static_cast<std::size_t>(i)] == f) {
            Xte.row(te) = X.row(i);
            Yte.row(te++) = Y.row(i);
          } else {
            Xtr.row(tr) = X.row(i);
            Ytr.row(tr++) = Y.row(i);
          }
        }
        GkdrConfig config = base_config;
        config.d = d;
        config.spec = KernelSpec{c * report.sigma_med_x, report.sigma_med_y, eps};
        const Projection proj = fit(Xtr, Ytr, config, method);
        const Matrix pred =
            knn_predict(project(proj, Xtr), Ytr, project(proj, Xte), cv.k_neighbors, cv.task);
        entry.fold_errors.push_back(detail::prediction_error(pred, Yte, cv.task));
      }
      entry.mean_error =
          std::accumulate(entry.fold_errors.begin(), entry.fold_errors.end(), Scalar(0)) /
          static_cast<Scalar>(entry.fold_errors.size());
      report.table.push_back(std::move(entry));
    }
  }

  const auto key = [](const CVEntry& e) { return std::make_tuple(e.mean_error, e.multiplier, e.epsilon); };
  const CVEntry* best = &report.table.front();
  for (const CVEntry& e : report.table)
    if (key(e) < key(*best)) best = &e;
  report.selected_multiplier = best->multiplier;
  report.selected_epsilon = best->epsilon;
  report.selected_mean_error = best->mean_error;
  return report;
}

}  // namespace gkdr
