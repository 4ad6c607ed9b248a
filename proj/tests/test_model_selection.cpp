#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "gkdr/data.hpp"
#include "gkdr/model_selection.hpp"
#include "gkdr/rng.hpp"

using namespace gkdr;

TEST_CASE("knn_predict with k = n returns the global mean") {
  Matrix Z(4, 1), Y(4, 1), Q(3, 1);
  Z << 0, 1, 2, 3;
  Y << 1, 2, 3, 10;
  Q << -5, 0.7, 99;
  const Matrix pred = knn_predict(Z, Y, Q, 4, Task::Regression);
  for (Index q = 0; q < 3; ++q) CHECK(pred(q, 0) == doctest::Approx(4.0));
}

TEST_CASE("knn_predict nearest-neighbor classification") {
  Matrix Z(2, 1);
  Z << 0, 10;
  Matrix Y(2, 2);
  Y << 1, 0, 0, 1;  // labels a, b
  Matrix Q(1, 1);
  Q << 1;
  const Matrix pred = knn_predict(Z, Y, Q, 1, Task::Classification);
  CHECK(pred(0, 0) == 1.0);
  CHECK(pred(0, 1) == 0.0);
}

TEST_CASE("knn_predict matches an exhaustive-sort oracle") {
  Matrix Z(5, 1), Y(5, 1);
  Z << 0.0, 1.0, 2.5, 4.0, 7.0;
  Y << 10, 20, 30, 40, 50;
  Matrix Q(2, 1);
  Q << 2.0, 5.0;
  for (int k = 1; k <= 5; ++k) {
    const Matrix pred = knn_predict(Z, Y, Q, k, Task::Regression);
    for (Index q = 0; q < 2; ++q) {
      std::vector<std::pair<Scalar, Index>> order;
      for (Index i = 0; i < 5; ++i) order.push_back({std::abs(Z(i, 0) - Q(q, 0)), i});
      std::sort(order.begin(), order.end());
      Scalar mean = 0;
      for (int j = 0; j < k; ++j) mean += Y(order[static_cast<std::size_t>(j)].second, 0);
      CHECK(pred(q, 0) == doctest::Approx(mean / k));
    }
  }
}

TEST_CASE("knn_predict with k = 1 reproduces training values exactly") {
  Rng rng(51);
  Matrix Z(6, 2), Y(6, 1);
  for (Index i = 0; i < 6; ++i) {
    Z(i, 0) = rng.uniform(-1, 1);
    Z(i, 1) = rng.uniform(-1, 1);
    Y(i, 0) = rng.uniform(-1, 1);
  }
  const Matrix pred = knn_predict(Z, Y, Z, 1, Task::Regression);
  CHECK(pred == Y);
}

TEST_CASE("knn_predict majority vote breaks ties toward the smaller label") {
  Matrix Z(4, 1);
  Z << 0, 1, 2, 3;
  Matrix Y(4, 2);
  Y << 1, 0, 0, 1, 1, 0, 0, 1;  // alternating labels 0, 1
  Matrix Q(1, 1);
  Q << 1.5;
  const Matrix pred = knn_predict(Z, Y, Q, 4, Task::Classification);  // 2-2 vote
  CHECK(pred(0, 0) == 1.0);
}

TEST_CASE("knn_predict error paths") {
  Matrix Z(3, 1), Y(3, 1), Q(1, 1);
  Z.setZero();
  Y.setZero();
  Q.setZero();
  CHECK_THROWS_AS(knn_predict(Z, Y, Q, 4, Task::Regression), std::invalid_argument);
  CHECK_THROWS_AS(knn_predict(Z, Y, Q, 0, Task::Regression), std::invalid_argument);
  CHECK_THROWS_AS(knn_predict(Matrix(0, 1), Matrix(0, 1), Q, 1, Task::Regression),
                  std::invalid_argument);
  CHECK_THROWS_AS(knn_predict(Z, Y, Matrix(1, 2), 1, Task::Regression), std::invalid_argument);
}

TEST_CASE("output_bandwidth falls back to the smallest positive distance") {
  // 5 of 6 rows identical: median pairwise distance is 0
  Matrix Y = Matrix::Zero(6, 2);
  Y.col(0).setOnes();
  Y(5, 0) = 0.0;
  Y(5, 1) = 1.0;
  CHECK(output_bandwidth(Y) == doctest::Approx(std::sqrt(2.0)));
  CHECK_THROWS_AS(output_bandwidth(Matrix::Ones(4, 2)), std::invalid_argument);
}

namespace {

CVConfig small_cv(std::uint64_t seed) {
  CVConfig cv;
  cv.folds = 3;
  cv.k_neighbors = 3;
  cv.seed = seed;
  return cv;
}

}  // namespace

TEST_CASE("cross_validate selects the single candidate of a singleton grid") {
  const Dataset ds = gen_synth_A(45, 5);
  CVConfig cv = small_cv(1);
  cv.multipliers = {1.7};
  const CVReport report = cross_validate(ds.X, ds.Y, 1, cv, Method::Gkdr);
  CHECK(report.table.size() == 1);
  CHECK(report.selected_multiplier == doctest::Approx(1.7));
  CHECK(report.selected_epsilon == doctest::Approx(1e-7));
  CHECK(report.selected_mean_error >= 0.0);
}

TEST_CASE("cross_validate is deterministic for a fixed seed") {
  const Dataset ds = gen_synth_A(40, 6);
  CVConfig cv = small_cv(9);
  cv.multipliers = {0.5, 1.0, 2.0};
  const CVReport r1 = cross_validate(ds.X, ds.Y, 1, cv, Method::Gkdr);
  const CVReport r2 = cross_validate(ds.X, ds.Y, 1, cv, Method::Gkdr);
  CHECK(r1.selected_multiplier == r2.selected_multiplier);
  REQUIRE(r1.table.size() == r2.table.size());
  for (std::size_t i = 0; i < r1.table.size(); ++i)
    CHECK(r1.table[i].mean_error == r2.table[i].mean_error);
}

TEST_CASE("cross_validate selection is invariant to grid order") {
  const Dataset ds = gen_synth_A(40, 8);
  CVConfig cv = small_cv(2);
  cv.multipliers = {0.5, 1.0, 3.0, 6.0};
  const CVReport fwd = cross_validate(ds.X, ds.Y, 1, cv, Method::Gkdr);
  std::reverse(cv.multipliers.begin(), cv.multipliers.end());
  const CVReport rev = cross_validate(ds.X, ds.Y, 1, cv, Method::Gkdr);
  CHECK(fwd.selected_multiplier == rev.selected_multiplier);
  CHECK(fwd.selected_epsilon == rev.selected_epsilon);
}

TEST_CASE("cross_validate default grid has eight multipliers spanning [0.5, 10]") {
  const std::vector<Scalar> grid = default_multipliers();
  CHECK(grid.size() == 8);
  CHECK(grid.front() == doctest::Approx(0.5));
  CHECK(grid.back() == doctest::Approx(10.0));
  for (std::size_t j = 1; j < grid.size(); ++j) {
    CHECK(grid[j] > grid[j - 1]);
    // log spacing: constant ratio
    CHECK(grid[j] / grid[j - 1] == doctest::Approx(grid[1] / grid[0]).epsilon(1e-12));
  }
}

TEST_CASE("cross_validate classification errors lie in [0, 1]") {
  Rng rng(52);
  const Index n = 36;
  Matrix X(n, 3);
  Matrix Y = Matrix::Zero(n, 2);
  for (Index i = 0; i < n; ++i) {
    for (Index a = 0; a < 3; ++a) X(i, a) = rng.uniform(-1, 1);
    Y(i, X(i, 0) > 0 ? 0 : 1) = 1.0;
  }
  CVConfig cv = small_cv(3);
  cv.task = Task::Classification;
  cv.multipliers = {1.0, 2.0};
  const CVReport report = cross_validate(X, Y, 1, cv, Method::Gkdr);
  for (const CVEntry& entry : report.table) {
    CHECK(entry.mean_error >= 0.0);
    CHECK(entry.mean_error <= 1.0);
    CHECK(entry.fold_errors.size() == 3);
  }
}

TEST_CASE("cross_validate rejects undersized folds and bad grids") {
  const Dataset ds = gen_synth_A(10, 4);
  CVConfig cv;
  cv.folds = 2;
  cv.k_neighbors = 6;  // training part of each fold has only 5 points
  CHECK_THROWS_AS(cross_validate(ds.X, ds.Y, 1, cv, Method::Gkdr), std::invalid_argument);

  CVConfig empty;
  empty.multipliers.clear();
  CHECK_THROWS_AS(cross_validate(ds.X, ds.Y, 1, empty, Method::Gkdr), std::invalid_argument);

  CVConfig one_fold;
  one_fold.folds = 1;
  CHECK_THROWS_AS(cross_validate(ds.X, ds.Y, 1, one_fold, Method::Gkdr), std::invalid_argument);
}
