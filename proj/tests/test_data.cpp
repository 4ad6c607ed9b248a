#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "gkdr/data.hpp"

using namespace gkdr;

namespace {

struct TempCsv {
  std::filesystem::path path;

  explicit TempCsv(const std::string& content) {
    static int counter = 0;
    path = std::filesystem::temp_directory_path() /
           ("gkdr_test_" + std::to_string(counter++) + ".csv");
    std::ofstream out(path);
    out << content;
  }
  ~TempCsv() { std::filesystem::remove(path); }
};

}  // namespace

TEST_CASE("synthetic response formulas") {
  Vector e1 = Vector::Zero(10);
  e1(0) = 1.0;
  // Z = 1/sqrt(5), Y = Z sin(1)
  CHECK(synth_a_response(e1) ==
        doctest::Approx(std::sin(1.0) / std::sqrt(5.0)).epsilon(1e-14));
  // Z1 = Z2 = 1/sqrt(2), Y = 3/8
  CHECK(synth_b_response(e1) == doctest::Approx(0.375).epsilon(1e-14));
}

TEST_CASE("dataset B responds to the coordinate swap as a Z2 sign flip") {
  Rng rng(41);
  for (int t = 0; t < 20; ++t) {
    Vector x = Vector::Zero(10);
    for (Index a = 0; a < 10; ++a) x(a) = rng.uniform(-1, 1);
    Vector swapped = x;
    std::swap(swapped(0), swapped(1));
    const Scalar z1 = (x(0) + x(1)) / std::sqrt(2.0);
    const Scalar z2 = (x(0) - x(1)) / std::sqrt(2.0);
    const Scalar flipped = (z1 * z1 * z1 - z2) * (z1 + z2 * z2 * z2);
    CHECK(synth_b_response(swapped) == doctest::Approx(flipped).epsilon(1e-12));
  }
}

TEST_CASE("generators produce orthonormal ground truth") {
  const Dataset a = gen_synth_A(5, 1);
  CHECK((a.B0.transpose() * a.B0 - Matrix::Identity(1, 1)).norm() <= 1e-12);
  const Dataset b = gen_synth_B(5, 1);
  CHECK((b.B0.transpose() * b.B0 - Matrix::Identity(2, 2)).norm() <= 1e-12);
  CHECK(b.B0.col(0).dot(b.B0.col(1)) == doctest::Approx(0.0));
}

TEST_CASE("generators are bitwise reproducible") {
  const Dataset d1 = gen_synth_A(50, 123);
  const Dataset d2 = gen_synth_A(50, 123);
  CHECK(d1.X == d2.X);
  CHECK(d1.Y == d2.Y);
  const Dataset d3 = gen_synth_A(50, 124);
  CHECK(d1.X != d3.X);
}

TEST_CASE("generator noise variance and input moments") {
  const Index n = 100000;
  const Dataset ds = gen_synth_A(n, 42);
  Vector w(n);
  for (Index i = 0; i < n; ++i) w(i) = ds.Y(i, 0) - synth_a_response(ds.X.row(i).transpose());
  const Scalar mean = w.mean();
  const Scalar var = (w.array() - mean).square().sum() / static_cast<Scalar>(n - 1);
  CHECK(var >= 0.009);
  CHECK(var <= 0.011);
  // uniform [-1,1] coordinates: mean 0 within 3 standard errors
  const Scalar half_width = 3.0 * (2.0 / std::sqrt(12.0)) / std::sqrt(static_cast<Scalar>(n));
  for (Index a = 0; a < 10; ++a) CHECK(std::abs(ds.X.col(a).mean()) <= half_width);
  CHECK(ds.X.minCoeff() >= -1.0);
  CHECK(ds.X.maxCoeff() <= 1.0);
}

TEST_CASE("load_csv one-hot encodes classes in first-appearance order") {
  TempCsv file(
      "f1,f2,class\n"
      "1.0,2.0,setosa\n"
      "2.0,1.0,virginica\n"
      "0.5,0.5,versicolor\n"
      "1.5,2.5,setosa\n");
  const Dataset ds = load_csv(file.path.string(), "class", Task::Classification, false);
  CHECK(ds.n() == 4);
  CHECK(ds.dim() == 2);
  CHECK(ds.Y.cols() == 3);
  CHECK(ds.labels == std::vector<std::string>{"setosa", "virginica", "versicolor"});
  CHECK(ds.Y.row(0).sum() == 1.0);
  CHECK(ds.Y(0, 0) == 1.0);
  CHECK(ds.Y(1, 1) == 1.0);
  CHECK(ds.Y(2, 2) == 1.0);
  CHECK(ds.Y(3, 0) == 1.0);
}

TEST_CASE("load_csv regression, single row, standardization") {
  TempCsv file("a,b,y\n1.5,-2.0,0.25\n");
  const Dataset one = load_csv(file.path.string(), "y", Task::Regression, false);
  CHECK(one.n() == 1);
  CHECK(one.Y(0, 0) == doctest::Approx(0.25));
  CHECK(one.labels.empty());

  TempCsv multi("a,y\n1.0,0\n2.0,1\n3.0,0\n4.0,1\n");
  const Dataset std_on = load_csv(multi.path.string(), "y", Task::Regression, true);
  CHECK(std_on.X.col(0).mean() == doctest::Approx(0.0).epsilon(1e-12));
  const Scalar var = (std_on.X.col(0).array() - std_on.X.col(0).mean()).square().sum() / 3.0;
  CHECK(var == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("load_csv error reporting") {
  TempCsv bad("a,b,y\n1.0,2.0,0.1\n1.0,oops,0.2\n");
  try {
    load_csv(bad.path.string(), "y", Task::Regression);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("row 2") != std::string::npos);
    CHECK(msg.find("column 2") != std::string::npos);
    CHECK(msg.find("oops") != std::string::npos);
  }

  TempCsv ok("a,b,y\n1,2,3\n");
  CHECK_THROWS_AS(load_csv(ok.path.string(), "missing", Task::Regression), ParseError);

  TempCsv empty("");
  CHECK_THROWS_AS(load_csv(empty.path.string(), "y", Task::Regression), ParseError);

  CHECK_THROWS_AS(load_csv("/nonexistent/nope.csv", "y", Task::Regression), ParseError);
}

TEST_CASE("train_test_split basics") {
  const Dataset ds = gen_synth_A(40, 7);
  const auto [train, test] = train_test_split(ds, 0.75, 3, false);
  CHECK(train.n() == 30);
  CHECK(test.n() == 10);
  CHECK(train.X.cols() == ds.dim());

  // same seed gives an identical split
  const auto [train2, test2] = train_test_split(ds, 0.75, 3, false);
  CHECK(train.X == train2.X);
  CHECK(test.Y == test2.Y);

  // leave-one-out style: everything but one sample
  const auto [big, single] = train_test_split_count(ds, 39, 5, false);
  CHECK(single.n() == 1);

  CHECK_THROWS_AS(train_test_split_count(ds, 40, 1, false), std::invalid_argument);
  CHECK_THROWS_AS(train_test_split_count(ds, 0, 1, false), std::invalid_argument);
}

TEST_CASE("train_test_split is disjoint and exhaustive") {
  Dataset ds = gen_synth_A(25, 9);
  // tag each row through the unused last coordinate to track identity
  for (Index i = 0; i < 25; ++i) ds.X(i, 9) = static_cast<Scalar>(i);
  const auto [train, test] = train_test_split(ds, 0.6, 11, false);
  std::vector<int> seen(25, 0);
  for (Index i = 0; i < train.n(); ++i) ++seen[static_cast<int>(train.X(i, 9))];
  for (Index i = 0; i < test.n(); ++i) ++seen[static_cast<int>(test.X(i, 9))];
  for (int count : seen) CHECK(count == 1);
}

TEST_CASE("stratified split preserves class proportions within one sample") {
  TempCsv file([] {
    std::string content = "f,class\n";
    for (int i = 0; i < 30; ++i) content += std::to_string(i) + ".0,big\n";
    for (int i = 0; i < 10; ++i) content += std::to_string(100 + i) + ".0,small\n";
    return content;
  }());
  const Dataset ds = load_csv(file.path.string(), "class", Task::Classification, false);
  const auto [train, test] = train_test_split(ds, 0.5, 13, true);
  CHECK(train.n() == 20);
  Index big_in_train = 0, small_in_train = 0;
  for (Index i = 0; i < train.n(); ++i) {
    if (train.Y(i, 0) == 1.0) ++big_in_train;
    if (train.Y(i, 1) == 1.0) ++small_in_train;
  }
  CHECK(std::abs(static_cast<double>(big_in_train) - 15.0) <= 1.0);
  CHECK(std::abs(static_cast<double>(small_in_train) - 5.0) <= 1.0);
}
