#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "gkdr/rng.hpp"
#include "gkdr/types.hpp"

namespace gkdr {

/// Supervised sample: Y is a single column for regression or a one-hot block
/// for classification (labels then holds the class names in first-appearance
/// order). B0 carries the ground-truth projection for synthetic data and is
/// 0x0 otherwise.
struct Dataset {
  Matrix X;
  Matrix Y;
  std::vector<std::string> labels;
  Matrix B0;

  Index n() const { return X.rows(); }
  Index dim() const { return X.cols(); }
  bool is_classification() const { return !labels.empty(); }
};

/// Noise-free response surfaces of the synthetic benchmarks.
inline Scalar synth_a_response(const Vector& x) {
  const Scalar z = (x(0) + 2.0 * x(1)) / std::sqrt(5.0);
  return z * std::sin(std::sqrt(5.0) * z);
}

inline Scalar synth_b_response(const Vector& x) {
  const Scalar z1 = (x(0) + x(1)) / std::sqrt(2.0);
  const Scalar z2 = (x(0) - x(1)) / std::sqrt(2.0);
  return (z1 * z1 * z1 + z2) * (z1 - z2 * z2 * z2);
}

namespace detail {

// X uniform on [-1,1]^10 drawn row-major, then the n noise draws; keeping the
// draw order fixed is what makes datasets bitwise reproducible.
template <typename Response>
Dataset generate_synthetic(Index n, std::uint64_t seed, Response response, const Matrix& B0) {
  require(n >= 1, "synthetic generator: n must be positive");
  constexpr Index m = 10;
  Rng rng(seed);
  Dataset ds;
  ds.X.resize(n, m);
  for (Index i = 0; i < n; ++i)
    for (Index a = 0; a < m; ++a) ds.X(i, a) = rng.uniform(-1.0, 1.0);
  ds.Y.resize(n, 1);
  for (Index i = 0; i < n; ++i)
    ds.Y(i, 0) = response(ds.X.row(i).transpose()) + rng.normal(0.0, 0.1);
  ds.B0 = B0;
  return ds;
}

}  // namespace detail

/// Dataset (A): Y = Z sin(sqrt(5) Z) + W, Z = (1,2,0,...,0)^T X / sqrt(5),
/// X uniform on [-1,1]^10, W ~ N(0, 1e-2).
inline Dataset gen_synth_A(Index n, std::uint64_t seed) {
  Matrix B0 = Matrix::Zero(10, 1);
  B0(0, 0) = 1.0 / std::sqrt(5.0);
  B0(1, 0) = 2.0 / std::sqrt(5.0);
  return detail::generate_synthetic(n, seed, synth_a_response, B0);
}

/// Dataset (B): Y = (Z1^3 + Z2)(Z1 - Z2^3) + W with Z1, Z2 the normalized sum
/// and difference of the first two coordinates.
inline Dataset gen_synth_B(Index n, std::uint64_t seed) {
  Matrix B0 = Matrix::Zero(10, 2);
  B0(0, 0) = B0(1, 0) = 1.0 / std::sqrt(2.0);
  B0(0, 1) = 1.0 / std::sqrt(2.0);
  B0(1, 1) = -1.0 / std::sqrt(2.0);
  return detail::generate_synthetic(n, seed, synth_b_response, B0);
}

inline void apply_standardization(Matrix& X, const Vector& mean, const Vector& scale) {
  for (Index a = 0; a < X.cols(); ++a) X.col(a) = (X.col(a).array() - mean(a)) / scale(a);
}

/// Column-wise z-scoring; constant columns are centered with unit scale.
inline std::pair<Vector, Vector> standardize_columns(Matrix& X) {
  const Index n = X.rows(), m = X.cols();
  Vector mean = X.colwise().mean();
  Vector scale(m);
  for (Index a = 0; a < m; ++a) {
    const Scalar var = (X.col(a).array() - mean(a)).square().sum() / std::max<Index>(n - 1, 1);
    scale(a) = var > 0 ? std::sqrt(var) : 1.0;
  }
  apply_standardization(X, mean, scale);
  return {mean, scale};
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) {
    while (!field.empty() && (field.back() == '\r' || field.back() == ' ' || field.back() == '\t'))
      field.pop_back();
    std::size_t start = 0;
    while (start < field.size() && (field[start] == ' ' || field[start] == '\t')) ++start;
    fields.push_back(field.substr(start));
  }
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

inline Scalar parse_number(const std::string& cell, std::size_t row, std::size_t col) {
  Scalar value{};
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end)
    throw ParseError("load_csv: non-numeric value '" + cell + "' at data row " +
                     std::to_string(row) + ", column " + std::to_string(col));
  return value;
}

}  // namespace detail

/// Comma-separated file with a header row; the label column is selected by
/// name, remaining columns are numeric features. Classification labels are
/// one-hot encoded in first-appearance order.
inline Dataset load_csv(const std::string& path, const std::string& label_column, Task task,
                        bool standardize = true) {
  std::ifstream in(path);
  if (!in) throw ParseError("load_csv: cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line) || line.empty()) throw ParseError("load_csv: empty file '" + path + "'");
  const std::vector<std::string> header = detail::split_csv_line(line);

  std::size_t label_idx = header.size();
  for (std::size_t c = 0; c < header.size(); ++c)
    if (header[c] == label_column) label_idx = c;
  if (label_idx == header.size())
    throw ParseError("load_csv: label column '" + label_column + "' not found");

  std::vector<std::vector<Scalar>> features;
  std::vector<std::string> raw_labels;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    ++row;
    const std::vector<std::string> fields = detail::split_csv_line(line);
    if (fields.size() != header.size())
      throw ParseError("load_csv: data row " + std::to_string(row) + " has " +
                       std::to_string(fields.size()) + " fields, header has " +
                       std::to_string(header.size()));
    std::vector<Scalar> feat;
    feat.reserve(header.size() - 1);
    for (std::size_t c = 0; c < fields.size(); ++c) {
      if (c == label_idx) continue;
      feat.push_back(detail::parse_number(fields[c], row, c + 1));
    }
    features.push_back(std::move(feat));
    raw_labels.push_back(fields[label_idx]);
  }
  if (features.empty()) throw ParseError("load_csv: no data rows in '" + path + "'");

  Dataset ds;
  const Index n = static_cast<Index>(features.size());
  const Index m = static_cast<Index>(features.front().size());
  require(m >= 1, "load_csv: no feature columns");
  ds.X.resize(n, m);
  for (Index i = 0; i < n; ++i)
    for (Index a = 0; a < m; ++a) ds.X(i, a) = features[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)];

  if (task == Task::Classification) {
    for (const std::string& lab : raw_labels)
      if (std::find(ds.labels.begin(), ds.labels.end(), lab) == ds.labels.end())
        ds.labels.push_back(lab);
    ds.Y = Matrix::Zero(n, static_cast<Index>(ds.labels.size()));
    for (Index i = 0; i < n; ++i) {
      const auto it = std::find(ds.labels.begin(), ds.labels.end(), raw_labels[static_cast<std::size_t>(i)]);
      ds.Y(i, static_cast<Index>(it - ds.labels.begin())) = 1.0;
    }
  } else {
    ds.Y.resize(n, 1);
    for (Index i = 0; i < n; ++i)
      ds.Y(i, 0) = detail::parse_number(raw_labels[static_cast<std::size_t>(i)],
                                        static_cast<std::size_t>(i + 1), label_idx + 1);
  }

  if (standardize) standardize_columns(ds.X);
  return ds;
}

namespace detail {

inline Dataset take_rows(const Dataset& ds, const std::vector<Index>& rows) {
  Dataset out;
  out.X.resize(static_cast<Index>(rows.size()), ds.X.cols());
  out.Y.resize(static_cast<Index>(rows.size()), ds.Y.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.X.row(static_cast<Index>(i)) = ds.X.row(rows[i]);
    out.Y.row(static_cast<Index>(i)) = ds.Y.row(rows[i]);
  }
  out.labels = ds.labels;
  out.B0 = ds.B0;
  return out;
}

}  // namespace detail

/// Seeded disjoint-and-exhaustive split with a fixed train row count;
/// stratified splits keep per-class train counts within one sample of the
/// proportional target.
inline std::pair<Dataset, Dataset> train_test_split_count(const Dataset& ds, Index train_count,
                                                          std::uint64_t seed, bool stratify) {
  const Index n = ds.n();
  require(train_count >= 1 && train_count < n, "train_test_split: train size must be in [1, n)");
  Rng rng(seed);
  std::vector<Index> train_rows, test_rows;

  if (stratify && ds.is_classification()) {
    const double fraction = static_cast<double>(train_count) / static_cast<double>(n);
    std::vector<std::vector<Index>> by_class(static_cast<std::size_t>(ds.Y.cols()));
    for (Index i = 0; i < n; ++i) {
      Index cls;
      ds.Y.row(i).maxCoeff(&cls);
      by_class[static_cast<std::size_t>(cls)].push_back(i);
    }
    std::vector<std::pair<double, std::size_t>> remainders;
    Index assigned = 0;
    std::vector<Index> take(by_class.size(), 0);
    for (std::size_t c = 0; c < by_class.size(); ++c) {
      rng.shuffle(by_class[c]);
      const double exact = fraction * static_cast<double>(by_class[c].size());
      take[c] = static_cast<Index>(std::floor(exact));
      remainders.push_back({exact - std::floor(exact), c});
      assigned += take[c];
    }
    std::sort(remainders.begin(), remainders.end(),
              [](const auto& a, const auto& b) { return a.first > b.first || (a.first == b.first && a.second < b.second); });
    for (const auto& [rem, c] : remainders) {
      if (assigned >= train_count) break;
      if (take[c] < static_cast<Index>(by_class[c].size())) {
        ++take[c];
        ++assigned;
      }
    }
    for (std::size_t c = 0; c < by_class.size(); ++c) {
      for (std::size_t i = 0; i < by_class[c].size(); ++i)
        (static_cast<Index>(i) < take[c] ? train_rows : test_rows).push_back(by_class[c][i]);
    }
    std::sort(train_rows.begin(), train_rows.end());
    std::sort(test_rows.begin(), test_rows.end());
  } else {
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    rng.shuffle(order);
    train_rows.assign(order.begin(), order.begin() + train_count);
    test_rows.assign(order.begin() + train_count, order.end());
  }
  return {detail::take_rows(ds, train_rows), detail::take_rows(ds, test_rows)};
}

inline std::pair<Dataset, Dataset> train_test_split(const Dataset& ds, double train_fraction,
                                                    std::uint64_t seed, bool stratify) {
  require(train_fraction > 0 && train_fraction < 1, "train_test_split: fraction must be in (0,1)");
  const Index train_count = static_cast<Index>(std::lround(train_fraction * static_cast<double>(ds.n())));
  return train_test_split_count(ds, std::clamp<Index>(train_count, 1, ds.n() - 1), seed, stratify);
}

}  // namespace gkdr
