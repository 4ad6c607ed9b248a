#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "gkdr/data.hpp"
#include "gkdr/gkdr.hpp"
#include "gkdr/model_selection.hpp"
#include "gkdr/types.hpp"

namespace gkdr {

/// Subspace discrepancy ||B0 B0^T (I - B B^T)||_F / d with d the column count
/// of the estimate B. Zero iff span(B0) is contained in span(B).
inline Scalar subspace_error(const Matrix& B0, const Matrix& B) {
  require(B0.rows() == B.rows(), "subspace_error: row counts differ");
  require(B0.cols() >= 1 && B.cols() >= 1, "subspace_error: empty projection");
  const Index m = B.rows();
  const Scalar tol = 1e-6;
  require((B0.transpose() * B0 - Matrix::Identity(B0.cols(), B0.cols())).norm() <= tol,
          "subspace_error: B0 columns not orthonormal");
  require((B.transpose() * B - Matrix::Identity(B.cols(), B.cols())).norm() <= tol,
          "subspace_error: B columns not orthonormal");
  const Matrix residual = (B0 * B0.transpose()) * (Matrix::Identity(m, m) - B * B.transpose());
  return residual.norm() / static_cast<Scalar>(B.cols());
}

inline Scalar classification_error(const std::vector<Index>& predictions,
                                   const std::vector<Index>& truth) {
  require(!predictions.empty(), "classification_error: empty input");
  require(predictions.size() == truth.size(), "classification_error: length mismatch");
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i)
    if (predictions[i] != truth[i]) ++wrong;
  return static_cast<Scalar>(wrong) / static_cast<Scalar>(predictions.size());
}

enum class SynthDataset { A, B };

inline Dataset generate_synth(SynthDataset which, Index n, std::uint64_t seed) {
  return which == SynthDataset::A ? gen_synth_A(n, seed) : gen_synth_B(n, seed);
}

struct BenchmarkConfig {
  SynthDataset dataset = SynthDataset::A;
  Index n = 100;
  Method method = Method::Gkdr;
  int replications = 100;
  std::uint64_t seed = 0;
  int threads = 1;
  Index d = 0;  // 0: d0 of the dataset (A: 1, B: 2)
  bool use_cv = true;
  Scalar fixed_multiplier = 1.0;  // used when use_cv is false
  CVConfig cv;
  GkdrConfig base_config;
};

struct BenchmarkResult {
  SynthDataset dataset = SynthDataset::A;
  Index n = 0;
  Method method = Method::Gkdr;
  int replications = 0;
  Scalar mean_error = 0;
  Scalar std_error = 0;  // sample standard deviation across replications
  Scalar sem = 0;        // std_error / sqrt(replications)
  std::vector<Scalar> per_replication_errors;
  std::vector<std::pair<int, std::string>> failures;
  double wall_time_seconds = 0;
  bool singleton = false;  // one replication: std reported as 0
};

namespace detail {

inline Scalar run_one_replication(const BenchmarkConfig& cfg, Index d, int rep) {
  const std::uint64_t data_seed = derive_seed(cfg.seed, 2 * static_cast<std::uint64_t>(rep));
  const std::uint64_t cv_seed = derive_seed(cfg.seed, 2 * static_cast<std::uint64_t>(rep) + 1);
  const Dataset ds = generate_synth(cfg.dataset, cfg.n, data_seed);

  Scalar multiplier = cfg.fixed_multiplier;
  Scalar epsilon = cfg.cv.epsilons.empty() ? 1e-7 : cfg.cv.epsilons.front();
  if (cfg.use_cv) {
    CVConfig cv = cfg.cv;
    cv.seed = cv_seed;
    cv.task = Task::Regression;
    const CVReport report = cross_validate(ds.X, ds.Y, d, cv, cfg.method, cfg.base_config);
    multiplier = report.selected_multiplier;
    epsilon = report.selected_epsilon;
  }

  GkdrConfig config = cfg.base_config;
  config.d = d;
  config.spec = KernelSpec{multiplier * median_heuristic(ds.X), output_bandwidth(ds.Y), epsilon};
  const Projection proj = fit(ds.X, ds.Y, config, cfg.method);
  return subspace_error(ds.B0, proj.B);
}

}  // namespace detail

/// Table-1 style benchmark: per replication, generate data with a derived
/// seed, select the bandwidth multiplier by CV (or use a fixed one), fit, and
/// score against the known projection. Replications run independently, so
/// threading cannot change any reported number.
inline BenchmarkResult run_synthetic_benchmark(const BenchmarkConfig& cfg) {
  require(cfg.replications >= 1, "benchmark: replications must be positive");
  const Index d = cfg.d > 0 ? cfg.d : (cfg.dataset == SynthDataset::A ? 1 : 2);
  const auto start = std::chrono::steady_clock::now();

  std::vector<Scalar> errors(static_cast<std::size_t>(cfg.replications),
                             std::numeric_limits<Scalar>::quiet_NaN());
  std::vector<std::string> messages(static_cast<std::size_t>(cfg.replications));

  const int threads = std::max(1, std::min(cfg.threads, cfg.replications));
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (;;) {
      const int rep = next.fetch_add(1);
      if (rep >= cfg.replications) return;
      try {
        errors[static_cast<std::size_t>(rep)] = detail::run_one_replication(cfg, d, rep);
      } catch (const std::exception& e) {
        messages[static_cast<std::size_t>(rep)] = e.what();
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  BenchmarkResult result;
  result.dataset = cfg.dataset;
  result.n = cfg.n;
  result.method = cfg.method;
  result.replications = cfg.replications;
  result.per_replication_errors = errors;
  for (int rep = 0; rep < cfg.replications; ++rep)
    if (!messages[static_cast<std::size_t>(rep)].empty())
      result.failures.emplace_back(rep, messages[static_cast<std::size_t>(rep)]);

  Scalar sum = 0;
  Index ok = 0;
  for (Scalar e : errors)
    if (std::isfinite(e)) {
      sum += e;
      ++ok;
    }
  if (ok == 0) throw NumericalError("benchmark: every replication failed");
  result.mean_error = sum / static_cast<Scalar>(ok);
  if (ok > 1) {
    Scalar ss = 0;
    for (Scalar e : errors)
      if (std::isfinite(e)) ss += (e - result.mean_error) * (e - result.mean_error);
    result.std_error = std::sqrt(ss / static_cast<Scalar>(ok - 1));
    result.sem = result.std_error / std::sqrt(static_cast<Scalar>(ok));
  } else {
    result.singleton = true;
  }
  result.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace gkdr
