// Command-line front end: fit | cv | bench | eval.
// Exit codes: 0 success, 1 file/parse problems, 2 invalid configuration,
// 3 numerical failure.

#include <CLI11.hpp>

#include <chrono>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "gkdr/data.hpp"
#include "gkdr/evaluation.hpp"
#include "gkdr/gkdr.hpp"
#include "gkdr/model_selection.hpp"
#include "gkdr/report.hpp"

namespace {

using namespace gkdr;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct DataFlags {
  std::string synth;
  int n = 200;
  std::string input;
  std::string label;
  std::string task = "regression";
  bool no_standardize = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--synth", synth, "synthetic dataset (A or B)")
        ->check(CLI::IsMember({"A", "B"}));
    cmd->add_option("--n", n, "synthetic sample size")->check(CLI::PositiveNumber);
    cmd->add_option("--input", input, "input CSV path (header row required)");
    cmd->add_option("--label", label, "label column name for CSV input");
    cmd->add_option("--task", task, "prediction task for CSV input")
        ->check(CLI::IsMember({"regression", "classification"}));
    cmd->add_flag("--no-standardize", no_standardize, "skip z-scoring of CSV features");
  }

  Task parsed_task() const {
    return task == "classification" ? Task::Classification : Task::Regression;
  }

  Dataset load(std::uint64_t seed) const {
    if (!synth.empty()) {
      require(input.empty(), "--synth and --input are mutually exclusive");
      return synth == "A" ? gen_synth_A(n, seed) : gen_synth_B(n, seed);
    }
    require(!input.empty(), "either --synth or --input is required");
    require(!label.empty(), "--label is required with --input");
    return load_csv(input, label, parsed_task(), !no_standardize);
  }

  Json echo() const {
    Json j;
    if (!synth.empty()) {
      j["synth"] = synth;
      j["n"] = n;
    } else {
      j["input"] = input;
      j["label"] = label;
      j["task"] = task;
      j["standardize"] = !no_standardize;
    }
    return j;
  }
};

struct ModelFlags {
  std::string method = "gkdr";
  Scalar ichol_tol = 1e-6;
  long long max_rank = 0;
  bool low_rank = false;
  bool dense = false;
  std::vector<long long> i_schedule;
  long long v_partition = 0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--method", method, "gkdr | gkdr-i | gkdr-v")
        ->check(CLI::IsMember({"gkdr", "gkdr-i", "gkdr-v"}));
    cmd->add_flag("--low-rank", low_rank, "force the incomplete-Cholesky low-rank path");
    cmd->add_flag("--dense", dense, "force the dense path even for large n");
    cmd->add_option("--ichol-tol", ichol_tol, "incomplete Cholesky relative trace tolerance");
    cmd->add_option("--max-rank", max_rank, "incomplete Cholesky rank cap (0 = n)");
    cmd->add_option("--i-schedule", i_schedule, "gKDR-i dimension schedule (decreasing, ends at d)");
    cmd->add_option("--v-partition", v_partition, "gKDR-v block size (0 = auto)");
  }

  GkdrConfig base_config(Index n) const {
    GkdrConfig config;
    if (low_rank || (n > 2000 && !dense))
      config.low_rank = LowRankOptions{ichol_tol, static_cast<Index>(max_rank)};
    for (long long v : i_schedule) config.i_schedule.push_back(static_cast<Index>(v));
    config.v_partition = static_cast<Index>(v_partition);
    return config;
  }

  Json echo(const GkdrConfig& config) const {
    Json j;
    j["method"] = method;
    if (config.low_rank) {
      j["low_rank"] =
          Json{{"ichol_tol", config.low_rank->tol}, {"max_rank", config.low_rank->max_rank}};
    } else {
      j["low_rank"] = nullptr;
    }
    if (!config.i_schedule.empty()) j["i_schedule"] = config.i_schedule;
    if (config.v_partition > 0) j["v_partition"] = config.v_partition;
    return j;
  }
};

struct CvFlags {
  std::vector<Scalar> multipliers;
  std::vector<Scalar> epsilons;
  int folds = 5;
  int knn_k = 5;

  void attach(CLI::App* cmd) {
    cmd->add_option("--multipliers", multipliers, "bandwidth multipliers c (sigma_x = c * median)");
    cmd->add_option("--epsilons", epsilons, "regularization grid");
    cmd->add_option("--folds", folds, "CV fold count")->check(CLI::Range(2, 1000));
    cmd->add_option("--knn-k", knn_k, "kNN neighbor count used in CV")->check(CLI::PositiveNumber);
  }

  CVConfig config(Task task, std::uint64_t seed, Scalar default_epsilon) const {
    CVConfig cv;
    cv.k_neighbors = knn_k;
    cv.folds = folds;
    if (!multipliers.empty()) cv.multipliers = multipliers;
    cv.epsilons = epsilons.empty() ? std::vector<Scalar>{default_epsilon} : epsilons;
    cv.task = task;
    cv.seed = seed;
    return cv;
  }
};

Json projection_metrics(const Projection& proj) {
  Json j;
  j["eigenvalues"] = std::vector<Scalar>(proj.eigenvalues.data(),
                                         proj.eigenvalues.data() + proj.eigenvalues.size());
  return j;
}

int cmd_fit(const DataFlags& data, const ModelFlags& model, const CvFlags& cvflags, long long d,
            std::uint64_t seed, Scalar multiplier, Scalar sigma_x, Scalar sigma_y, Scalar epsilon,
            bool run_cv, const std::string& out_projection, const std::string& out_report) {
  const auto t0 = Clock::now();
  Json timings;

  const Dataset ds = data.load(derive_seed(seed, 0));
  timings["load"] = seconds_since(t0);

  GkdrConfig config = model.base_config(ds.n());
  config.d = static_cast<Index>(d);
  const Method method = parse_method(model.method);

  Scalar selected_multiplier = multiplier;
  Scalar selected_epsilon = epsilon;
  std::optional<CVReport> cv_report;
  const auto t1 = Clock::now();
  if (run_cv) {
    const CVConfig cv = cvflags.config(data.parsed_task(), derive_seed(seed, 1), epsilon);
    cv_report = cross_validate(ds.X, ds.Y, config.d, cv, method, config);
    selected_multiplier = cv_report->selected_multiplier;
    selected_epsilon = cv_report->selected_epsilon;
  }
  timings["cv"] = seconds_since(t1);

  config.spec.sigma_x = sigma_x > 0 ? sigma_x : selected_multiplier * median_heuristic(ds.X);
  config.spec.sigma_y = sigma_y > 0 ? sigma_y : output_bandwidth(ds.Y);
  config.spec.epsilon = selected_epsilon;

  const auto t2 = Clock::now();
  const Projection proj = fit(ds.X, ds.Y, config, method);
  timings["fit"] = seconds_since(t2);

  write_matrix_csv(out_projection, proj.B);

  Json metrics = projection_metrics(proj);
  if (ds.B0.size() > 0) metrics["subspace_error"] = subspace_error(ds.B0, proj.B);

  Json config_echo = data.echo();
  config_echo.update(model.echo(config));
  config_echo["d"] = d;
  config_echo["sigma_x"] = config.spec.sigma_x;
  config_echo["sigma_y"] = config.spec.sigma_y;
  config_echo["epsilon"] = config.spec.epsilon;
  config_echo["multiplier"] = selected_multiplier;
  config_echo["cv"] = run_cv;
  config_echo["projection_file"] = out_projection;

  timings["total"] = seconds_since(t0);
  Json report = make_run_report("fit", config_echo, metrics, timings, seed);
  if (cv_report) {
    report["cv_table"] = cv_table_to_json(*cv_report);
    report["selected"] = Json{{"multiplier", cv_report->selected_multiplier},
                              {"epsilon", cv_report->selected_epsilon}};
  }
  write_json(out_report, report);
  std::cout << "fit: wrote " << out_projection << " (" << proj.B.rows() << "x" << proj.B.cols()
            << ") and " << out_report << "\n";
  return 0;
}

int cmd_cv(const DataFlags& data, const ModelFlags& model, const CvFlags& cvflags, long long d,
           std::uint64_t seed, Scalar epsilon, const std::string& out_report) {
  const auto t0 = Clock::now();
  const Dataset ds = data.load(derive_seed(seed, 0));
  GkdrConfig config = model.base_config(ds.n());
  config.d = static_cast<Index>(d);

  const CVConfig cv = cvflags.config(data.parsed_task(), derive_seed(seed, 1), epsilon);
  const CVReport result = cross_validate(ds.X, ds.Y, config.d, cv, parse_method(model.method), config);

  Json config_echo = data.echo();
  config_echo.update(model.echo(config));
  config_echo["d"] = d;
  config_echo["folds"] = cv.folds;
  config_echo["knn_k"] = cv.k_neighbors;
  config_echo["multipliers"] = cv.multipliers;
  config_echo["epsilons"] = cv.epsilons;
  config_echo["sigma_med_x"] = result.sigma_med_x;
  config_echo["sigma_med_y"] = result.sigma_med_y;

  Json metrics{{"selected_mean_error", result.selected_mean_error}};
  Json timings{{"total", seconds_since(t0)}};
  Json report = make_run_report("cv", config_echo, metrics, timings, seed);
  report["cv_table"] = cv_table_to_json(result);
  report["selected"] =
      Json{{"multiplier", result.selected_multiplier}, {"epsilon", result.selected_epsilon}};
  write_json(out_report, report);
  std::cout << "cv: selected multiplier " << format_double(result.selected_multiplier)
            << ", epsilon " << format_double(result.selected_epsilon) << " (mean error "
            << format_double(result.selected_mean_error) << ")\n";
  return 0;
}

int cmd_bench(const std::string& dataset, long long n, const ModelFlags& model,
              const CvFlags& cvflags, long long d, long long reps, std::uint64_t seed,
              int threads, bool no_cv, Scalar multiplier, Scalar epsilon,
              const std::string& out_report) {
  BenchmarkConfig cfg;
  cfg.dataset = dataset == "A" ? SynthDataset::A : SynthDataset::B;
  cfg.n = static_cast<Index>(n);
  cfg.method = parse_method(model.method);
  cfg.replications = static_cast<int>(reps);
  cfg.seed = seed;
  cfg.threads = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  cfg.d = static_cast<Index>(d);
  cfg.use_cv = !no_cv;
  cfg.fixed_multiplier = multiplier;
  cfg.cv = cvflags.config(Task::Regression, 0, epsilon);
  cfg.base_config = model.base_config(cfg.n);

  const BenchmarkResult result = run_synthetic_benchmark(cfg);

  Json config_echo{{"dataset", dataset},          {"n", n},
                   {"d", d},                      {"replications", reps},
                   {"threads", cfg.threads},      {"cv", cfg.use_cv},
                   {"multiplier", multiplier},    {"folds", cfg.cv.folds},
                   {"knn_k", cfg.cv.k_neighbors}, {"multipliers", cfg.cv.multipliers},
                   {"epsilons", cfg.cv.epsilons}};
  config_echo.update(model.echo(cfg.base_config));

  Json metrics{{"mean_error", result.mean_error},
               {"std_error", result.std_error},
               {"sem", result.sem}};
  Json timings{{"total", result.wall_time_seconds}};
  Json report = make_run_report("bench", config_echo, metrics, timings, seed);
  report["benchmark"] = benchmark_to_json(result);
  write_json(out_report, report);

  std::cout << "(" << dataset << ") n=" << n << " " << model.method << ": "
            << format_double(result.mean_error) << " (" << format_double(result.std_error) << ")"
            << (result.singleton ? " [single replication]" : "") << "\n";
  if (!result.failures.empty())
    std::cout << "warning: " << result.failures.size() << " replication(s) failed\n";
  return 0;
}

int cmd_eval(const std::string& projection_path, const std::string& train_path,
             const std::string& test_path, const std::string& input_path, double test_fraction,
             bool stratify, const std::string& label, const std::string& task_name,
             bool no_standardize, int knn_k, std::uint64_t seed, const std::string& out_report,
             const std::string& out_projected) {
  const auto t0 = Clock::now();
  const Task task = task_name == "classification" ? Task::Classification : Task::Regression;

  Dataset train, test;
  if (!input_path.empty()) {
    require(train_path.empty() && test_path.empty(),
            "--input (with --test-fraction) and --train/--test are mutually exclusive");
    const Dataset all = load_csv(input_path, label, task, false);
    auto [tr, te] = train_test_split(all, 1.0 - test_fraction, seed, stratify);
    train = std::move(tr);
    test = std::move(te);
  } else {
    require(!train_path.empty() && !test_path.empty(), "--train and --test (or --input) required");
    train = load_csv(train_path, label, task, false);
    test = load_csv(test_path, label, task, false);
    require(train.dim() == test.dim(), "train and test feature counts differ");
    if (task == Task::Classification) {
      // re-encode test labels against the training label order
      Matrix Yte = Matrix::Zero(test.n(), static_cast<Index>(train.labels.size()));
      for (Index i = 0; i < test.n(); ++i) {
        Index cls;
        test.Y.row(i).maxCoeff(&cls);
        const std::string& name = test.labels[static_cast<std::size_t>(cls)];
        const auto it = std::find(train.labels.begin(), train.labels.end(), name);
        require(it != train.labels.end(), "test label '" + name + "' not present in training data");
        Yte(i, static_cast<Index>(it - train.labels.begin())) = 1.0;
      }
      test.Y = std::move(Yte);
      test.labels = train.labels;
    }
  }

  if (!no_standardize) {
    const auto [mean, scale] = standardize_columns(train.X);
    apply_standardization(test.X, mean, scale);
  }

  Projection proj;
  proj.B = read_matrix_csv(projection_path);
  proj.eigenvalues = Vector::Zero(proj.B.cols());
  require(train.dim() == proj.B.rows(), "projection rows must match the feature count");

  int k = knn_k;
  if (k <= 0) k = (task == Task::Classification && train.labels.size() == 2) ? 7 : 5;

  const Matrix Ztr = project(proj, train.X);
  const Matrix Zte = project(proj, test.X);
  const Matrix pred = knn_predict(Ztr, train.Y, Zte, k, task);

  Json metrics;
  if (task == Task::Classification) {
    metrics["classification_error"] =
        classification_error(labels_from_onehot(pred), labels_from_onehot(test.Y));
  } else {
    metrics["mse"] = (pred - test.Y).rowwise().squaredNorm().mean();
  }
  metrics["k"] = k;
  metrics["d"] = proj.B.cols();
  metrics["train_size"] = train.n();
  metrics["test_size"] = test.n();

  write_matrix_csv(out_projected, Zte);

  Json config_echo{{"projection", projection_path}, {"label", label},
                   {"task", task_name},             {"knn_k", k},
                   {"standardize", !no_standardize}};
  if (!input_path.empty()) {
    config_echo["input"] = input_path;
    config_echo["test_fraction"] = test_fraction;
    config_echo["stratify"] = stratify;
  } else {
    config_echo["train"] = train_path;
    config_echo["test"] = test_path;
  }
  Json timings{{"total", seconds_since(t0)}};
  Json report = make_run_report("eval", config_echo, metrics, timings, seed);
  write_json(out_report, report);
  std::cout << "eval: " << metrics.dump() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gradient-based kernel dimension reduction (gKDR)"};
  app.require_subcommand(1);

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "estimate a projection and write it as CSV");
  DataFlags fit_data;
  ModelFlags fit_model;
  CvFlags fit_cv;
  fit_data.attach(fit_cmd);
  fit_model.attach(fit_cmd);
  fit_cv.attach(fit_cmd);
  long long fit_d = 1;
  std::uint64_t fit_seed = 0;
  Scalar fit_multiplier = 1.0, fit_sigma_x = 0, fit_sigma_y = 0, fit_epsilon = 1e-7;
  bool fit_run_cv = false;
  std::string fit_out_projection = "projection.csv", fit_out_report = "report.json";
  fit_cmd->add_option("--d", fit_d, "target dimension")->required()->check(CLI::PositiveNumber);
  fit_cmd->add_option("--seed", fit_seed, "master seed (all randomness derives from it)");
  fit_cmd->add_option("--multiplier", fit_multiplier, "bandwidth multiplier c, sigma_x = c * median");
  fit_cmd->add_option("--sigma-x", fit_sigma_x, "explicit input bandwidth (overrides multiplier)");
  fit_cmd->add_option("--sigma-y", fit_sigma_y, "explicit output bandwidth");
  fit_cmd->add_option("--epsilon", fit_epsilon, "regularization epsilon");
  fit_cmd->add_flag("--cv", fit_run_cv, "select the multiplier by cross-validation first");
  fit_cmd->add_option("--out-projection", fit_out_projection, "projection CSV path");
  fit_cmd->add_option("--out-report", fit_out_report, "report JSON path");

  // cv
  auto* cv_cmd = app.add_subcommand("cv", "cross-validate the bandwidth multiplier grid");
  DataFlags cv_data;
  ModelFlags cv_model;
  CvFlags cv_cv;
  cv_data.attach(cv_cmd);
  cv_model.attach(cv_cmd);
  cv_cv.attach(cv_cmd);
  long long cv_d = 1;
  std::uint64_t cv_seed = 0;
  Scalar cv_epsilon = 1e-7;
  std::string cv_out = "cv_report.json";
  cv_cmd->add_option("--d", cv_d, "target dimension")->required()->check(CLI::PositiveNumber);
  cv_cmd->add_option("--seed", cv_seed, "master seed");
  cv_cmd->add_option("--epsilon", cv_epsilon, "regularization epsilon (when --epsilons not given)");
  cv_cmd->add_option("--out", cv_out, "report JSON path");

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "synthetic benchmark with CV per replication");
  ModelFlags bench_model;
  CvFlags bench_cv;
  bench_model.attach(bench_cmd);
  bench_cv.attach(bench_cmd);
  std::string bench_dataset;
  long long bench_n = 100, bench_d = 0, bench_reps = 100;
  std::uint64_t bench_seed = 0;
  int bench_threads = 0;
  bool bench_no_cv = false;
  Scalar bench_multiplier = 1.0, bench_epsilon = 1e-7;
  std::string bench_out = "bench.json";
  bench_cmd->add_option("--dataset", bench_dataset, "synthetic dataset")
      ->required()
      ->check(CLI::IsMember({"A", "B"}));
  bench_cmd->add_option("--n", bench_n, "sample size")->required()->check(CLI::PositiveNumber);
  bench_cmd->add_option("--d", bench_d, "target dimension (0 = dataset default)");
  bench_cmd->add_option("--reps", bench_reps, "replication count")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--seed", bench_seed, "master seed");
  bench_cmd->add_option("--threads", bench_threads, "worker threads (0 = hardware)");
  bench_cmd->add_flag("--no-cv", bench_no_cv, "skip CV, use --multiplier");
  bench_cmd->add_option("--multiplier", bench_multiplier, "fixed multiplier with --no-cv");
  bench_cmd->add_option("--epsilon", bench_epsilon, "regularization epsilon");
  bench_cmd->add_option("--out", bench_out, "report JSON path");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "project held-out data and score a kNN predictor");
  std::string eval_projection, eval_train, eval_test, eval_input, eval_label;
  std::string eval_task = "classification";
  double eval_fraction = 0.5;
  bool eval_stratify = false, eval_no_standardize = false;
  int eval_k = 0;
  std::uint64_t eval_seed = 0;
  std::string eval_out = "eval_report.json", eval_out_projected = "projected.csv";
  eval_cmd->add_option("--projection", eval_projection, "fitted projection CSV")->required();
  eval_cmd->add_option("--train", eval_train, "training CSV");
  eval_cmd->add_option("--test", eval_test, "test CSV");
  eval_cmd->add_option("--input", eval_input, "single CSV to split");
  eval_cmd->add_option("--test-fraction", eval_fraction, "held-out fraction with --input")
      ->check(CLI::Range(0.0, 1.0));
  eval_cmd->add_flag("--stratify", eval_stratify, "stratify the split by class");
  eval_cmd->add_option("--label", eval_label, "label column name")->required();
  eval_cmd->add_option("--task", eval_task, "regression | classification")
      ->check(CLI::IsMember({"regression", "classification"}));
  eval_cmd->add_flag("--no-standardize", eval_no_standardize,
                     "skip z-scoring (train statistics applied to test)");
  eval_cmd->add_option("--knn-k", eval_k, "kNN neighbors (0 = 7 for binary classification, else 5)");
  eval_cmd->add_option("--seed", eval_seed, "split seed");
  eval_cmd->add_option("--out", eval_out, "metrics JSON path");
  eval_cmd->add_option("--out-projected", eval_out_projected, "projected test coordinates CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (app.got_subcommand(fit_cmd))
      return cmd_fit(fit_data, fit_model, fit_cv, fit_d, fit_seed, fit_multiplier, fit_sigma_x,
                     fit_sigma_y, fit_epsilon, fit_run_cv, fit_out_projection, fit_out_report);
    if (app.got_subcommand(cv_cmd))
      return cmd_cv(cv_data, cv_model, cv_cv, cv_d, cv_seed, cv_epsilon, cv_out);
    if (app.got_subcommand(bench_cmd))
      return cmd_bench(bench_dataset, bench_n, bench_model, bench_cv, bench_d, bench_reps,
                       bench_seed, bench_threads, bench_no_cv, bench_multiplier, bench_epsilon,
                       bench_out);
    if (app.got_subcommand(eval_cmd))
      return cmd_eval(eval_projection, eval_train, eval_test, eval_input, eval_fraction,
                      eval_stratify, eval_label, eval_task, eval_no_standardize, eval_k, eval_seed,
                      eval_out, eval_out_projected);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::ios_base::failure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
