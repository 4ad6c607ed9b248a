#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gkdr/evaluation.hpp"
#include "gkdr/gkdr.hpp"
#include "gkdr/model_selection.hpp"
#include "gkdr/types.hpp"

namespace gkdr {

using Json = nlohmann::json;

/// Shortest decimal representation that round-trips to the same double.
inline std::string format_double(Scalar v) {
  char buf[32];
  const auto result = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, result.ptr);
}

inline void write_matrix_csv(const std::string& path, const Matrix& M) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open '" + path + "' for writing");
  for (Index i = 0; i < M.rows(); ++i) {
    for (Index j = 0; j < M.cols(); ++j) {
      if (j) out << ',';
      out << format_double(M(i, j));
    }
    out << '\n';
  }
}

/// Headerless CSV of doubles (the projection file format).
inline Matrix read_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::vector<std::vector<Scalar>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<Scalar> row;
    std::size_t pos = 0;
    while (pos <= line.size()) {
      const std::size_t next = line.find(',', pos);
      const std::string cell = line.substr(pos, next == std::string::npos ? next : next - pos);
      Scalar v{};
      const auto result = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (result.ec != std::errc{} || result.ptr != cell.data() + cell.size())
        throw ParseError("bad numeric cell '" + cell + "' in '" + path + "'");
      row.push_back(v);
      if (next == std::string::npos) break;
      pos = next + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw ParseError("ragged rows in '" + path + "'");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError("no rows in '" + path + "'");
  Matrix M(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < M.rows(); ++i)
    for (Index j = 0; j < M.cols(); ++j)
      M(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return M;
}

inline Json spec_to_json(const KernelSpec& spec) {
  return Json{{"sigma_x", spec.sigma_x}, {"sigma_y", spec.sigma_y}, {"epsilon", spec.epsilon}};
}

inline Json cv_table_to_json(const CVReport& report) {
  Json table = Json::array();
  for (const CVEntry& entry : report.table) {
    table.push_back(Json{{"multiplier", entry.multiplier},
                         {"epsilon", entry.epsilon},
                         {"mean_error", entry.mean_error},
                         {"fold_errors", entry.fold_errors}});
  }
  return table;
}

inline Json benchmark_to_json(const BenchmarkResult& result) {
  Json failures = Json::array();
  for (const auto& [rep, message] : result.failures)
    failures.push_back(Json{{"replication", rep}, {"message", message}});
  Json per_rep = Json::array();
  for (Scalar e : result.per_replication_errors)
    per_rep.push_back(std::isfinite(e) ? Json(e) : Json(nullptr));
  return Json{{"dataset", result.dataset == SynthDataset::A ? "A" : "B"},
              {"n", result.n},
              {"method", method_name(result.method)},
              {"replications", result.replications},
              {"mean_error", result.mean_error},
              {"std_error", result.std_error},
              {"sem", result.sem},
              {"singleton", result.singleton},
              {"per_replication_errors", per_rep},
              {"failures", failures},
              {"wall_time_seconds", result.wall_time_seconds}};
}

namespace detail {

inline void check_finite_numbers(const Json& value, const std::string& where) {
  if (value.is_number_float() && !std::isfinite(value.get<double>()))
    throw NumericalError("report: non-finite metric in " + where);
  if (value.is_object() || value.is_array())
    for (const Json& child : value) check_finite_numbers(child, where);
}

}  // namespace detail

/// Versioned report envelope (schema/report.schema.json, version 1). Every
/// number in metrics must be finite; the config echo must suffice to
/// reproduce the run.
inline Json make_run_report(const std::string& command, Json config, Json metrics, Json timings,
                            std::uint64_t seed) {
  detail::check_finite_numbers(metrics, "metrics");
  return Json{{"schema_version", 1},
              {"command", command},
              {"config", std::move(config)},
              {"metrics", std::move(metrics)},
              {"timings", std::move(timings)},
              {"seed", seed}};
}

inline void write_json(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open '" + path + "' for writing");
  out << j.dump(2) << '\n';
}

}  // namespace gkdr
