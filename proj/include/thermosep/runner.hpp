#pragma once

#include "thermosep/continuum.hpp"
#include "thermosep/fluctuation.hpp"
#include "thermosep/hightemp.hpp"
#include "thermosep/quasifree.hpp"
#include "thermosep/spin_operators.hpp"

#include <json.hpp>

#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace thermosep {

enum class Task { gibbs_scan, order_classify, hightemp_report, quasifree_scan, continuum_scaling, fluctuation_sweep };

std::string to_string(Task task);
Task task_from_name(const std::string& name);

struct ModelConfig {
  std::string label;
  ModelSpec spec;
};

struct PairsConfig {
  int max_size = 1;
  bool all_subsets = false;
  std::vector<RegionPair> explicit_pairs;
};

struct GibbsScanConfig {
  ModelConfig model;
  std::vector<double> betas;
  PairsConfig pairs;
  bool find_threshold = false;
  double ppt_tol = kPptTolerance;
  double tol_beta = 1e-6;
};

struct OrderClassifyConfig {
  ModelConfig model;
  double beta = 1.0;
  int n_max = 1;
  bool all_subsets = false;
  double ppt_tol = kPptTolerance;
};

struct HightempConfig {
  std::vector<ModelConfig> models;
  BoundScan scan;
};

struct QuasifreeScanConfig {
  int n = 8;
  double t = 1.0;
  double onsite = 0.0;
  bool periodic = false;
  Statistics statistics = Statistics::fermi;
  double mu = 1.0;
  std::vector<RegionProjection> regions;
  std::vector<double> betas;
  double ppt_tol = kPptTolerance;
  double tol_beta = 1e-4;
};

struct ModePairConfig {
  std::string label;
  ModeFunction f;
  ModeFunction g;
};

struct ContinuumConfig {
  std::vector<ModePairConfig> pairs;
  std::vector<double> betas;
  ScalingConvention convention = ScalingConvention::quarter_power;
  bool negative_control = true;
  double tol = 1e-6;
  QuadratureConfig quadrature;
};

struct FluctuationConfig {
  std::vector<double> c_values;
  std::vector<double> lambdas;
  std::vector<double> alphas;
  std::vector<double> betas;
  double sz_tol = 1e-13;
};

struct PlotAxes {
  std::string x;
  std::string y;
  std::vector<std::string> series;
};

struct RunConfig {
  Task task = Task::gibbs_scan;
  std::optional<int> workers;
  std::string output_prefix;
  std::optional<PlotAxes> plot;
  std::variant<GibbsScanConfig, OrderClassifyConfig, HightempConfig, QuasifreeScanConfig, ContinuumConfig,
               FluctuationConfig>
      params;
};

/// Strict: unknown keys, wrong types and empty grids raise ConfigError that
/// names the field. JSON syntax errors report line and column.
RunConfig parse_config(const std::string& text);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// 17 significant digits, "inf"/"-inf"/"nan" for non-finite values.
std::string format_double(double x);
std::string to_csv(const Table& table);

/// Long format (x, y, series). Rows with an error note or a non-numeric y are
/// skipped.
Table emit_plotdata(const Table& records, const PlotAxes& axes);
PlotAxes default_axes(Task task);

struct RunResult {
  Table records;
  nlohmann::json summary;
  Table plot;
};

/// Work items are evaluated on `workers` threads and gathered by index, so the
/// output does not depend on the worker count.
RunResult execute(const RunConfig& config, int workers, bool raw_paper_forms = false);

/// Runs fn(0..count-1) on a shared work queue; results are ordered by index.
template <typename T>
std::vector<T> parallel_map(std::size_t count, int workers, const std::function<T(std::size_t)>& fn);

struct RunOptions {
  std::string out_dir = ".";
  std::optional<int> workers;
  bool raw_paper_forms = false;
};

/// Writes <prefix>.csv, <prefix>_summary.json and <prefix>_plot.csv.
/// Returns 0 on success, 2 when a numerical failure escapes row handling.
int run(const RunConfig& config, const RunOptions& options);

/// {"dims": [...], "data": [[re, im], ...]} with data in row-major order.
nlohmann::json density_to_json(const DensityMatrix& rho);
DensityMatrix density_from_json(const nlohmann::json& j);

/// --workers, then THERMOSEP_WORKERS, then the config, then 1.
int resolve_workers(std::optional<int> cli, const RunConfig& config);

} // namespace thermosep

#include "thermosep/parallel.ipp"
