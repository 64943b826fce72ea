#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fedrlhf/aggregate.hpp"
#include "fedrlhf/fedsim.hpp"
#include "fedrlhf/policy.hpp"
#include "fedrlhf/prefdata.hpp"

namespace fedrlhf {

struct DatasetFile {
  std::filesystem::path path;
  DatasetFormat format = DatasetFormat::kJson;

  bool operator==(const DatasetFile&) const = default;
};

struct ExperimentConfig {
  std::variant<DatasetFile, SyntheticSpec> dataset;
  Task task = Task::kPrediction;
  MetricKind metric = MetricKind::kCosine;
  AggregationStrategy strategy = AggregationStrategy::average();
  double history_decay = 0.9;
  double history_init = 0.5;
  double concentration = 50.0;
  PPOConfig ppo;
  long rounds = 0;
  long eval_interval = 0;
  std::vector<MetricKind> eval_metrics;
  std::optional<EarlyStop> early_stop;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "out";
};

/// Parses a run config. Every problem is a ConfigError whose field() is the
/// dotted JSON path. `seed` is required.
ExperimentConfig parse_experiment_config(std::string_view json_text);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// Cross-field checks (metric vs task, early-stop metric, PPO sizes). Called
/// by the parser; exposed for programmatically built configs.
void validate(const ExperimentConfig& config, std::size_t num_questions);

/// Canonical JSON echo of a config with a fixed key order. Parsing the echo
/// gives back an equal config.
std::string config_to_json(const ExperimentConfig& config, int indent = 2);

/// Environment overrides: FEDRLHF_OUTPUT_DIR replaces output_dir.
void apply_env_overrides(ExperimentConfig& config);

struct RunReport {
  ExperimentConfig config;
  std::vector<EvaluationPoint> evaluations;
  EvaluationPoint summary;  // the final evaluation point
  long rounds_completed = 0;
  bool stopped_early = false;
};

struct RunOutput {
  RunReport report;
  std::vector<RoundRecord> records;
};

/// Loads/generates the dataset and trains, without touching the filesystem
/// beyond reading a dataset file.
RunOutput execute(const ExperimentConfig& config);

/// execute() plus report.json, rounds.jsonl and summary.csv in
/// config.output_dir.
RunReport run(const ExperimentConfig& config);

struct GridSpec {
  ExperimentConfig base;
  std::vector<MetricKind> metrics;
  std::vector<AggregationStrategy> strategies;
  std::filesystem::path output_dir = "grid";
};

GridSpec parse_grid_spec(std::string_view json_text);
GridSpec load_grid_spec(const std::filesystem::path& path);

/// The config of one grid cell, written to output_dir/<cell_name>.
ExperimentConfig grid_cell_config(const GridSpec& grid, MetricKind metric,
                                  const AggregationStrategy& strategy);
std::string cell_name(Task task, MetricKind metric, const AggregationStrategy& strategy);

struct GridCellResult {
  MetricKind metric;
  AggregationStrategy strategy;
  std::optional<RunReport> report;
  std::string error;  // set when the cell failed
};

struct GridResult {
  std::vector<GridCellResult> cells;  // metrics-major, strategies-minor
  std::filesystem::path summary_csv;
};

/// Runs every (metric, strategy) cell with up to `jobs` cells in flight and
/// writes summary.csv in grid.output_dir. Failing cells are recorded and do
/// not stop the grid.
GridResult run_grid(const GridSpec& grid, unsigned jobs = 1);

/// FEDRLHF_JOBS, defaulting to 1.
unsigned jobs_from_env();

/// Summary CSV header: task,client_reward,strategy, then fi_*, avg_as_*,
/// min_as_* for each of the six metrics in canonical order.
std::string summary_csv_header();
std::string summary_csv_row(const RunReport& report);

/// A scatter point per (report, evaluated metric).
struct ScatterPoint {
  std::string client_reward;
  std::string strategy;
  std::string metric;
  double fi = 0.0;
  double min_as = 0.0;
};

/// Points sorted by (metric, strategy, client_reward). Throws DomainError when
/// `reports` is empty.
std::vector<ScatterPoint> scatter_points(std::span<const RunReport> reports);

/// Writes scatter_points() as CSV: metric,strategy,client_reward,fi,min_as.
void export_scatter(std::span<const RunReport> reports, const std::filesystem::path& out);

/// report.json round trip, used by export-scatter.
std::string report_to_json(const RunReport& report);
RunReport parse_report_json(std::string_view json_text);
RunReport load_report(const std::filesystem::path& path);

}  // namespace fedrlhf
