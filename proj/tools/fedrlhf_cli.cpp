// fedrlhf: run, grid, validate and export-scatter front end.

#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fedrlhf/error.hpp"
#include "fedrlhf/experiment.hpp"

namespace {

using namespace fedrlhf;

int report_error(const std::exception& e) {
  if (const auto* c = dynamic_cast<const ConfigError*>(&e)) {
    std::fprintf(stderr, "config error: %s\n", c->what());
    return 2;
  }
  if (dynamic_cast<const ParseError*>(&e) || dynamic_cast<const ValidationError*>(&e)) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return 2;
  }
  std::fprintf(stderr, "error: %s\n", e.what());
  return 1;
}

void print_summary(const RunReport& report) {
  std::printf("rounds=%ld stopped_early=%s\n", report.rounds_completed,
              report.stopped_early ? "yes" : "no");
  for (const MetricEvaluation& m : report.summary.metrics) {
    std::printf("  %-12s fi=%.6f avg_as=%.6f min_as=%.6f\n",
                std::string(metric_name(m.metric)).c_str(), m.fi, m.avg_as, m.min_as);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated RLHF reward-aggregation simulator"};
  app.require_subcommand(1);

  std::string run_config;
  auto* run_cmd = app.add_subcommand("run", "Train one configuration and write its report");
  run_cmd->add_option("config", run_config, "Run config (JSON)")->required()->check(CLI::ExistingFile);

  std::string grid_file;
  auto* grid_cmd = app.add_subcommand("grid", "Run every metric x strategy cell of a grid");
  grid_cmd->add_option("gridspec", grid_file, "Grid spec (JSON)")->required()->check(CLI::ExistingFile);

  std::string validate_config;
  auto* validate_cmd = app.add_subcommand("validate", "Check a run config and print its echo");
  validate_cmd->add_option("config", validate_config, "Run config (JSON)")
      ->required()
      ->check(CLI::ExistingFile);

  std::vector<std::string> report_files;
  std::string scatter_out;
  auto* scatter_cmd =
      app.add_subcommand("export-scatter", "Write FI vs MinAS points from run reports");
  scatter_cmd->add_option("reports", report_files, "report.json files")
      ->required()
      ->check(CLI::ExistingFile);
  scatter_cmd->add_option("-o,--output", scatter_out, "Output CSV")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) {
      ExperimentConfig config = load_experiment_config(run_config);
      apply_env_overrides(config);
      RunReport report = run(config);
      std::printf("wrote %s\n", config.output_dir.string().c_str());
      print_summary(report);
    } else if (*grid_cmd) {
      GridSpec grid = load_grid_spec(grid_file);
      if (const char* dir = std::getenv("FEDRLHF_OUTPUT_DIR"); dir != nullptr && *dir != '\0') {
        grid.output_dir = dir;
      }
      GridResult result = run_grid(grid, jobs_from_env());
      int failed = 0;
      for (const GridCellResult& cell : result.cells) {
        if (!cell.report) {
          ++failed;
          std::fprintf(stderr, "cell %s failed: %s\n",
                       cell_name(grid.base.task, cell.metric, cell.strategy).c_str(),
                       cell.error.c_str());
        }
      }
      std::printf("wrote %s (%zu cells, %d failed)\n", result.summary_csv.string().c_str(),
                  result.cells.size(), failed);
      return failed == 0 ? 0 : 1;
    } else if (*validate_cmd) {
      ExperimentConfig config = load_experiment_config(validate_config);
      apply_env_overrides(config);
      std::printf("%s\n", config_to_json(config).c_str());
    } else if (*scatter_cmd) {
      std::vector<RunReport> reports;
      for (const std::string& file : report_files) reports.push_back(load_report(file));
      export_scatter(reports, scatter_out);
      std::printf("wrote %s\n", scatter_out.c_str());
    }
  } catch (const std::exception& e) {
    return report_error(e);
  }
  return 0;
}
