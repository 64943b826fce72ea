#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fedrlhf/error.hpp"
#include "fedrlhf/experiment.hpp"

using namespace fedrlhf;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("fedrlhf_experiment_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string config_text(const std::string& extra = "",
                        const std::string& aggregation = R"("strategy": "average")") {
  return R"({
    "seed": 7,
    "dataset": {"synthetic": {"num_groups": 3, "num_questions": 6, "options_per_question": 4,
                              "heterogeneity": 0.6, "seed": 2}},
    "metric": "cosine",
    "aggregation": {)" + aggregation + R"(},
    "rounds": 3)" + extra + "}";
}

ConfigError config_error(const std::string& text) {
  try {
    parse_experiment_config(text);
  } catch (const ConfigError& e) {
    return e;
  }
  ADD_FAILURE() << "no ConfigError for " << text;
  return ConfigError("", "");
}

}  // namespace

TEST(Config, ParsesWithDefaults) {
  ExperimentConfig c = parse_experiment_config(config_text());
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.task, Task::kPrediction);
  EXPECT_EQ(c.metric, MetricKind::kCosine);
  EXPECT_EQ(c.strategy, AggregationStrategy::average());
  EXPECT_EQ(c.rounds, 3);
  EXPECT_EQ(c.ppo, PPOConfig{});
  const auto& s = std::get<SyntheticSpec>(c.dataset);
  EXPECT_EQ(s.num_groups, 3u);
  EXPECT_EQ(s.rng_seed, 2u);
}

TEST(Config, EchoRoundTrips) {
  ExperimentConfig c = parse_experiment_config(config_text(
      R"(, "eval_interval": 2, "eval_metrics": ["cosine", "kl"],
          "early_stop": {"metric": "cosine", "threshold": 0.99},
          "ppo": {"optimizer": "adam", "learning_rate": 0.01, "questions_per_round": 4},
          "output_dir": "somewhere")",
      R"("strategy": "fixed_alpha", "alpha": 2.5)"));
  ExperimentConfig back = parse_experiment_config(config_to_json(c));
  EXPECT_EQ(config_to_json(back), config_to_json(c));
  EXPECT_EQ(back.strategy, AggregationStrategy::fixed_alpha(2.5));
}

TEST(Config, ErrorsNameTheField) {
  EXPECT_EQ(config_error(config_text("", R"("strategy": "median")")).field(), "aggregation.strategy");
  EXPECT_EQ(config_error(R"({"dataset": {"synthetic": {}}, "metric": "cosine",
                              "aggregation": {"strategy": "min"}})")
                .field(),
            "seed");
  EXPECT_EQ(config_error(config_text(R"(, "ppo": {"clip_rnage": 0.1})")).field(), "ppo.clip_rnage");
  EXPECT_EQ(config_error(config_text(R"(, "rounds": -1)")).field(), "rounds");
  EXPECT_EQ(config_error(config_text(R"(, "task": "ranking")")).field(), "metric");
  EXPECT_EQ(config_error(config_text(R"(, "early_stop": {"metric": "cosine"})")).field(),
            "early_stop.threshold");
  EXPECT_EQ(config_error(config_text(R"(, "ppo": {"ppo_epochs": 0})")).field(), "ppo.ppo_epochs");
  EXPECT_THROW(parse_experiment_config("{"), ParseError);
}

TEST(Config, EnvironmentOverridesOutputDir) {
  ExperimentConfig c = parse_experiment_config(config_text());
  setenv("FEDRLHF_OUTPUT_DIR", "/tmp/elsewhere", 1);
  apply_env_overrides(c);
  unsetenv("FEDRLHF_OUTPUT_DIR");
  EXPECT_EQ(c.output_dir, fs::path("/tmp/elsewhere"));
  setenv("FEDRLHF_JOBS", "3", 1);
  EXPECT_EQ(jobs_from_env(), 3u);
  setenv("FEDRLHF_JOBS", "zero", 1);
  EXPECT_THROW(jobs_from_env(), ConfigError);
  unsetenv("FEDRLHF_JOBS");
  EXPECT_EQ(jobs_from_env(), 1u);
}

TEST(Run, ZeroRoundsReportsOnlyInitialEvaluation) {
  ExperimentConfig c = parse_experiment_config(config_text(R"(, "rounds": 0)"));
  c.output_dir = scratch("zero");
  RunReport r = run(c);
  ASSERT_EQ(r.evaluations.size(), 1u);
  EXPECT_EQ(r.summary, r.evaluations[0]);
  EXPECT_EQ(r.rounds_completed, 0);
  EXPECT_EQ(slurp(c.output_dir / "rounds.jsonl"), "");
  fs::remove_all(c.output_dir);
}

TEST(Run, DeterministicFilesAndReportRoundTrip) {
  ExperimentConfig c = parse_experiment_config(config_text());
  c.output_dir = scratch("det_a");
  run(c);
  ExperimentConfig c2 = c;
  c2.output_dir = scratch("det_b");
  run(c2);
  for (const char* f : {"report.json", "rounds.jsonl", "summary.csv"}) {
    EXPECT_EQ(slurp(c.output_dir / f), slurp(c2.output_dir / f)) << f;
  }
  RunReport back = load_report(c.output_dir / "report.json");
  EXPECT_EQ(report_to_json(back), slurp(c.output_dir / "report.json"));
  fs::remove_all(c.output_dir);
  fs::remove_all(c2.output_dir);
}

TEST(Run, FailureWritesNothing) {
  ExperimentConfig c = parse_experiment_config(config_text());
  c.dataset = DatasetFile{"/nonexistent/data.json", DatasetFormat::kJson};
  c.output_dir = scratch("fail");
  EXPECT_THROW(run(c), ParseError);
  EXPECT_FALSE(fs::exists(c.output_dir));
}

TEST(Run, DatasetFromFile) {
  fs::path dir = scratch("file");
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "data.csv");
    out << "group_id,question_id,p1,p2,p3\na,q1,0.2,0.3,0.5\nb,q1,0.6,0.3,0.1\n"
           "a,q2,0.5,0.5,\nb,q2,0.1,0.9,\n";
  }
  ExperimentConfig c = parse_experiment_config(
      R"({"seed": 1, "dataset": {"path": ")" + (dir / "data.csv").string() +
      R"(", "format": "csv"}, "metric": "wasserstein", "aggregation": {"strategy": "min"},
          "rounds": 2})");
  c.output_dir = dir / "out";
  RunReport r = run(c);
  EXPECT_EQ(r.rounds_completed, 2);
  fs::remove_all(dir);
}

TEST(Grid, TwoByTwo) {
  GridSpec g = parse_grid_spec(R"({
    "base": )" + config_text() + R"(,
    "metrics": ["cosine", "borda"],
    "strategies": ["min", {"strategy": "fixed_alpha", "alpha": 3}]
  })");
  g.output_dir = scratch("grid");
  GridResult res = run_grid(g, 2);
  ASSERT_EQ(res.cells.size(), 4u);
  for (const GridCellResult& cell : res.cells) {
    ASSERT_TRUE(cell.report.has_value()) << cell.error;
    EXPECT_EQ(cell.report->config.seed, 7u);
  }
  EXPECT_EQ(res.cells[1].metric, MetricKind::kCosine);
  EXPECT_EQ(res.cells[1].strategy.label(), "fixed_alpha_3");
  std::string csv = slurp(res.summary_csv);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
  EXPECT_TRUE(fs::exists(g.output_dir / "prediction__borda__min" / "report.json"));
  fs::remove_all(g.output_dir);
}

TEST(Grid, SpecErrors) {
  EXPECT_THROW(parse_grid_spec(R"({"base": )" + config_text() +
                               R"(, "metrics": [], "strategies": ["min"]})"),
               ConfigError);
  EXPECT_THROW(parse_grid_spec(R"({"base": )" + config_text() +
                               R"(, "metrics": ["cosine"], "strategies": ["min", "min"]})"),
               ConfigError);
}

TEST(Scatter, PointsAndOrdering) {
  EXPECT_THROW(scatter_points({}), DomainError);
  std::vector<RunReport> reports;
  for (auto s : {AggregationStrategy::max(), AggregationStrategy::min()}) {
    RunReport r;
    r.config.strategy = s;
    r.config.metric = MetricKind::kCosine;
    MetricEvaluation a, b;
    a.metric = MetricKind::kKL;
    a.fi = 0.5;
    a.min_as = 0.25;
    b.metric = MetricKind::kBorda;
    r.summary.metrics = {a, b};
    reports.push_back(r);
  }
  auto pts = scatter_points(reports);
  ASSERT_EQ(pts.size(), 4u);
  EXPECT_EQ(pts[0].metric, "borda");
  EXPECT_EQ(pts[0].strategy, "max");
  EXPECT_EQ(pts[3].metric, "kl");
  EXPECT_EQ(pts[3].strategy, "min");
  EXPECT_EQ(pts[3].fi, 0.5);
  EXPECT_EQ(pts[3].min_as, 0.25);
  fs::path out = scratch("scatter") / "scatter.csv";
  export_scatter(reports, out);
  std::string csv = slurp(out);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "metric,strategy,client_reward,fi,min_as");
  fs::remove_all(out.parent_path());
}
