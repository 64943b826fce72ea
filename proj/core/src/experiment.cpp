#include "fedrlhf/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "fedrlhf/error.hpp"
#include "fedrlhf/serialize.hpp"
#include "json_codec.hpp"

namespace fedrlhf {

namespace {

using detail::ojson;

std::string join_path(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

// Reads keys from one JSON object and rejects any key it was not asked about.
class ObjectReader {
 public:
  ObjectReader(const ojson& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "must be an object");
  }

  bool has(const std::string& key) {
    known_.insert(key);
    return obj_.contains(key) && !obj_.at(key).is_null();
  }

  const ojson& raw(const std::string& key) {
    if (!has(key)) throw ConfigError(field(key), "is required");
    return obj_.at(key);
  }

  std::string field(const std::string& key) const { return join_path(path_, key); }

  double number(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    const ojson& v = obj_.at(key);
    if (!v.is_number()) throw ConfigError(field(key), "must be a number");
    return v.get<double>();
  }

  long integer(const std::string& key, long fallback) {
    if (!has(key)) return fallback;
    const ojson& v = obj_.at(key);
    if (!v.is_number_integer()) throw ConfigError(field(key), "must be an integer");
    return v.get<long>();
  }

  std::uint64_t unsigned_integer(const std::string& key) {
    const ojson& v = raw(key);
    if (!v.is_number_unsigned()) throw ConfigError(field(key), "must be a non-negative integer");
    return v.get<std::uint64_t>();
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const ojson& v = obj_.at(key);
    if (!v.is_boolean()) throw ConfigError(field(key), "must be true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key) {
    const ojson& v = raw(key);
    if (!v.is_string()) throw ConfigError(field(key), "must be a string");
    return v.get<std::string>();
  }

  void reject_unknown() const {
    for (const auto& [key, value] : obj_.items()) {
      if (!known_.count(key)) throw ConfigError(field(key), "unknown field");
    }
  }

 private:
  const ojson& obj_;
  std::string path_;
  std::set<std::string> known_;
};

MetricKind metric_field(ObjectReader& r, const std::string& key) {
  std::string name = r.string(key);
  auto kind = parse_metric(name);
  if (!kind) throw ConfigError(r.field(key), "unknown metric '" + name + "'");
  return *kind;
}

MetricKind metric_value(const ojson& v, const std::string& field) {
  if (!v.is_string()) throw ConfigError(field, "must be a metric name");
  auto kind = parse_metric(v.get<std::string>());
  if (!kind) throw ConfigError(field, "unknown metric '" + v.get<std::string>() + "'");
  return *kind;
}

std::vector<MetricKind> metric_list(const ojson& v, const std::string& field) {
  if (!v.is_array()) throw ConfigError(field, "must be an array of metric names");
  std::vector<MetricKind> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    MetricKind m = metric_value(v[i], field + "[" + std::to_string(i) + "]");
    if (std::find(out.begin(), out.end(), m) != out.end()) {
      throw ConfigError(field + "[" + std::to_string(i) + "]", "duplicate metric");
    }
    out.push_back(m);
  }
  return out;
}

AggregationStrategy parse_strategy(ObjectReader& r) {
  std::string name = r.string("strategy");
  auto kind = parse_strategy_kind(name);
  if (!kind) throw ConfigError(r.field("strategy"), "unknown strategy '" + name + "'");
  AggregationStrategy s;
  s.kind = *kind;
  s.alpha = r.number("alpha", 1.0);
  s.fi_threshold = r.number("fi_threshold", 0.9);
  s.temperature = r.number("temperature", 0.1);
  try {
    s.validate();
  } catch (const DomainError& e) {
    throw ConfigError(r.field("strategy"), e.what());
  }
  return s;
}

// A strategy entry in a grid may be a bare name or an object.
AggregationStrategy parse_strategy_entry(const ojson& v, const std::string& field) {
  if (v.is_string()) {
    ojson wrapped;
    wrapped["strategy"] = v;
    ObjectReader r(wrapped, field);
    return parse_strategy(r);
  }
  ObjectReader r(v, field);
  AggregationStrategy s = parse_strategy(r);
  r.reject_unknown();
  return s;
}

PPOConfig parse_ppo(const ojson& v, const std::string& path) {
  ObjectReader r(v, path);
  PPOConfig c;
  c.clip_range = r.number("clip_range", c.clip_range);
  c.kl_coefficient = r.number("kl_coefficient", c.kl_coefficient);
  c.learning_rate = r.number("learning_rate", c.learning_rate);
  c.ppo_epochs = static_cast<int>(r.integer("ppo_epochs", c.ppo_epochs));
  c.minibatch_count = static_cast<int>(r.integer("minibatch_count", c.minibatch_count));
  c.discount = r.number("discount", c.discount);
  long qpr = r.integer("questions_per_round", 0);
  if (qpr < 0) throw ConfigError(r.field("questions_per_round"), "must be >= 0");
  c.questions_per_round = static_cast<std::size_t>(qpr);
  long spq = r.integer("samples_per_question", static_cast<long>(c.samples_per_question));
  if (spq < 1) throw ConfigError(r.field("samples_per_question"), "must be >= 1");
  c.samples_per_question = static_cast<std::size_t>(spq);
  c.whiten_rewards = r.boolean("whiten_rewards", c.whiten_rewards);
  if (r.has("optimizer")) {
    std::string opt = r.string("optimizer");
    if (opt == "sgd") {
      c.optimizer = Optimizer::kSgd;
    } else if (opt == "adam") {
      c.optimizer = Optimizer::kAdam;
    } else {
      throw ConfigError(r.field("optimizer"), "must be 'sgd' or 'adam'");
    }
  }
  c.adam_beta1 = r.number("adam_beta1", c.adam_beta1);
  c.adam_beta2 = r.number("adam_beta2", c.adam_beta2);
  c.adam_epsilon = r.number("adam_epsilon", c.adam_epsilon);
  r.reject_unknown();
  return c;
}

std::variant<DatasetFile, SyntheticSpec> parse_dataset_source(const ojson& v) {
  ObjectReader r(v, "dataset");
  const bool has_path = r.has("path");
  const bool has_synth = r.has("synthetic");
  if (has_path == has_synth) {
    throw ConfigError("dataset", "give exactly one of 'path' or 'synthetic'");
  }
  if (has_path) {
    DatasetFile file;
    file.path = r.string("path");
    std::string format = r.has("format") ? r.string("format") : "json";
    try {
      file.format = parse_dataset_format(format);
    } catch (const ParseError&) {
      throw ConfigError("dataset.format", "must be 'json' or 'csv'");
    }
    r.reject_unknown();
    return file;
  }
  r.reject_unknown();
  ObjectReader s(r.raw("synthetic"), "dataset.synthetic");
  SyntheticSpec spec;
  auto count = [&](const std::string& key, std::size_t fallback) {
    long n = s.integer(key, static_cast<long>(fallback));
    if (n < 0) throw ConfigError(s.field(key), "must be >= 0");
    return static_cast<std::size_t>(n);
  };
  spec.num_groups = count("num_groups", spec.num_groups);
  spec.num_questions = count("num_questions", spec.num_questions);
  spec.options_per_question = count("options_per_question", spec.options_per_question);
  spec.heterogeneity = s.number("heterogeneity", spec.heterogeneity);
  spec.rng_seed = s.has("seed") ? s.unsigned_integer("seed") : 0;
  s.reject_unknown();
  try {
    validate(spec);
  } catch (const ValidationError& e) {
    throw ConfigError("dataset.synthetic", e.what());
  }
  return spec;
}

ExperimentConfig parse_config_object(const ojson& doc, bool cell_fields_required) {
  ObjectReader r(doc, "");
  ExperimentConfig c;
  c.seed = r.unsigned_integer("seed");
  c.dataset = parse_dataset_source(r.raw("dataset"));

  std::string task = r.has("task") ? r.string("task") : "prediction";
  auto parsed_task = parse_task(task);
  if (!parsed_task) throw ConfigError("task", "must be 'prediction' or 'ranking'");
  c.task = *parsed_task;

  if (cell_fields_required || r.has("metric")) c.metric = metric_field(r, "metric");

  if (cell_fields_required || r.has("aggregation")) {
    ObjectReader a(r.raw("aggregation"), "aggregation");
    c.strategy = parse_strategy(a);
    c.history_decay = a.number("history_decay", c.history_decay);
    c.history_init = a.number("history_init", c.history_init);
    a.reject_unknown();
  }

  if (r.has("policy")) {
    ObjectReader p(r.raw("policy"), "policy");
    c.concentration = p.number("concentration", c.concentration);
    p.reject_unknown();
  }
  if (r.has("ppo")) c.ppo = parse_ppo(r.raw("ppo"), "ppo");

  c.rounds = r.integer("rounds", 0);
  c.eval_interval = r.integer("eval_interval", 0);
  if (r.has("eval_metrics")) c.eval_metrics = metric_list(r.raw("eval_metrics"), "eval_metrics");
  if (r.has("early_stop")) {
    ObjectReader e(r.raw("early_stop"), "early_stop");
    EarlyStop stop;
    stop.metric = metric_field(e, "metric");
    if (!e.has("threshold")) throw ConfigError("early_stop.threshold", "is required");
    stop.threshold = e.number("threshold", 0.0);
    e.reject_unknown();
    c.early_stop = stop;
  }
  if (r.has("output_dir")) c.output_dir = r.string("output_dir");
  r.reject_unknown();

  std::size_t nq = std::holds_alternative<SyntheticSpec>(c.dataset)
                       ? std::get<SyntheticSpec>(c.dataset).num_questions
                       : kMaxQuestionsPerRound;
  validate(c, nq);
  return c;
}

ojson parse_json_text(std::string_view text, const std::string& what) {
  try {
    return ojson::parse(text);
  } catch (const ojson::parse_error& e) {
    throw ParseError(what + ": " + e.what());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

ojson encode_config(const ExperimentConfig& c) {
  ojson j;
  j["seed"] = c.seed;
  ojson ds;
  if (const auto* file = std::get_if<DatasetFile>(&c.dataset)) {
    ds["path"] = file->path.generic_string();
    ds["format"] = file->format == DatasetFormat::kJson ? "json" : "csv";
  } else {
    const auto& s = std::get<SyntheticSpec>(c.dataset);
    ojson synth;
    synth["num_groups"] = s.num_groups;
    synth["num_questions"] = s.num_questions;
    synth["options_per_question"] = s.options_per_question;
    synth["heterogeneity"] = s.heterogeneity;
    synth["seed"] = s.rng_seed;
    ds["synthetic"] = std::move(synth);
  }
  j["dataset"] = std::move(ds);
  j["task"] = std::string(task_name(c.task));
  j["metric"] = std::string(metric_name(c.metric));
  ojson agg;
  agg["strategy"] = std::string(strategy_kind_name(c.strategy.kind));
  agg["alpha"] = c.strategy.alpha;
  agg["fi_threshold"] = c.strategy.fi_threshold;
  agg["temperature"] = c.strategy.temperature;
  agg["history_decay"] = c.history_decay;
  agg["history_init"] = c.history_init;
  j["aggregation"] = std::move(agg);
  j["policy"] = ojson{{"concentration", c.concentration}};
  ojson ppo;
  ppo["clip_range"] = c.ppo.clip_range;
  ppo["kl_coefficient"] = c.ppo.kl_coefficient;
  ppo["learning_rate"] = c.ppo.learning_rate;
  ppo["ppo_epochs"] = c.ppo.ppo_epochs;
  ppo["minibatch_count"] = c.ppo.minibatch_count;
  ppo["discount"] = c.ppo.discount;
  ppo["questions_per_round"] = c.ppo.questions_per_round;
  ppo["samples_per_question"] = c.ppo.samples_per_question;
  ppo["whiten_rewards"] = c.ppo.whiten_rewards;
  ppo["optimizer"] = c.ppo.optimizer == Optimizer::kSgd ? "sgd" : "adam";
  ppo["adam_beta1"] = c.ppo.adam_beta1;
  ppo["adam_beta2"] = c.ppo.adam_beta2;
  ppo["adam_epsilon"] = c.ppo.adam_epsilon;
  j["ppo"] = std::move(ppo);
  j["rounds"] = c.rounds;
  j["eval_interval"] = c.eval_interval;
  ojson metrics = ojson::array();
  for (MetricKind m : c.eval_metrics) metrics.push_back(std::string(metric_name(m)));
  j["eval_metrics"] = std::move(metrics);
  if (c.early_stop) {
    j["early_stop"] = ojson{{"metric", std::string(metric_name(c.early_stop->metric))},
                            {"threshold", c.early_stop->threshold}};
  } else {
    j["early_stop"] = nullptr;
  }
  return j;
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

PreferenceDataset materialize(const ExperimentConfig& config) {
  if (const auto* file = std::get_if<DatasetFile>(&config.dataset)) {
    return load_dataset(file->path, file->format);
  }
  return generate_synthetic(std::get<SyntheticSpec>(config.dataset));
}

}  // namespace

void validate(const ExperimentConfig& config, std::size_t num_questions) {
  if (!metric_supports_task(config.metric, config.task)) {
    throw ConfigError("metric", std::string(metric_name(config.metric)) + " cannot score the " +
                                    std::string(task_name(config.task)) + " task");
  }
  for (std::size_t i = 0; i < config.eval_metrics.size(); ++i) {
    if (!metric_supports_task(config.eval_metrics[i], config.task)) {
      throw ConfigError("eval_metrics[" + std::to_string(i) + "]",
                        "metric incompatible with the " + std::string(task_name(config.task)) +
                            " task");
    }
  }
  if (config.early_stop && !metric_supports_task(config.early_stop->metric, config.task)) {
    throw ConfigError("early_stop.metric", "metric incompatible with the task");
  }
  try {
    config.strategy.validate();
  } catch (const DomainError& e) {
    throw ConfigError("aggregation.strategy", e.what());
  }
  if (!(config.history_decay > 0.0 && config.history_decay < 1.0)) {
    throw ConfigError("aggregation.history_decay", "must lie in (0, 1)");
  }
  if (!(config.history_init >= 0.0 && config.history_init <= 1.0)) {
    throw ConfigError("aggregation.history_init", "must lie in [0, 1]");
  }
  if (!(config.concentration > 0.0)) throw ConfigError("policy.concentration", "must be positive");
  if (config.rounds < 0) throw ConfigError("rounds", "must be >= 0");
  if (config.eval_interval < 0) throw ConfigError("eval_interval", "must be >= 0");
  config.ppo.validate(num_questions);
}

ExperimentConfig parse_experiment_config(std::string_view json_text) {
  return parse_config_object(parse_json_text(json_text, "config"), true);
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  return parse_experiment_config(read_file(path));
}

std::string config_to_json(const ExperimentConfig& config, int indent) {
  ojson j = encode_config(config);
  j["output_dir"] = config.output_dir.generic_string();
  return j.dump(indent);
}

void apply_env_overrides(ExperimentConfig& config) {
  if (const char* dir = std::getenv("FEDRLHF_OUTPUT_DIR"); dir != nullptr && *dir != '\0') {
    config.output_dir = dir;
  }
}

unsigned jobs_from_env() {
  const char* value = std::getenv("FEDRLHF_JOBS");
  if (value == nullptr || *value == '\0') return 1;
  char* end = nullptr;
  unsigned long n = std::strtoul(value, &end, 10);
  if (end == value || *end != '\0' || n == 0) {
    throw ConfigError("FEDRLHF_JOBS", "must be a positive integer");
  }
  return static_cast<unsigned>(n);
}

RunOutput execute(const ExperimentConfig& config) {
  PreferenceDataset dataset = materialize(config);
  validate(config, dataset.num_questions());

  TrainingConfig tc;
  tc.federation.task = config.task;
  tc.federation.metric = config.metric;
  tc.federation.strategy = config.strategy;
  tc.federation.history_decay = config.history_decay;
  tc.federation.history_init = config.history_init;
  tc.federation.concentration = config.concentration;
  tc.federation.ppo = config.ppo;
  tc.federation.seed = config.seed;
  tc.rounds = config.rounds;
  tc.eval_interval = config.eval_interval;
  tc.eval_metrics = config.eval_metrics;
  tc.early_stop = config.early_stop;

  TrainingResult result = run_training(dataset, tc);
  RunOutput out;
  out.report.config = config;
  out.report.evaluations = result.evaluations;
  out.report.summary = result.evaluations.back();
  out.report.rounds_completed = static_cast<long>(result.rounds.size());
  out.report.stopped_early = result.stopped_early;
  out.records = std::move(result.rounds);
  return out;
}

std::string report_to_json(const RunReport& report) {
  ojson j;
  j["config"] = encode_config(report.config);
  j["rounds_completed"] = report.rounds_completed;
  j["stopped_early"] = report.stopped_early;
  j["records_file"] = "rounds.jsonl";
  ojson evals = ojson::array();
  for (const EvaluationPoint& e : report.evaluations) evals.push_back(detail::encode(e));
  j["evaluations"] = std::move(evals);
  j["summary"] = detail::encode(report.summary);
  return j.dump(2) + "\n";
}

RunReport parse_report_json(std::string_view json_text) {
  ojson doc = parse_json_text(json_text, "report");
  try {
    RunReport report;
    report.config = parse_config_object(doc.at("config"), true);
    report.rounds_completed = doc.at("rounds_completed").get<long>();
    report.stopped_early = doc.at("stopped_early").get<bool>();
    for (const ojson& e : doc.at("evaluations")) {
      report.evaluations.push_back(detail::decode_evaluation(e));
    }
    report.summary = detail::decode_evaluation(doc.at("summary"));
    return report;
  } catch (const ojson::exception& e) {
    throw ParseError(std::string("report: ") + e.what());
  }
}

RunReport load_report(const std::filesystem::path& path) {
  return parse_report_json(read_file(path));
}

std::string summary_csv_header() {
  std::string header = "task,client_reward,strategy";
  for (const char* stat : {"fi", "avg_as", "min_as"}) {
    for (MetricKind m : kAllMetrics) {
      header += ",";
      header += stat;
      header += "_";
      header += metric_name(m);
    }
  }
  return header;
}

std::string summary_csv_row(const RunReport& report) {
  std::string row = std::string(task_name(report.config.task)) + "," +
                    std::string(metric_name(report.config.metric)) + "," +
                    report.config.strategy.label();
  for (int stat = 0; stat < 3; ++stat) {
    for (MetricKind m : kAllMetrics) {
      row += ",";
      const MetricEvaluation* e = report.summary.find(m);
      if (e == nullptr) continue;
      row += format_number(stat == 0 ? e->fi : stat == 1 ? e->avg_as : e->min_as);
    }
  }
  return row;
}

RunReport run(const ExperimentConfig& config) {
  RunOutput out = execute(config);

  std::filesystem::create_directories(config.output_dir);
  write_file(config.output_dir / "report.json", report_to_json(out.report));
  std::string lines;
  for (const RoundRecord& record : out.records) {
    lines += to_json(record);
    lines += "\n";
  }
  write_file(config.output_dir / "rounds.jsonl", lines);
  write_file(config.output_dir / "summary.csv",
             summary_csv_header() + "\n" + summary_csv_row(out.report) + "\n");
  return std::move(out.report);
}

GridSpec parse_grid_spec(std::string_view json_text) {
  ojson doc = parse_json_text(json_text, "grid spec");
  ObjectReader r(doc, "");
  GridSpec grid;
  grid.base = parse_config_object(r.raw("base"), false);
  grid.metrics = metric_list(r.raw("metrics"), "metrics");
  if (grid.metrics.empty()) throw ConfigError("metrics", "must not be empty");
  const ojson& strategies = r.raw("strategies");
  if (!strategies.is_array() || strategies.empty()) {
    throw ConfigError("strategies", "must be a non-empty array");
  }
  std::set<std::string> labels;
  for (std::size_t i = 0; i < strategies.size(); ++i) {
    std::string field = "strategies[" + std::to_string(i) + "]";
    AggregationStrategy s = parse_strategy_entry(strategies[i], field);
    if (!labels.insert(s.label()).second) throw ConfigError(field, "duplicate strategy");
    grid.strategies.push_back(s);
  }
  if (r.has("output_dir")) grid.output_dir = r.string("output_dir");
  r.reject_unknown();
  for (std::size_t i = 0; i < grid.metrics.size(); ++i) {
    if (!metric_supports_task(grid.metrics[i], grid.base.task)) {
      throw ConfigError("metrics[" + std::to_string(i) + "]", "metric incompatible with the task");
    }
  }
  return grid;
}

GridSpec load_grid_spec(const std::filesystem::path& path) {
  return parse_grid_spec(read_file(path));
}

std::string cell_name(Task task, MetricKind metric, const AggregationStrategy& strategy) {
  return std::string(task_name(task)) + "__" + std::string(metric_name(metric)) + "__" +
         strategy.label();
}

ExperimentConfig grid_cell_config(const GridSpec& grid, MetricKind metric,
                                  const AggregationStrategy& strategy) {
  ExperimentConfig cell = grid.base;
  cell.metric = metric;
  cell.strategy = strategy;
  cell.output_dir = grid.output_dir / cell_name(grid.base.task, metric, strategy);
  return cell;
}

GridResult run_grid(const GridSpec& grid, unsigned jobs) {
  GridResult result;
  for (MetricKind m : grid.metrics) {
    for (const AggregationStrategy& s : grid.strategies) result.cells.push_back({m, s, {}, {}});
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < result.cells.size(); i = next++) {
      GridCellResult& cell = result.cells[i];
      try {
        cell.report = run(grid_cell_config(grid, cell.metric, cell.strategy));
      } catch (const std::exception& e) {
        cell.error = e.what();
      }
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(jobs, result.cells.size()));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  std::filesystem::create_directories(grid.output_dir);
  std::string csv = summary_csv_header() + "\n";
  std::string failures;
  for (const GridCellResult& cell : result.cells) {
    if (cell.report) {
      csv += summary_csv_row(*cell.report) + "\n";
    } else {
      failures += cell_name(grid.base.task, cell.metric, cell.strategy) + "," + cell.error + "\n";
    }
  }
  result.summary_csv = grid.output_dir / "summary.csv";
  write_file(result.summary_csv, csv);
  if (!failures.empty()) write_file(grid.output_dir / "failures.csv", "cell,error\n" + failures);
  return result;
}

std::vector<ScatterPoint> scatter_points(std::span<const RunReport> reports) {
  if (reports.empty()) throw DomainError("export_scatter: no reports");
  std::vector<ScatterPoint> points;
  for (const RunReport& report : reports) {
    for (const MetricEvaluation& e : report.summary.metrics) {
      points.push_back({std::string(metric_name(report.config.metric)),
                        report.config.strategy.label(), std::string(metric_name(e.metric)),
                        e.fi, e.min_as});
    }
  }
  std::stable_sort(points.begin(), points.end(), [](const ScatterPoint& a, const ScatterPoint& b) {
    return std::tie(a.metric, a.strategy, a.client_reward) <
           std::tie(b.metric, b.strategy, b.client_reward);
  });
  return points;
}

void export_scatter(std::span<const RunReport> reports, const std::filesystem::path& out) {
  std::vector<ScatterPoint> points = scatter_points(reports);
  std::string csv = "metric,strategy,client_reward,fi,min_as\n";
  for (const ScatterPoint& p : points) {
    csv += p.metric + "," + p.strategy + "," + p.client_reward + "," + format_number(p.fi) + "," +
           format_number(p.min_as) + "\n";
  }
  if (out.has_parent_path()) std::filesystem::create_directories(out.parent_path());
  write_file(out, csv);
}

}  // namespace fedrlhf
