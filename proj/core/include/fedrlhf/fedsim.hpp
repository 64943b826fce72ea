#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fedrlhf/aggregate.hpp"
#include "fedrlhf/fairness.hpp"
#include "fedrlhf/metrics.hpp"
#include "fedrlhf/policy.hpp"
#include "fedrlhf/prefdata.hpp"

namespace fedrlhf {

/// Server -> clients: the round's responses. Carries predictions only.
struct RolloutBroadcast {
  long round = 0;
  std::vector<std::string> question_ids;
  std::vector<Prediction> predictions;
};

/// Client -> server: one scalar reward per broadcast item, in broadcast order.
struct RewardReply {
  long round = 0;
  std::string group_id;
  std::vector<double> rewards;  // oriented
  std::vector<double> raw;

  bool operator==(const RewardReply&) const = default;
};

/// A federated participant. Holds one group's target distributions and never
/// hands them out; the only way to learn anything about them is `evaluate`.
class GroupClient {
 public:
  /// Every row must belong to `group_id`. Throws ValidationError.
  GroupClient(std::string group_id, std::span<const GroupPreference> private_rows,
              MetricKind metric);

  const std::string& group_id() const noexcept { return group_id_; }
  MetricKind metric() const noexcept { return metric_; }
  bool knows_question(std::string_view question_id) const;

  /// Scores every broadcast item against this group's private target.
  /// Throws ValidationError for a question this client holds no row for.
  RewardReply evaluate(const RolloutBroadcast& broadcast) const;

 private:
  std::string group_id_;
  MetricKind metric_;
  std::map<std::string, std::vector<double>, std::less<>> targets_;
};

inline RewardReply client_evaluate(const GroupClient& client, const RolloutBroadcast& broadcast) {
  return client.evaluate(broadcast);
}

/// One client per dataset group, in dataset group order.
std::vector<GroupClient> make_clients(const PreferenceDataset& dataset, MetricKind metric);

/// Evaluation-pass result for one metric.
struct MetricEvaluation {
  MetricKind metric = MetricKind::kCosine;
  double fi = 1.0;
  double avg_as = 0.0;  // mean over groups of the group's mean oriented reward
  double min_as = 0.0;  // min over groups of the same
  double avg_raw = 0.0; // mean over groups of the group's mean raw metric
  std::vector<double> group_means;
  std::vector<double> per_question_cov;

  bool operator==(const MetricEvaluation&) const = default;
};

struct EvaluationPoint {
  long round = 0;
  std::vector<MetricEvaluation> metrics;

  const MetricEvaluation* find(MetricKind kind) const;
  bool operator==(const EvaluationPoint&) const = default;
};

/// Greedy-head evaluation of `params` on every (group, question) of the
/// dataset. Throws DomainError when a metric cannot score the task's output.
std::vector<MetricEvaluation> evaluate_policy(const PolicyParams& params,
                                              const PreferenceDataset& dataset,
                                              std::span<const MetricKind> metrics);

/// Metrics whose inputs the task produces (all six for prediction, the three
/// ranking metrics for ranking).
std::vector<MetricKind> metrics_for_task(Task task);
bool metric_supports_task(MetricKind metric, Task task) noexcept;

struct FederationConfig {
  Task task = Task::kPrediction;
  MetricKind metric = MetricKind::kCosine;
  AggregationStrategy strategy = AggregationStrategy::average();
  double history_decay = 0.9;
  double history_init = 0.5;
  double concentration = 50.0;
  PPOConfig ppo;
  std::uint64_t seed = 0;

  bool operator==(const FederationConfig&) const = default;
};

/// Immutable snapshot exchanged between rounds.
struct ServerState {
  long round = 0;
  PolicyParams params;
  AlignmentHistory history;

  bool operator==(const ServerState&) const = default;
};

struct RoundRecord {
  long round = 0;
  FairnessReport fairness;
  AggregatedReward aggregated;
  std::vector<double> group_mean_reward;
  std::vector<double> history;  // after this round's update
  PPOStats policy;
  std::optional<EvaluationPoint> evaluation;
};

/// The server side of the loop. Holds public question metadata and the
/// clients; raw preferences stay inside the clients.
class Federation {
 public:
  /// Throws ValidationError if the clients do not cover every question, group
  /// ids repeat, or fewer than 2 clients are given.
  Federation(std::vector<Question> questions, std::vector<GroupClient> clients,
             FederationConfig config);

  const FederationConfig& config() const noexcept { return config_; }
  const std::vector<Question>& questions() const noexcept { return questions_; }
  std::vector<std::string> group_ids() const;

  ServerState initial_state() const;

  /// Questions drawn for round t (each repeated samples_per_question times).
  std::vector<std::string> round_questions(long round) const;

  /// sample -> broadcast -> client replies -> matrix -> aggregate ->
  /// history update -> whiten -> PPO. Throws RoundError on any failure; the
  /// input state is untouched.
  std::pair<ServerState, RoundRecord> run_round(const ServerState& state) const;

 private:
  std::vector<Question> questions_;
  std::vector<GroupClient> clients_;
  FederationConfig config_;
};

struct EarlyStop {
  MetricKind metric = MetricKind::kCosine;
  double threshold = 1.0;  // compared against Avg AS

  bool operator==(const EarlyStop&) const = default;
};

struct TrainingConfig {
  FederationConfig federation;
  long rounds = 0;
  long eval_interval = 0;  // 0: evaluate only at start and end
  std::vector<MetricKind> eval_metrics;  // empty: metrics_for_task
  std::optional<EarlyStop> early_stop;
};

struct TrainingResult {
  std::vector<RoundRecord> rounds;
  std::vector<EvaluationPoint> evaluations;  // first entry is round 0
  PolicyParams final_params;
  AlignmentHistory final_history;
  bool stopped_early = false;
};

/// Evaluates at round 0, then runs rounds until `rounds` is reached or the
/// early-stop Avg AS threshold is met at an evaluation point. Evaluations
/// after round t are attached to that round's record.
TrainingResult run_training(const PreferenceDataset& dataset, const TrainingConfig& config);

}  // namespace fedrlhf
