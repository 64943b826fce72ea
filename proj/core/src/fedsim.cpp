#include "fedrlhf/fedsim.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <set>
#include <string>

#include "fedrlhf/error.hpp"

namespace fedrlhf {

namespace {

// Independent, reproducible stream per (seed, round, purpose).
std::mt19937_64 round_rng(std::uint64_t seed, long round, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(round), static_cast<std::uint32_t>(
                        static_cast<unsigned long long>(round) >> 32),
                    stream};
  return std::mt19937_64(seq);
}

constexpr std::uint32_t kQuestionStream = 0x51;
constexpr std::uint32_t kSampleStream = 0x52;

bool early_stop_reached(const EarlyStop& stop, const EvaluationPoint& point) {
  const MetricEvaluation* m = point.find(stop.metric);
  return m != nullptr && m->avg_as >= stop.threshold;
}

}  // namespace

GroupClient::GroupClient(std::string group_id, std::span<const GroupPreference> private_rows,
                         MetricKind metric)
    : group_id_(std::move(group_id)), metric_(metric) {
  for (const GroupPreference& row : private_rows) {
    if (row.group_id != group_id_) {
      throw ValidationError("client '" + group_id_ + "' given a row of group '" + row.group_id +
                            "'");
    }
    check_distribution(row.probs, "client preference");
    if (!targets_.emplace(row.question_id, row.probs).second) {
      throw ValidationError("client '" + group_id_ + "' has two rows for question '" +
                            row.question_id + "'");
    }
  }
}

bool GroupClient::knows_question(std::string_view question_id) const {
  return targets_.find(question_id) != targets_.end();
}

RewardReply GroupClient::evaluate(const RolloutBroadcast& broadcast) const {
  if (broadcast.question_ids.size() != broadcast.predictions.size()) {
    throw ValidationError("broadcast: question and prediction counts differ");
  }
  RewardReply reply;
  reply.round = broadcast.round;
  reply.group_id = group_id_;
  reply.rewards.reserve(broadcast.question_ids.size());
  reply.raw.reserve(broadcast.question_ids.size());
  for (std::size_t i = 0; i < broadcast.question_ids.size(); ++i) {
    auto it = targets_.find(broadcast.question_ids[i]);
    if (it == targets_.end()) {
      throw ValidationError("client '" + group_id_ + "' has no preference for question '" +
                            broadcast.question_ids[i] + "'");
    }
    MetricValue v = fedrlhf::evaluate(metric_, broadcast.predictions[i], it->second);
    reply.rewards.push_back(v.oriented_reward);
    reply.raw.push_back(v.raw);
  }
  return reply;
}

std::vector<GroupClient> make_clients(const PreferenceDataset& dataset, MetricKind metric) {
  std::vector<GroupClient> clients;
  clients.reserve(dataset.num_groups());
  for (std::size_t g = 0; g < dataset.num_groups(); ++g) {
    clients.emplace_back(dataset.groups()[g], dataset.group_slice(g), metric);
  }
  return clients;
}

const MetricEvaluation* EvaluationPoint::find(MetricKind kind) const {
  for (const MetricEvaluation& m : metrics) {
    if (m.metric == kind) return &m;
  }
  return nullptr;
}

bool metric_supports_task(MetricKind metric, Task task) noexcept {
  return task == Task::kPrediction || !is_distance_metric(metric);
}

std::vector<MetricKind> metrics_for_task(Task task) {
  std::vector<MetricKind> out;
  for (MetricKind m : kAllMetrics) {
    if (metric_supports_task(m, task)) out.push_back(m);
  }
  return out;
}

std::vector<MetricEvaluation> evaluate_policy(const PolicyParams& params,
                                              const PreferenceDataset& dataset,
                                              std::span<const MetricKind> metrics) {
  const std::size_t nq = dataset.num_questions();
  const std::size_t ng = dataset.num_groups();
  std::vector<Prediction> greedy;
  std::vector<std::string> qids;
  greedy.reserve(nq);
  for (const Question& q : dataset.questions()) {
    greedy.push_back(greedy_prediction(params, q.id));
    qids.push_back(q.id);
  }

  std::vector<MetricEvaluation> out;
  for (MetricKind metric : metrics) {
    if (!metric_supports_task(metric, params.task())) {
      throw DomainError(std::string(metric_name(metric)) + " cannot score the " +
                        std::string(task_name(params.task())) + " task");
    }
    std::vector<double> oriented(nq * ng);
    std::vector<double> raw(nq * ng);
    for (std::size_t q = 0; q < nq; ++q) {
      for (std::size_t g = 0; g < ng; ++g) {
        MetricValue v = evaluate(metric, greedy[q], dataset.probs(g, q));
        oriented[q * ng + g] = v.oriented_reward;
        raw[q * ng + g] = v.raw;
      }
    }
    MetricEvaluation eval;
    eval.metric = metric;
    std::vector<double> raw_means(ng);
    std::vector<double> column(nq);
    for (std::size_t g = 0; g < ng; ++g) {
      for (std::size_t q = 0; q < nq; ++q) column[q] = oriented[q * ng + g];
      eval.group_means.push_back(anchored_mean(column));
      for (std::size_t q = 0; q < nq; ++q) column[q] = raw[q * ng + g];
      raw_means[g] = anchored_mean(column);
    }
    eval.avg_as = anchored_mean(eval.group_means);
    eval.min_as = *std::min_element(eval.group_means.begin(), eval.group_means.end());
    eval.avg_raw = anchored_mean(raw_means);
    FairnessReport fr = shifted_fairness_index(
        GroupRewardMatrix::make(qids, dataset.groups(), std::move(oriented), metric));
    eval.fi = fr.fi;
    eval.per_question_cov = std::move(fr.per_question_cov);
    out.push_back(std::move(eval));
  }
  return out;
}

Federation::Federation(std::vector<Question> questions, std::vector<GroupClient> clients,
                       FederationConfig config)
    : questions_(std::move(questions)), clients_(std::move(clients)), config_(config) {
  if (clients_.size() < 2) throw ValidationError("federation needs at least 2 clients");
  if (questions_.empty()) throw ValidationError("federation needs at least 1 question");
  std::set<std::string> ids;
  for (const GroupClient& c : clients_) {
    if (!ids.insert(c.group_id()).second) {
      throw ValidationError("duplicate client group id '" + c.group_id() + "'");
    }
  }
  if (!metric_supports_task(config_.metric, config_.task)) {
    throw ValidationError(std::string(metric_name(config_.metric)) + " cannot score the " +
                          std::string(task_name(config_.task)) + " task");
  }
  config_.strategy.validate();
  config_.ppo.validate(questions_.size());
}

std::vector<std::string> Federation::group_ids() const {
  std::vector<std::string> ids;
  for (const GroupClient& c : clients_) ids.push_back(c.group_id());
  return ids;
}

ServerState Federation::initial_state() const {
  return {0, PolicyParams::uniform(config_.task, questions_, config_.concentration),
          AlignmentHistory::uniform(clients_.size(), config_.history_init,
                                    config_.history_decay)};
}

std::vector<std::string> Federation::round_questions(long round) const {
  const std::size_t n = questions_.size();
  const std::size_t take = config_.ppo.rollout_size(n) / config_.ppo.samples_per_question;
  std::vector<std::size_t> chosen(n);
  std::iota(chosen.begin(), chosen.end(), std::size_t{0});
  if (take < n) {
    std::mt19937_64 rng = round_rng(config_.seed, round, kQuestionStream);
    std::shuffle(chosen.begin(), chosen.end(), rng);
    chosen.resize(take);
    std::sort(chosen.begin(), chosen.end());
  }
  std::vector<std::string> ids;
  ids.reserve(take * config_.ppo.samples_per_question);
  for (std::size_t q : chosen) {
    for (std::size_t s = 0; s < config_.ppo.samples_per_question; ++s) {
      ids.push_back(questions_[q].id);
    }
  }
  return ids;
}

std::pair<ServerState, RoundRecord> Federation::run_round(const ServerState& state) const {
  const long round = state.round + 1;
  try {
    std::mt19937_64 rng = round_rng(config_.seed, round, kSampleStream);
    std::vector<std::string> ids = round_questions(round);
    Rollout rollout = sample_rollout(state.params, ids, rng);

    RolloutBroadcast broadcast;
    broadcast.round = round;
    broadcast.question_ids = ids;
    for (const RolloutItem& item : rollout.items) broadcast.predictions.push_back(item.prediction);

    const std::size_t rows = ids.size();
    const std::size_t ng = clients_.size();
    std::vector<double> rewards(rows * ng);
    for (std::size_t g = 0; g < ng; ++g) {
      RewardReply reply = client_evaluate(clients_[g], broadcast);
      if (reply.round != round || reply.group_id != clients_[g].group_id() ||
          reply.rewards.size() != rows) {
        throw ValidationError("malformed reply from client '" + clients_[g].group_id() + "'");
      }
      for (std::size_t j = 0; j < rows; ++j) rewards[j * ng + g] = reply.rewards[j];
    }
    GroupRewardMatrix matrix =
        GroupRewardMatrix::make(ids, group_ids(), std::move(rewards), config_.metric);

    RoundRecord record;
    record.round = round;
    record.aggregated = aggregate(matrix, config_.strategy, state.history);
    record.fairness = shifted_fairness_index(matrix);
    std::vector<double> column(rows);
    for (std::size_t g = 0; g < ng; ++g) {
      for (std::size_t j = 0; j < rows; ++j) column[j] = matrix.at(j, g);
      record.group_mean_reward.push_back(anchored_mean(column));
    }
    AlignmentHistory history = update_history(state.history, matrix);
    record.history = history.h;

    std::vector<double> advantages = config_.ppo.whiten_rewards
                                         ? whiten(record.aggregated.per_question)
                                         : record.aggregated.per_question;
    PPOResult update = ppo_update(state.params, rollout, advantages, config_.ppo, rng());
    record.policy = update.stats;

    return {ServerState{round, std::move(update.params), std::move(history)}, std::move(record)};
  } catch (const RoundError&) {
    throw;
  } catch (const Error& e) {
    throw RoundError(round, e.what());
  }
}

TrainingResult run_training(const PreferenceDataset& dataset, const TrainingConfig& config) {
  if (config.rounds < 0) throw DomainError("run_training: rounds must be >= 0");
  if (config.eval_interval < 0) throw DomainError("run_training: eval_interval must be >= 0");

  Federation federation(dataset.questions(), make_clients(dataset, config.federation.metric),
                        config.federation);
  ServerState state = federation.initial_state();

  std::vector<MetricKind> metrics = config.eval_metrics.empty()
                                        ? metrics_for_task(config.federation.task)
                                        : config.eval_metrics;
  if (config.early_stop &&
      std::find(metrics.begin(), metrics.end(), config.early_stop->metric) == metrics.end()) {
    metrics.push_back(config.early_stop->metric);
  }

  TrainingResult result;
  result.evaluations.push_back({0, evaluate_policy(state.params, dataset, metrics)});
  if (config.early_stop && early_stop_reached(*config.early_stop, result.evaluations.back())) {
    result.stopped_early = true;
  } else {
    for (long t = 1; t <= config.rounds; ++t) {
      auto [next, record] = federation.run_round(state);
      state = std::move(next);
      const bool evaluate_now =
          t == config.rounds || (config.eval_interval > 0 && t % config.eval_interval == 0);
      bool stop = false;
      if (evaluate_now) {
        EvaluationPoint point{t, evaluate_policy(state.params, dataset, metrics)};
        stop = config.early_stop && early_stop_reached(*config.early_stop, point);
        record.evaluation = point;
        result.evaluations.push_back(std::move(point));
      }
      result.rounds.push_back(std::move(record));
      if (stop) {
        result.stopped_early = true;
        break;
      }
    }
  }
  result.final_params = std::move(state.params);
  result.final_history = std::move(state.history);
  return result;
}

}  // namespace fedrlhf
