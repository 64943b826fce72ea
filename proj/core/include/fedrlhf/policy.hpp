#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fedrlhf/metrics.hpp"
#include "fedrlhf/prefdata.hpp"

namespace fedrlhf {

enum class Task { kPrediction, kRanking };

std::string_view task_name(Task task) noexcept;
std::optional<Task> parse_task(std::string_view name) noexcept;

/// Tabular stand-in for the language model: one logit row per question.
///
/// Prediction task: a response is y ~ Dirichlet(concentration * softmax(row)).
/// Ranking task: a response is a permutation drawn from the Plackett-Luce
/// model with item weights softmax(row).
class PolicyParams {
 public:
  /// Zero logits (uniform policy) for every question.
  static PolicyParams uniform(Task task, std::span<const Question> questions,
                              double concentration = 50.0);

  /// Explicit logits; row i belongs to question_ids[i]. Throws DomainError on
  /// non-finite logits, rows with fewer than 2 entries, or concentration <= 0.
  static PolicyParams from_logits(Task task, std::vector<std::string> question_ids,
                                  std::vector<std::vector<double>> logits,
                                  double concentration = 50.0);

  Task task() const noexcept { return task_; }
  double concentration() const noexcept { return concentration_; }
  const std::vector<std::string>& question_ids() const noexcept { return question_ids_; }
  const std::vector<std::vector<double>>& logits() const noexcept { return logits_; }
  std::span<const double> row(std::size_t q) const { return logits_.at(q); }

  /// Throws DomainError for an unknown id.
  std::size_t index_of(std::string_view question_id) const;

  /// Same shape, new logits (validated).
  PolicyParams with_logits(std::vector<std::vector<double>> logits) const;

  bool operator==(const PolicyParams& other) const {
    return task_ == other.task_ && concentration_ == other.concentration_ &&
           question_ids_ == other.question_ids_ && logits_ == other.logits_;
  }

 private:
  Task task_ = Task::kPrediction;
  double concentration_ = 50.0;
  std::vector<std::string> question_ids_;
  std::vector<std::vector<double>> logits_;
  std::map<std::string, std::size_t, std::less<>> lookup_;
};

struct RolloutItem {
  std::string question_id;
  std::size_t question_index = 0;
  Prediction prediction;
  double log_prob_old = 0.0;

  bool operator==(const RolloutItem&) const = default;
};

struct Rollout {
  std::vector<RolloutItem> items;

  std::size_t size() const noexcept { return items.size(); }
  bool operator==(const Rollout&) const = default;
};

enum class Optimizer { kSgd, kAdam };

struct PPOConfig {
  double clip_range = 0.2;
  double kl_coefficient = 0.05;
  double learning_rate = 0.05;
  int ppo_epochs = 2;
  int minibatch_count = 8;
  // Kept for completeness; single-step episodes make it inert.
  double discount = 1.0;
  // Questions per round; 0 means all questions, capped at 256.
  std::size_t questions_per_round = 0;
  std::size_t samples_per_question = 4;
  bool whiten_rewards = true;
  Optimizer optimizer = Optimizer::kSgd;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;

  /// Rollout items per round for a dataset with `num_questions` questions.
  std::size_t rollout_size(std::size_t num_questions) const noexcept;

  /// Throws ConfigError (field names relative to the ppo block).
  void validate(std::size_t num_questions) const;

  bool operator==(const PPOConfig&) const = default;
};

inline constexpr std::size_t kMaxQuestionsPerRound = 256;

/// Samples one response per entry of `question_ids` (repeats allowed) and
/// records its log-probability under `params`.
Rollout sample_rollout(const PolicyParams& params,
                       std::span<const std::string> question_ids,
                       std::mt19937_64& rng);

/// Exact log-density (Dirichlet) or log-probability (Plackett-Luce).
double log_prob(const PolicyParams& params, std::string_view question_id,
                const Prediction& prediction);

/// d log_prob / d logits for one question row.
std::vector<double> log_prob_gradient(const PolicyParams& params, std::size_t question_index,
                                      const Prediction& prediction);

/// Zero-mean, unit population variance. Inputs with variance below 1e-12 are
/// only centered. Needs >= 2 values.
std::vector<double> whiten(std::span<const double> rewards);

/// One clipped-surrogate term min(r A, clip(r, 1 - eps, 1 + eps) A) and its
/// derivative with respect to the ratio r.
struct SurrogateTerm {
  double value = 0.0;
  double d_ratio = 0.0;
};
SurrogateTerm clipped_surrogate(double ratio, double advantage, double clip_range) noexcept;

/// Mean over `indices` of the clipped surrogate minus kl_coefficient times the
/// KL(new || old) estimate r log r - r + 1, r = pi_new / pi_old.
/// This is the quantity ppo_update ascends.
double surrogate_objective(const PolicyParams& params, const Rollout& rollout,
                           std::span<const double> advantages, const PPOConfig& config,
                           std::span<const std::size_t> indices);

/// Analytic gradient of surrogate_objective, same shape as params.logits().
std::vector<std::vector<double>> surrogate_gradient(const PolicyParams& params,
                                                    const Rollout& rollout,
                                                    std::span<const double> advantages,
                                                    const PPOConfig& config,
                                                    std::span<const std::size_t> indices);

struct PPOStats {
  double loss = 0.0;         // negated objective, mean over all minibatch steps
  double mean_ratio = 1.0;   // at the final parameters, over the whole rollout
  double approx_kl = 0.0;    // same, importance-weighted estimate
  double clip_fraction = 0.0;
};

struct PPOResult {
  PolicyParams params;
  PPOStats stats;
};

/// Runs ppo_epochs passes of minibatch gradient ascent on the surrogate.
/// Minibatch order is shuffled with `shuffle_seed`. Throws DomainError when a
/// gradient turns non-finite. The input params are not modified.
PPOResult ppo_update(const PolicyParams& params, const Rollout& rollout,
                     std::span<const double> advantages, const PPOConfig& config,
                     std::uint64_t shuffle_seed);

/// softmax(row) for prediction, descending-logit order for ranking.
Prediction greedy_prediction(const PolicyParams& params, std::string_view question_id);

std::vector<double> softmax(std::span<const double> logits);

}  // namespace fedrlhf
