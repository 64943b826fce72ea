#include "fedrlhf/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include <boost/math/special_functions/digamma.hpp>

#include "fedrlhf/error.hpp"
#include "fedrlhf/fairness.hpp"

namespace fedrlhf {

namespace {

constexpr double kDegenerateVariance = 1e-12;

void check_row(std::span<const double> row, std::string_view question_id) {
  if (row.size() < 2) {
    throw DomainError("policy: question '" + std::string(question_id) +
                      "' needs at least 2 logits");
  }
  for (double v : row) {
    if (!std::isfinite(v)) {
      throw DomainError("policy: non-finite logit for question '" + std::string(question_id) +
                        "'");
    }
  }
}

void check_shape(const PolicyParams& params, std::size_t q, const Prediction& prediction) {
  const std::size_t k = params.row(q).size();
  if (params.task() == Task::kPrediction) {
    if (prediction.kind != Prediction::Kind::kProbabilityVector || prediction.probs.size() != k) {
      throw DomainError("log_prob: expected a " + std::to_string(k) +
                        "-option probability vector for question '" +
                        params.question_ids()[q] + "'");
    }
    for (double y : prediction.probs) {
      if (!(y > 0.0) || !std::isfinite(y)) {
        throw DomainError("log_prob: Dirichlet density needs strictly positive entries");
      }
    }
  } else {
    if (prediction.kind != Prediction::Kind::kRanking || prediction.ranking.size() != k) {
      throw DomainError("log_prob: expected a " + std::to_string(k) +
                        "-option ranking for question '" + params.question_ids()[q] + "'");
    }
    check_permutation(prediction.ranking, "log_prob");
  }
}

double dirichlet_log_density(std::span<const double> logits, double concentration,
                             std::span<const double> y) {
  std::vector<double> s = softmax(logits);
  double out = std::lgamma(concentration);
  for (std::size_t k = 0; k < s.size(); ++k) {
    double a = concentration * s[k];
    out += (a - 1.0) * std::log(y[k]) - std::lgamma(a);
  }
  return out;
}

// d/dtheta_m = kappa s_m (u_m - sum_k s_k u_k), u_k = psi(kappa) - psi(a_k) + log y_k.
std::vector<double> dirichlet_gradient(std::span<const double> logits, double concentration,
                                       std::span<const double> y) {
  std::vector<double> s = softmax(logits);
  const double psi_total = boost::math::digamma(concentration);
  std::vector<double> u(s.size());
  double weighted = 0.0;
  for (std::size_t k = 0; k < s.size(); ++k) {
    u[k] = psi_total - boost::math::digamma(concentration * s[k]) + std::log(y[k]);
    weighted += s[k] * u[k];
  }
  std::vector<double> grad(s.size());
  for (std::size_t m = 0; m < s.size(); ++m) grad[m] = concentration * s[m] * (u[m] - weighted);
  return grad;
}

double plackett_luce_log_prob(std::span<const double> logits, std::span<const std::size_t> order) {
  // Walk from the back so the running log-sum-exp covers the items still
  // unplaced at each stage.
  double out = 0.0;
  double tail_max = -std::numeric_limits<double>::infinity();
  for (std::size_t i = order.size(); i-- > 0;) tail_max = std::max(tail_max, logits[order[i]]);
  double tail_sum = 0.0;
  std::vector<double> stage_lse(order.size());
  for (std::size_t i = order.size(); i-- > 0;) {
    tail_sum += std::exp(logits[order[i]] - tail_max);
    stage_lse[i] = tail_max + std::log(tail_sum);
  }
  for (std::size_t i = 0; i < order.size(); ++i) out += logits[order[i]] - stage_lse[i];
  return out;
}

std::vector<double> plackett_luce_gradient(std::span<const double> logits,
                                           std::span<const std::size_t> order) {
  const std::size_t k = order.size();
  std::vector<double> grad(k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    grad[order[i]] += 1.0;
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t j = i; j < k; ++j) top = std::max(top, logits[order[j]]);
    double total = 0.0;
    for (std::size_t j = i; j < k; ++j) total += std::exp(logits[order[j]] - top);
    for (std::size_t j = i; j < k; ++j) grad[order[j]] -= std::exp(logits[order[j]] - top) / total;
  }
  return grad;
}

std::vector<double> sample_dirichlet(std::span<const double> logits, double concentration,
                                     std::mt19937_64& rng) {
  std::vector<double> s = softmax(logits);
  std::vector<double> y(s.size());
  double total = 0.0;
  for (std::size_t k = 0; k < s.size(); ++k) {
    std::gamma_distribution<double> gamma(concentration * s[k], 1.0);
    // Tiny shape parameters can underflow to exactly zero.
    y[k] = std::max(gamma(rng), std::numeric_limits<double>::min());
    total += y[k];
  }
  for (double& v : y) v = std::max(v / total, std::numeric_limits<double>::min());
  return y;
}

Ranking sample_plackett_luce(std::span<const double> logits, std::mt19937_64& rng) {
  std::vector<std::size_t> remaining(logits.size());
  std::iota(remaining.begin(), remaining.end(), std::size_t{0});
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Ranking order;
  order.reserve(logits.size());
  while (remaining.size() > 1) {
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t idx : remaining) top = std::max(top, logits[idx]);
    std::vector<double> w(remaining.size());
    double total = 0.0;
    for (std::size_t i = 0; i < remaining.size(); ++i) {
      w[i] = std::exp(logits[remaining[i]] - top);
      total += w[i];
    }
    double u = unif(rng) * total;
    std::size_t pick = remaining.size() - 1;
    for (std::size_t i = 0; i < remaining.size(); ++i) {
      if (u < w[i]) {
        pick = i;
        break;
      }
      u -= w[i];
    }
    order.push_back(remaining[pick]);
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(pick));
  }
  order.push_back(remaining.front());
  return order;
}

// Per-sample estimate of KL(new || old) from old-policy samples. Its
// gradient vanishes at r = 1.
double kl_estimate(double ratio, double log_ratio) { return ratio * log_ratio - ratio + 1.0; }

struct SampleTerm {
  double value;
  double weight;  // d value / d log pi_new
  double ratio;
  double log_ratio;
};

SampleTerm sample_term(const PolicyParams& params, const RolloutItem& item, double advantage,
                       const PPOConfig& config) {
  const std::size_t q = item.question_index;
  double lp = params.task() == Task::kPrediction
                  ? dirichlet_log_density(params.row(q), params.concentration(),
                                          item.prediction.probs)
                  : plackett_luce_log_prob(params.row(q), item.prediction.ranking);
  double log_ratio = lp - item.log_prob_old;
  double ratio = std::exp(log_ratio);
  SurrogateTerm s = clipped_surrogate(ratio, advantage, config.clip_range);
  double value = s.value - config.kl_coefficient * kl_estimate(ratio, log_ratio);
  double weight = ratio * (s.d_ratio - config.kl_coefficient * log_ratio);
  return {value, weight, ratio, log_ratio};
}

void check_alignment(const PolicyParams& params, const Rollout& rollout,
                     std::span<const double> advantages) {
  if (advantages.size() != rollout.size()) {
    throw DomainError("ppo: " + std::to_string(advantages.size()) + " advantages for " +
                      std::to_string(rollout.size()) + " rollout items");
  }
  for (const RolloutItem& item : rollout.items) {
    if (item.question_index >= params.logits().size() ||
        params.question_ids()[item.question_index] != item.question_id) {
      throw DomainError("ppo: rollout item '" + item.question_id + "' does not match params");
    }
  }
}

}  // namespace

std::string_view task_name(Task task) noexcept {
  return task == Task::kPrediction ? "prediction" : "ranking";
}

std::optional<Task> parse_task(std::string_view name) noexcept {
  if (name == "prediction") return Task::kPrediction;
  if (name == "ranking") return Task::kRanking;
  return std::nullopt;
}

std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) return {};
  const double top = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - top);
    total += out[i];
  }
  for (double& v : out) v /= total;
  return out;
}

PolicyParams PolicyParams::uniform(Task task, std::span<const Question> questions,
                                   double concentration) {
  std::vector<std::string> ids;
  std::vector<std::vector<double>> logits;
  for (const Question& q : questions) {
    ids.push_back(q.id);
    logits.emplace_back(q.options.size(), 0.0);
  }
  return from_logits(task, std::move(ids), std::move(logits), concentration);
}

PolicyParams PolicyParams::from_logits(Task task, std::vector<std::string> question_ids,
                                       std::vector<std::vector<double>> logits,
                                       double concentration) {
  if (question_ids.size() != logits.size()) {
    throw DomainError("policy: question id count does not match logit rows");
  }
  if (!(concentration > 0.0) || !std::isfinite(concentration)) {
    throw DomainError("policy: concentration must be positive");
  }
  PolicyParams p;
  p.task_ = task;
  p.concentration_ = concentration;
  for (std::size_t i = 0; i < question_ids.size(); ++i) {
    check_row(logits[i], question_ids[i]);
    if (!p.lookup_.emplace(question_ids[i], i).second) {
      throw DomainError("policy: duplicate question id '" + question_ids[i] + "'");
    }
  }
  p.question_ids_ = std::move(question_ids);
  p.logits_ = std::move(logits);
  return p;
}

std::size_t PolicyParams::index_of(std::string_view question_id) const {
  auto it = lookup_.find(question_id);
  if (it == lookup_.end()) {
    throw DomainError("policy: unknown question '" + std::string(question_id) + "'");
  }
  return it->second;
}

PolicyParams PolicyParams::with_logits(std::vector<std::vector<double>> logits) const {
  if (logits.size() != logits_.size()) throw DomainError("policy: logit row count changed");
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (logits[i].size() != logits_[i].size()) throw DomainError("policy: logit row size changed");
    check_row(logits[i], question_ids_[i]);
  }
  PolicyParams next = *this;
  next.logits_ = std::move(logits);
  return next;
}

std::size_t PPOConfig::rollout_size(std::size_t num_questions) const noexcept {
  std::size_t per_round = questions_per_round == 0 ? std::min(num_questions, kMaxQuestionsPerRound)
                                                   : std::min(questions_per_round, num_questions);
  return per_round * samples_per_question;
}

void PPOConfig::validate(std::size_t num_questions) const {
  if (!(clip_range > 0.0)) throw ConfigError("ppo.clip_range", "must be positive");
  if (!(kl_coefficient >= 0.0)) throw ConfigError("ppo.kl_coefficient", "must be >= 0");
  if (!(learning_rate > 0.0)) throw ConfigError("ppo.learning_rate", "must be positive");
  if (ppo_epochs < 1) throw ConfigError("ppo.ppo_epochs", "must be >= 1");
  if (minibatch_count < 1) throw ConfigError("ppo.minibatch_count", "must be >= 1");
  if (!(discount > 0.0 && discount <= 1.0)) throw ConfigError("ppo.discount", "must lie in (0, 1]");
  if (samples_per_question < 1) throw ConfigError("ppo.samples_per_question", "must be >= 1");
  if (whiten_rewards && rollout_size(num_questions) < 2) {
    throw ConfigError("ppo.samples_per_question",
                      "whitening needs a rollout of at least 2 items");
  }
  if (optimizer == Optimizer::kAdam) {
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0)) throw ConfigError("ppo.adam_beta1", "must lie in [0, 1)");
    if (!(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) throw ConfigError("ppo.adam_beta2", "must lie in [0, 1)");
    if (!(adam_epsilon > 0.0)) throw ConfigError("ppo.adam_epsilon", "must be positive");
  }
}

Rollout sample_rollout(const PolicyParams& params, std::span<const std::string> question_ids,
                       std::mt19937_64& rng) {
  Rollout rollout;
  rollout.items.reserve(question_ids.size());
  for (const std::string& id : question_ids) {
    const std::size_t q = params.index_of(id);
    RolloutItem item;
    item.question_id = id;
    item.question_index = q;
    if (params.task() == Task::kPrediction) {
      item.prediction =
          Prediction::from_probs(sample_dirichlet(params.row(q), params.concentration(), rng));
      item.log_prob_old =
          dirichlet_log_density(params.row(q), params.concentration(), item.prediction.probs);
    } else {
      item.prediction = Prediction::from_ranking(sample_plackett_luce(params.row(q), rng));
      item.log_prob_old = plackett_luce_log_prob(params.row(q), item.prediction.ranking);
    }
    if (!std::isfinite(item.log_prob_old)) {
      throw DomainError("sample_rollout: non-finite log-probability for question '" + id + "'");
    }
    rollout.items.push_back(std::move(item));
  }
  return rollout;
}

double log_prob(const PolicyParams& params, std::string_view question_id,
                const Prediction& prediction) {
  const std::size_t q = params.index_of(question_id);
  check_shape(params, q, prediction);
  return params.task() == Task::kPrediction
             ? dirichlet_log_density(params.row(q), params.concentration(), prediction.probs)
             : plackett_luce_log_prob(params.row(q), prediction.ranking);
}

std::vector<double> log_prob_gradient(const PolicyParams& params, std::size_t question_index,
                                      const Prediction& prediction) {
  if (question_index >= params.logits().size()) throw DomainError("log_prob_gradient: bad index");
  check_shape(params, question_index, prediction);
  return params.task() == Task::kPrediction
             ? dirichlet_gradient(params.row(question_index), params.concentration(),
                                  prediction.probs)
             : plackett_luce_gradient(params.row(question_index), prediction.ranking);
}

std::vector<double> whiten(std::span<const double> rewards) {
  if (rewards.size() < 2) throw DomainError("whiten: need at least 2 rewards");
  const double mean = anchored_mean(rewards);
  double sq = 0.0;
  for (double r : rewards) sq += (r - mean) * (r - mean);
  const double var = sq / static_cast<double>(rewards.size());
  std::vector<double> out(rewards.size());
  const double scale = var < kDegenerateVariance ? 1.0 : 1.0 / std::sqrt(var);
  for (std::size_t i = 0; i < rewards.size(); ++i) out[i] = (rewards[i] - mean) * scale;
  return out;
}

SurrogateTerm clipped_surrogate(double ratio, double advantage, double clip_range) noexcept {
  const double unclipped = ratio * advantage;
  const double clipped = std::clamp(ratio, 1.0 - clip_range, 1.0 + clip_range) * advantage;
  if (unclipped <= clipped) return {unclipped, advantage};
  return {clipped, 0.0};
}

double surrogate_objective(const PolicyParams& params, const Rollout& rollout,
                           std::span<const double> advantages, const PPOConfig& config,
                           std::span<const std::size_t> indices) {
  check_alignment(params, rollout, advantages);
  if (indices.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i : indices) {
    total += sample_term(params, rollout.items.at(i), advantages[i], config).value;
  }
  return total / static_cast<double>(indices.size());
}

std::vector<std::vector<double>> surrogate_gradient(const PolicyParams& params,
                                                    const Rollout& rollout,
                                                    std::span<const double> advantages,
                                                    const PPOConfig& config,
                                                    std::span<const std::size_t> indices) {
  check_alignment(params, rollout, advantages);
  std::vector<std::vector<double>> grad;
  grad.reserve(params.logits().size());
  for (const auto& row : params.logits()) grad.emplace_back(row.size(), 0.0);
  if (indices.empty()) return grad;
  const double scale = 1.0 / static_cast<double>(indices.size());
  for (std::size_t i : indices) {
    const RolloutItem& item = rollout.items.at(i);
    SampleTerm term = sample_term(params, item, advantages[i], config);
    if (term.weight == 0.0) continue;
    std::vector<double> g = log_prob_gradient(params, item.question_index, item.prediction);
    auto& row = grad[item.question_index];
    for (std::size_t k = 0; k < g.size(); ++k) row[k] += scale * term.weight * g[k];
  }
  return grad;
}

PPOResult ppo_update(const PolicyParams& params, const Rollout& rollout,
                     std::span<const double> advantages, const PPOConfig& config,
                     std::uint64_t shuffle_seed) {
  check_alignment(params, rollout, advantages);
  PolicyParams current = params;
  PPOStats stats;
  if (rollout.size() == 0) return {current, stats};

  std::mt19937_64 rng(shuffle_seed);
  std::vector<std::size_t> order(rollout.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t batches =
      std::min<std::size_t>(static_cast<std::size_t>(config.minibatch_count), rollout.size());

  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
  if (config.optimizer == Optimizer::kAdam) {
    for (const auto& row : params.logits()) {
      first_moment.emplace_back(row.size(), 0.0);
      second_moment.emplace_back(row.size(), 0.0);
    }
  }

  double loss_total = 0.0;
  long steps = 0;
  for (int epoch = 0; epoch < config.ppo_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t b = 0; b < batches; ++b) {
      const std::size_t begin = b * order.size() / batches;
      const std::size_t end = (b + 1) * order.size() / batches;
      std::span<const std::size_t> batch(order.data() + begin, end - begin);

      loss_total -= surrogate_objective(current, rollout, advantages, config, batch);
      auto grad = surrogate_gradient(current, rollout, advantages, config, batch);
      ++steps;

      std::vector<std::vector<double>> logits = current.logits();
      for (std::size_t q = 0; q < logits.size(); ++q) {
        for (std::size_t k = 0; k < logits[q].size(); ++k) {
          const double g = grad[q][k];
          if (!std::isfinite(g)) {
            throw DomainError("ppo_update: non-finite gradient for question '" +
                              current.question_ids()[q] + "' in epoch " +
                              std::to_string(epoch) + ", minibatch " + std::to_string(b));
          }
          if (config.optimizer == Optimizer::kSgd) {
            logits[q][k] += config.learning_rate * g;
          } else {
            double& m = first_moment[q][k];
            double& v = second_moment[q][k];
            m = config.adam_beta1 * m + (1.0 - config.adam_beta1) * g;
            v = config.adam_beta2 * v + (1.0 - config.adam_beta2) * g * g;
            const double m_hat = m / (1.0 - std::pow(config.adam_beta1, static_cast<double>(steps)));
            const double v_hat = v / (1.0 - std::pow(config.adam_beta2, static_cast<double>(steps)));
            logits[q][k] += config.learning_rate * m_hat / (std::sqrt(v_hat) + config.adam_epsilon);
          }
        }
      }
      current = current.with_logits(std::move(logits));
    }
  }

  stats.loss = steps > 0 ? loss_total / static_cast<double>(steps) : 0.0;
  double ratio_sum = 0.0;
  double kl_sum = 0.0;
  std::size_t clipped = 0;
  for (std::size_t i = 0; i < rollout.size(); ++i) {
    SampleTerm term = sample_term(current, rollout.items[i], advantages[i], config);
    ratio_sum += term.ratio;
    kl_sum += kl_estimate(term.ratio, term.log_ratio);
    if (std::abs(term.ratio - 1.0) > config.clip_range) ++clipped;
  }
  const double n = static_cast<double>(rollout.size());
  stats.mean_ratio = ratio_sum / n;
  stats.approx_kl = kl_sum / n;
  stats.clip_fraction = static_cast<double>(clipped) / n;
  return {std::move(current), stats};
}

Prediction greedy_prediction(const PolicyParams& params, std::string_view question_id) {
  const std::size_t q = params.index_of(question_id);
  if (params.task() == Task::kPrediction) return Prediction::from_probs(softmax(params.row(q)));
  return Prediction::from_ranking(to_ranking(params.row(q)));
}

}  // namespace fedrlhf
