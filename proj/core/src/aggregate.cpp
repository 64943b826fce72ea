#include "fedrlhf/aggregate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "fedrlhf/error.hpp"

namespace fedrlhf {

GroupRewardMatrix GroupRewardMatrix::make(std::vector<std::string> question_ids,
                                          std::vector<std::string> group_ids,
                                          std::vector<double> rewards,
                                          std::optional<MetricKind> metric) {
  if (question_ids.empty()) throw ValidationError("reward matrix: no questions");
  if (group_ids.size() < 2) throw ValidationError("reward matrix: need at least 2 groups");
  if (rewards.size() != question_ids.size() * group_ids.size()) {
    throw ValidationError("reward matrix: expected " +
                          std::to_string(question_ids.size() * group_ids.size()) +
                          " entries, got " + std::to_string(rewards.size()));
  }
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    if (!std::isfinite(rewards[i])) {
      throw ValidationError("reward matrix: non-finite reward at row " +
                            std::to_string(i / group_ids.size()) + ", group '" +
                            group_ids[i % group_ids.size()] + "'");
    }
  }
  GroupRewardMatrix m;
  m.question_ids_ = std::move(question_ids);
  m.group_ids_ = std::move(group_ids);
  m.rewards_ = std::move(rewards);
  m.metric_ = metric;
  return m;
}

AlignmentHistory AlignmentHistory::uniform(std::size_t num_groups, double initial, double decay) {
  if (!(initial >= 0.0 && initial <= 1.0)) {
    throw DomainError("alignment history: initial value must lie in [0, 1]");
  }
  if (!(decay > 0.0 && decay < 1.0)) {
    throw DomainError("alignment history: decay must lie in (0, 1)");
  }
  return {std::vector<double>(num_groups, initial), decay};
}

void AggregationStrategy::validate() const {
  switch (kind) {
    case Kind::kFixedAlpha:
      if (!std::isfinite(alpha)) throw DomainError("fixed_alpha: alpha must be finite");
      break;
    case Kind::kAdaptiveAlpha:
      if (!(fi_threshold > 0.0 && fi_threshold <= 1.0)) {
        throw DomainError("adaptive_alpha: fi_threshold must lie in (0, 1]");
      }
      if (!(temperature > 0.0) || !std::isfinite(temperature)) {
        throw DomainError("adaptive_alpha: temperature must be positive");
      }
      break;
    default:
      break;
  }
}

std::string AggregationStrategy::label() const {
  std::string name(strategy_kind_name(kind));
  if (kind == Kind::kFixedAlpha) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", alpha);
    name += "_";
    name += buf;
  }
  return name;
}

std::optional<AggregationStrategy::Kind> parse_strategy_kind(std::string_view name) noexcept {
  using K = AggregationStrategy::Kind;
  for (K kind : {K::kMin, K::kMax, K::kAverage, K::kFixedAlpha, K::kAdaptiveAlpha}) {
    if (strategy_kind_name(kind) == name) return kind;
  }
  return std::nullopt;
}

std::string_view strategy_kind_name(AggregationStrategy::Kind kind) noexcept {
  switch (kind) {
    case AggregationStrategy::Kind::kMin: return "min";
    case AggregationStrategy::Kind::kMax: return "max";
    case AggregationStrategy::Kind::kAverage: return "average";
    case AggregationStrategy::Kind::kFixedAlpha: return "fixed_alpha";
    case AggregationStrategy::Kind::kAdaptiveAlpha: return "adaptive_alpha";
  }
  return "unknown";
}

double log_mean_exp(std::span<const double> x) {
  if (x.empty()) throw DomainError("log_mean_exp of an empty set");
  const double top = *std::max_element(x.begin(), x.end());
  double sum = 0.0;
  for (double v : x) sum += std::exp(v - top);
  return top + std::log(sum / static_cast<double>(x.size()));
}

AggregatedReward aggregate_min(const GroupRewardMatrix& matrix) {
  AggregatedReward out;
  out.per_question.reserve(matrix.num_questions());
  for (std::size_t j = 0; j < matrix.num_questions(); ++j) {
    auto row = matrix.row(j);
    out.per_question.push_back(*std::min_element(row.begin(), row.end()));
  }
  return out;
}

AggregatedReward aggregate_max(const GroupRewardMatrix& matrix) {
  AggregatedReward out;
  out.per_question.reserve(matrix.num_questions());
  for (std::size_t j = 0; j < matrix.num_questions(); ++j) {
    auto row = matrix.row(j);
    out.per_question.push_back(*std::max_element(row.begin(), row.end()));
  }
  return out;
}

AggregatedReward aggregate_average(const GroupRewardMatrix& matrix) {
  AggregatedReward out;
  out.per_question.reserve(matrix.num_questions());
  for (std::size_t j = 0; j < matrix.num_questions(); ++j) {
    out.per_question.push_back(anchored_mean(matrix.row(j)));
  }
  return out;
}

AggregatedReward aggregate_fixed_alpha(const GroupRewardMatrix& matrix, double alpha) {
  if (!std::isfinite(alpha)) throw DomainError("fixed_alpha: alpha must be finite");
  if (alpha == 0.0) return aggregate_average(matrix);

  AggregatedReward out;
  out.per_question.reserve(matrix.num_questions());
  std::vector<double> scaled(matrix.num_groups());
  for (std::size_t j = 0; j < matrix.num_questions(); ++j) {
    auto row = matrix.row(j);
    const auto [lo_it, hi_it] = std::minmax_element(row.begin(), row.end());
    const double lo = *lo_it;
    const double hi = *hi_it;
    // Factor out the extreme that alpha pulls toward so every exponent is <= 0.
    const double pivot = alpha > 0.0 ? hi : lo;
    double sum = 0.0;
    for (double r : row) sum += std::exp(alpha * (r - pivot));
    double value = pivot + std::log(sum / static_cast<double>(row.size())) / alpha;
    out.per_question.push_back(std::clamp(value, lo, hi));
  }
  return out;
}

std::vector<double> adaptive_weights(const AlignmentHistory& history, double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw DomainError("adaptive_weights: temperature must be positive");
  }
  if (history.h.empty()) throw DomainError("adaptive_weights: empty history");
  std::vector<double> logits(history.h.size());
  for (std::size_t g = 0; g < logits.size(); ++g) logits[g] = (1.0 - history.h[g]) / temperature;
  const double top = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (double& z : logits) {
    z = std::exp(z - top);
    total += z;
  }
  for (double& z : logits) z /= total;
  return logits;
}

AggregatedReward aggregate_adaptive(const GroupRewardMatrix& matrix,
                                    const AlignmentHistory& history, double fi_threshold,
                                    double temperature) {
  AggregationStrategy::adaptive_alpha(fi_threshold, temperature).validate();
  if (history.h.size() != matrix.num_groups()) {
    throw DomainError("aggregate_adaptive: history has " + std::to_string(history.h.size()) +
                      " groups, matrix has " + std::to_string(matrix.num_groups()));
  }
  const double fi = shifted_fairness_index(matrix).fi;
  if (fi >= fi_threshold) {
    AggregatedReward out = aggregate_average(matrix);
    out.gate_taken = GateBranch::kAverage;
    out.gate_fi = fi;
    return out;
  }

  std::vector<double> weights = adaptive_weights(history, temperature);
  AggregatedReward out;
  out.per_question.reserve(matrix.num_questions());
  std::vector<double> weighted(matrix.num_groups());
  for (std::size_t j = 0; j < matrix.num_questions(); ++j) {
    auto row = matrix.row(j);
    for (std::size_t g = 0; g < row.size(); ++g) weighted[g] = weights[g] * row[g];
    out.per_question.push_back(log_mean_exp(weighted));
  }
  out.weights_used = std::move(weights);
  out.gate_taken = GateBranch::kWeighted;
  out.gate_fi = fi;
  return out;
}

AggregatedReward aggregate(const GroupRewardMatrix& matrix, const AggregationStrategy& strategy,
                           const AlignmentHistory& history) {
  using K = AggregationStrategy::Kind;
  switch (strategy.kind) {
    case K::kMin: return aggregate_min(matrix);
    case K::kMax: return aggregate_max(matrix);
    case K::kAverage: return aggregate_average(matrix);
    case K::kFixedAlpha: return aggregate_fixed_alpha(matrix, strategy.alpha);
    case K::kAdaptiveAlpha:
      return aggregate_adaptive(matrix, history, strategy.fi_threshold, strategy.temperature);
  }
  throw DomainError("aggregate: unknown strategy");
}

AlignmentHistory update_history(const AlignmentHistory& history,
                                const GroupRewardMatrix& matrix) {
  if (history.h.size() != matrix.num_groups()) {
    throw DomainError("update_history: history has " + std::to_string(history.h.size()) +
                      " groups, matrix has " + std::to_string(matrix.num_groups()));
  }
  AlignmentHistory next = history;
  std::vector<double> column(matrix.num_questions());
  for (std::size_t g = 0; g < matrix.num_groups(); ++g) {
    for (std::size_t j = 0; j < matrix.num_questions(); ++j) {
      double r = matrix.at(j, g);
      column[j] = matrix.metric() ? unit_shift(*matrix.metric(), r) : r;
    }
    double batch_mean = anchored_mean(column);
    double h = history.decay * history.h[g] + (1.0 - history.decay) * batch_mean;
    next.h[g] = std::clamp(h, 0.0, 1.0);
  }
  return next;
}

}  // namespace fedrlhf
