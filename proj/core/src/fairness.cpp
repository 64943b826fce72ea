#include "fedrlhf/fairness.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fedrlhf/error.hpp"

namespace fedrlhf {

double anchored_mean(std::span<const double> values) {
  if (values.empty()) throw DomainError("mean of an empty set");
  const double anchor = values.front();
  double offset = 0.0;
  for (double v : values) offset += v - anchor;
  return anchor + offset / static_cast<double>(values.size());
}

double coefficient_of_variation(std::span<const double> rewards) {
  if (rewards.size() < 2) {
    throw DomainError("coefficient_of_variation: need at least 2 rewards, got " +
                      std::to_string(rewards.size()));
  }
  const double mean = anchored_mean(rewards);
  double sq = 0.0;
  for (double r : rewards) sq += (r - mean) * (r - mean);
  const double sigma = std::sqrt(sq / static_cast<double>(rewards.size()));
  return sigma / std::max(std::abs(mean), kCovMeanFloor);
}

FairnessReport fairness_index(const GroupRewardMatrix& matrix) {
  // GroupRewardMatrix::make already enforces >= 1 row and >= 2 groups.
  FairnessReport report;
  report.num_questions = matrix.num_questions();
  report.num_groups = matrix.num_groups();
  report.per_question_cov.reserve(matrix.num_questions());
  double total = 0.0;
  for (std::size_t j = 0; j < matrix.num_questions(); ++j) {
    double cov = coefficient_of_variation(matrix.row(j));
    report.per_question_cov.push_back(cov);
    total += 1.0 / (1.0 + cov * cov);
  }
  report.fi = total / static_cast<double>(matrix.num_questions());
  return report;
}

double unit_shift(MetricKind kind, double oriented_reward) noexcept {
  if (oriented_range(kind).lo < 0.0) return (oriented_reward + 1.0) / 2.0;
  return oriented_reward;
}

GroupRewardMatrix unit_shifted(const GroupRewardMatrix& matrix) {
  if (!matrix.metric()) return matrix;
  std::vector<double> shifted(matrix.values().begin(), matrix.values().end());
  for (double& v : shifted) v = unit_shift(*matrix.metric(), v);
  return GroupRewardMatrix::make(matrix.question_ids(), matrix.group_ids(), std::move(shifted),
                                 matrix.metric());
}

FairnessReport shifted_fairness_index(const GroupRewardMatrix& matrix) {
  return fairness_index(unit_shifted(matrix));
}

}  // namespace fedrlhf
