#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedrlhf/metrics.hpp"

namespace fedrlhf {

/// Oriented per-(question, group) rewards for one rollout. Rows are rollout
/// items (a question may appear more than once), columns are groups in
/// canonical order.
class GroupRewardMatrix {
 public:
  /// `rewards` is row-major, rows.size() x groups.size(). Requires at least
  /// one row, at least two groups, and finite values; throws ValidationError.
  /// `metric` records which reward produced the values; fairness uses it to
  /// map signed rewards into [0, 1].
  static GroupRewardMatrix make(std::vector<std::string> question_ids,
                                std::vector<std::string> group_ids,
                                std::vector<double> rewards,
                                std::optional<MetricKind> metric = std::nullopt);

  std::size_t num_questions() const noexcept { return question_ids_.size(); }
  std::size_t num_groups() const noexcept { return group_ids_.size(); }

  const std::vector<std::string>& question_ids() const noexcept { return question_ids_; }
  const std::vector<std::string>& group_ids() const noexcept { return group_ids_; }
  std::optional<MetricKind> metric() const noexcept { return metric_; }

  std::span<const double> row(std::size_t j) const {
    return {rewards_.data() + j * group_ids_.size(), group_ids_.size()};
  }
  double at(std::size_t j, std::size_t g) const { return rewards_[j * group_ids_.size() + g]; }
  std::span<const double> values() const noexcept { return rewards_; }

  bool operator==(const GroupRewardMatrix&) const = default;

 private:
  std::vector<std::string> question_ids_;
  std::vector<std::string> group_ids_;
  std::vector<double> rewards_;
  std::optional<MetricKind> metric_;
};

}  // namespace fedrlhf
